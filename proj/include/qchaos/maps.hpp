#pragma once

// Measure-preserving maps of the unit circle and the unit square, and grid
// partitions of their phase spaces.

#include <cstdint>
#include <string>

namespace qchaos::maps {

/// A phase-space point. One-dimensional maps ignore y.
struct Point {
  double x = 0.0;
  double y = 0.0;
};

enum class MapKind { rotation, doubling, baker, cat };

/// A named measure-preserving map with its parameters.
///
/// rotation: x -> x + omega/2 (mod 1) on the circle, i.e. a rotation by the
///           angle omega*pi with omega = numerator/denominator.
/// doubling: x -> 2x (mod 1).
/// baker:    (x, y) -> (2x mod 1, (y + floor(2x))/2) on the unit square.
/// cat:      (x, y) -> (2x + y, x + y) (mod 1), Arnold's cat map.
class MapSpec {
 public:
  static MapSpec rotation(std::int64_t numerator, std::int64_t denominator);
  static MapSpec doubling();
  static MapSpec baker();
  static MapSpec cat();

  /// Parses "doubling", "baker", "cat", "rotation" (omega = 1/2) or
  /// "rotation:p/q".
  static MapSpec parse(const std::string& text);

  MapKind kind() const noexcept { return kind_; }
  int dimension() const noexcept;
  std::string name() const;

  double rotation_shift() const noexcept { return shift_; }

  void apply(Point& p) const noexcept {
    switch (kind_) {
      case MapKind::rotation:
        p.x += shift_;
        if (p.x >= 1.0) p.x -= 1.0;
        break;
      case MapKind::doubling:
        p.x += p.x;
        if (p.x >= 1.0) p.x -= 1.0;
        break;
      case MapKind::baker: {
        double x2 = p.x + p.x;
        if (x2 >= 1.0) {
          p.x = x2 - 1.0;
          p.y = 0.5 * (p.y + 1.0);
        } else {
          p.x = x2;
          p.y = 0.5 * p.y;
        }
        break;
      }
      case MapKind::cat: {
        double nx = 2.0 * p.x + p.y;
        double ny = p.x + p.y;
        nx -= static_cast<double>(static_cast<int>(nx));
        ny -= static_cast<double>(static_cast<int>(ny));
        p.x = nx;
        p.y = ny;
        break;
      }
    }
  }

 private:
  MapKind kind_ = MapKind::doubling;
  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
  double shift_ = 0.0;
};

/// Axis-aligned equal-cell partition. For one-dimensional maps cells_y is 1.
class GridPartition {
 public:
  GridPartition(int cells_x, int cells_y);

  /// m_a cells per axis on a phase space of the given dimension.
  static GridPartition uniform(int cells_per_axis, int dimension);

  /// The generating partition used for each map kind: two-cell left/right
  /// split for doubling and baker, a 2x2 grid for cat, four arcs for rotations.
  static GridPartition generating_for(const MapSpec& map);

  int cells_x() const noexcept { return cells_x_; }
  int cells_y() const noexcept { return cells_y_; }
  int cell_count() const noexcept { return cells_x_ * cells_y_; }

  int label(const Point& p) const noexcept {
    int ix = static_cast<int>(p.x * cells_x_);
    int iy = static_cast<int>(p.y * cells_y_);
    if (ix >= cells_x_) ix = cells_x_ - 1;
    if (iy >= cells_y_) iy = cells_y_ - 1;
    return ix + cells_x_ * iy;
  }

 private:
  int cells_x_;
  int cells_y_;
};

}  // namespace qchaos::maps
