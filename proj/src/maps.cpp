#include "qchaos/maps.hpp"

#include <numeric>

#include "qchaos/error.hpp"

namespace qchaos::maps {

MapSpec MapSpec::rotation(std::int64_t numerator, std::int64_t denominator) {
  if (denominator <= 0) throw ValidationError("rotation denominator must be positive");
  MapSpec m;
  m.kind_ = MapKind::rotation;
  std::int64_t g = std::gcd(numerator, denominator);
  if (g == 0) g = 1;
  m.num_ = numerator / g;
  m.den_ = denominator / g;
  // Angle omega*pi is the fraction omega/2 of the circle, reduced into [0, 1).
  std::int64_t period = 2 * m.den_;
  std::int64_t r = ((m.num_ % period) + period) % period;
  m.shift_ = static_cast<double>(r) / static_cast<double>(period);
  return m;
}

MapSpec MapSpec::doubling() {
  MapSpec m;
  m.kind_ = MapKind::doubling;
  return m;
}

MapSpec MapSpec::baker() {
  MapSpec m;
  m.kind_ = MapKind::baker;
  return m;
}

MapSpec MapSpec::cat() {
  MapSpec m;
  m.kind_ = MapKind::cat;
  return m;
}

MapSpec MapSpec::parse(const std::string& text) {
  if (text == "doubling") return doubling();
  if (text == "baker") return baker();
  if (text == "cat") return cat();
  if (text == "rotation") return rotation(1, 2);
  const std::string prefix = "rotation:";
  if (text.rfind(prefix, 0) == 0) {
    std::string frac = text.substr(prefix.size());
    auto slash = frac.find('/');
    try {
      std::size_t used = 0;
      if (slash == std::string::npos) {
        std::int64_t n = std::stoll(frac, &used);
        if (used != frac.size()) throw ValidationError("");
        return rotation(n, 1);
      }
      std::string a = frac.substr(0, slash);
      std::string b = frac.substr(slash + 1);
      std::int64_t n = std::stoll(a, &used);
      if (used != a.size()) throw ValidationError("");
      std::int64_t d = std::stoll(b, &used);
      if (used != b.size()) throw ValidationError("");
      return rotation(n, d);
    } catch (const std::exception&) {
      throw ValidationError("map: cannot parse rotation angle '" + frac + "', expected p/q");
    }
  }
  throw ValidationError("map: unknown map '" + text +
                        "', expected doubling, baker, cat or rotation[:p/q]");
}

int MapSpec::dimension() const noexcept {
  return (kind_ == MapKind::baker || kind_ == MapKind::cat) ? 2 : 1;
}

std::string MapSpec::name() const {
  switch (kind_) {
    case MapKind::rotation:
      return "rotation:" + std::to_string(num_) + "/" + std::to_string(den_);
    case MapKind::doubling:
      return "doubling";
    case MapKind::baker:
      return "baker";
    case MapKind::cat:
      return "cat";
  }
  return "unknown";
}

GridPartition::GridPartition(int cells_x, int cells_y) : cells_x_(cells_x), cells_y_(cells_y) {
  if (cells_x < 1 || cells_y < 1)
    throw ValidationError("partition needs at least one cell per axis");
  if (cells_x * cells_y > 256) throw ValidationError("partition cell count is capped at 256");
}

GridPartition GridPartition::uniform(int cells_per_axis, int dimension) {
  if (dimension == 1) return GridPartition(cells_per_axis, 1);
  return GridPartition(cells_per_axis, cells_per_axis);
}

GridPartition GridPartition::generating_for(const MapSpec& map) {
  switch (map.kind()) {
    case MapKind::doubling:
      return GridPartition(2, 1);
    case MapKind::baker:
      return GridPartition(2, 1);
    case MapKind::cat:
      return GridPartition(2, 2);
    case MapKind::rotation:
      return GridPartition(4, 1);
  }
  return GridPartition(2, 1);
}

}  // namespace qchaos::maps
