#pragma once

// Momentum-basis wave states and the split-operator propagator of the kicked
// rotator:  psi -> P e^{-iTn^2/4} F^-1 e^{-i lambda cos(theta)} F e^{-iTn^2/4} psi
// where F is the unitary momentum -> angle transform and P an optional
// projection onto the window (-N/2, N/2).

#include <complex>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

namespace qchaos::wave {

using complex = std::complex<double>;

bool is_power_of_two(std::int64_t n);
std::int64_t next_power_of_two(std::int64_t n);

/// Complex amplitudes over momenta n in [-grid/2, grid/2); index i holds
/// n = i - grid/2.
class WaveState {
 public:
  explicit WaveState(std::int64_t grid);
  WaveState(std::int64_t grid, std::vector<complex> amplitudes);

  /// |n0>.
  static WaveState basis(std::int64_t grid, std::int64_t n0);
  /// Gaussian packet centred at momentum n0 and angle theta0 with momentum
  /// width sigma_n, wrapped periodically on the grid.
  static WaveState coherent(std::int64_t grid, double n0, double theta0, double sigma_n);

  std::int64_t grid() const noexcept { return static_cast<std::int64_t>(amps_.size()); }
  std::int64_t momentum(std::size_t index) const noexcept {
    return static_cast<std::int64_t>(index) - grid() / 2;
  }
  std::size_t index_of(std::int64_t n) const noexcept {
    return static_cast<std::size_t>(n + grid() / 2);
  }

  std::span<const complex> amplitudes() const noexcept { return amps_; }
  std::span<complex> amplitudes() noexcept { return amps_; }

  double norm2() const noexcept;
  /// <this|other>
  complex overlap(const WaveState& other) const;

 private:
  std::vector<complex> amps_;
};

/// Parameters of one kicked-rotator period on a momentum grid.
struct KickedMap {
  double lambda = 0.0;       ///< kick strength
  double period = 1.0;       ///< T, time between kicks
  std::int64_t grid = 1024;  ///< number of momentum levels simulated
  /// Levels with |n| >= window/2 are absorbed each step; 0 disables absorption.
  std::int64_t window = 0;

  bool absorbing() const noexcept { return window > 0; }

  /// Kicked rotator on the torus: T = 4 pi cells / grid makes the kinetic
  /// phase periodic in n with period grid, so the truncated basis is exact.
  static KickedMap torus(double lambda_times_period, std::int64_t grid, int cells);
};

/// Diagonal multiplicative operator in the angle representation.
using AnglePhase = std::vector<complex>;

/// exp(-i strength f(theta_k)) on the angle grid theta_k = 2 pi k / grid.
AnglePhase angle_phase(std::int64_t grid, double strength, double (*f)(double));

/// Owns the transform workspace for one evolution. Not shareable across
/// threads; make one per worker.
class Propagator {
 public:
  explicit Propagator(const KickedMap& map);
  ~Propagator();
  Propagator(const Propagator&) = delete;
  Propagator& operator=(const Propagator&) = delete;
  Propagator(Propagator&&) noexcept;
  Propagator& operator=(Propagator&&) noexcept;

  const KickedMap& map() const noexcept { return map_; }

  /// Applies one period. When absorb is false the projection is skipped.
  void step(WaveState& state, bool absorb = true);
  /// Applies the diagonal angle operator, then one period: U * V.
  void step_after(WaveState& state, const AnglePhase& pre, bool absorb = true);

 private:
  void finish(WaveState& state, bool absorb);

  struct Plans;
  KickedMap map_;
  std::vector<complex> kinetic_;
  AnglePhase kick_;
  std::unique_ptr<Plans> plans_;
};

}  // namespace qchaos::wave
