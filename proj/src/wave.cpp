#include "qchaos/wave.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <numbers>
#include <string>

#include "qchaos/error.hpp"

namespace qchaos::wave {

namespace {

// FFTW's planner is not thread-safe; execution of distinct plans is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

void check_grid(std::int64_t grid) {
  if (grid < 2 || !is_power_of_two(grid))
    throw ValidationError("wave grid must be a power of two >= 2, got " + std::to_string(grid));
}

}  // namespace

bool is_power_of_two(std::int64_t n) { return n > 0 && (n & (n - 1)) == 0; }

std::int64_t next_power_of_two(std::int64_t n) {
  std::int64_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

WaveState::WaveState(std::int64_t grid) {
  check_grid(grid);
  amps_.assign(static_cast<std::size_t>(grid), complex{});
}

WaveState::WaveState(std::int64_t grid, std::vector<complex> amplitudes)
    : amps_(std::move(amplitudes)) {
  check_grid(grid);
  if (static_cast<std::int64_t>(amps_.size()) != grid)
    throw ValidationError("wave state: amplitude count does not match the grid");
}

WaveState WaveState::basis(std::int64_t grid, std::int64_t n0) {
  WaveState s(grid);
  if (n0 < -grid / 2 || n0 >= grid / 2)
    throw ValidationError("wave state: momentum " + std::to_string(n0) + " is off the grid");
  s.amps_[s.index_of(n0)] = 1.0;
  return s;
}

WaveState WaveState::coherent(std::int64_t grid, double n0, double theta0, double sigma_n) {
  if (!(sigma_n > 0.0)) throw ValidationError("coherent state: width must be positive");
  WaveState s(grid);
  const double g = static_cast<double>(grid);
  double norm = 0.0;
  for (std::size_t i = 0; i < s.amps_.size(); ++i) {
    double n = static_cast<double>(s.momentum(i));
    double d = n - n0;
    d -= g * std::floor(d / g + 0.5);
    double a = std::exp(-d * d / (4.0 * sigma_n * sigma_n));
    s.amps_[i] = std::polar(a, -n * theta0);
    norm += a * a;
  }
  const double scale = 1.0 / std::sqrt(norm);
  for (auto& z : s.amps_) z *= scale;
  return s;
}

double WaveState::norm2() const noexcept {
  double s = 0.0;
  for (const auto& z : amps_) s += std::norm(z);
  return s;
}

complex WaveState::overlap(const WaveState& other) const {
  if (other.grid() != grid()) throw ValidationError("overlap: grid mismatch");
  complex s{};
  for (std::size_t i = 0; i < amps_.size(); ++i) s += std::conj(amps_[i]) * other.amps_[i];
  return s;
}

KickedMap KickedMap::torus(double lambda_times_period, std::int64_t grid, int cells) {
  check_grid(grid);
  if (cells < 1) throw ValidationError("torus: cell count must be >= 1");
  KickedMap m;
  m.grid = grid;
  m.period = 4.0 * std::numbers::pi * cells / static_cast<double>(grid);
  m.lambda = lambda_times_period / m.period;
  return m;
}

AnglePhase angle_phase(std::int64_t grid, double strength, double (*f)(double)) {
  check_grid(grid);
  AnglePhase out(static_cast<std::size_t>(grid));
  const double dtheta = 2.0 * std::numbers::pi / static_cast<double>(grid);
  for (std::size_t k = 0; k < out.size(); ++k)
    out[k] = std::polar(1.0, -strength * f(dtheta * static_cast<double>(k)));
  return out;
}

struct Propagator::Plans {
  fftw_complex* buffer = nullptr;
  fftw_plan to_angle = nullptr;
  fftw_plan to_momentum = nullptr;

  explicit Plans(std::int64_t n) {
    std::lock_guard lock(planner_mutex());
    buffer = fftw_alloc_complex(static_cast<std::size_t>(n));
    to_angle = fftw_plan_dft_1d(static_cast<int>(n), buffer, buffer, FFTW_BACKWARD, FFTW_ESTIMATE);
    to_momentum =
        fftw_plan_dft_1d(static_cast<int>(n), buffer, buffer, FFTW_FORWARD, FFTW_ESTIMATE);
    if (!buffer || !to_angle || !to_momentum) throw NumericalError("FFTW planning failed");
  }
  ~Plans() {
    std::lock_guard lock(planner_mutex());
    if (to_angle) fftw_destroy_plan(to_angle);
    if (to_momentum) fftw_destroy_plan(to_momentum);
    if (buffer) fftw_free(buffer);
  }
  complex* data() { return reinterpret_cast<complex*>(buffer); }
};

Propagator::Propagator(const KickedMap& map) : map_(map) {
  check_grid(map.grid);
  if (!(map.period > 0.0) || !std::isfinite(map.period))
    throw ValidationError("kicked map: period T must be positive");
  if (!(map.lambda >= 0.0) || !std::isfinite(map.lambda))
    throw ValidationError("kicked map: kick strength must be nonnegative");
  if (map.window < 0 || map.window > map.grid)
    throw ValidationError("kicked map: absorption window must lie inside the grid");

  const auto n = static_cast<std::size_t>(map.grid);
  kinetic_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double m = static_cast<double>(static_cast<std::int64_t>(i) - map.grid / 2);
    // n^2 T/4 reduced modulo 2 pi before the phase is formed.
    double phase = std::fmod(map.period * m * m / 4.0, 2.0 * std::numbers::pi);
    kinetic_[i] = std::polar(1.0, -phase);
  }
  kick_ = angle_phase(map.grid, map.lambda, [](double th) { return std::cos(th); });
  plans_ = std::make_unique<Plans>(map.grid);
}

Propagator::~Propagator() = default;
Propagator::Propagator(Propagator&&) noexcept = default;
Propagator& Propagator::operator=(Propagator&&) noexcept = default;

void Propagator::step(WaveState& state, bool absorb) {
  if (state.grid() != map_.grid) throw ValidationError("propagator: grid mismatch");
  auto amps = state.amplitudes();
  complex* buf = plans_->data();
  for (std::size_t i = 0; i < amps.size(); ++i) buf[i] = kinetic_[i] * amps[i];
  finish(state, absorb);
}

void Propagator::step_after(WaveState& state, const AnglePhase& pre, bool absorb) {
  if (state.grid() != map_.grid) throw ValidationError("propagator: grid mismatch");
  if (static_cast<std::int64_t>(pre.size()) != map_.grid)
    throw ValidationError("propagator: angle operator grid mismatch");
  auto amps = state.amplitudes();
  complex* buf = plans_->data();
  const double inv_n = 1.0 / static_cast<double>(map_.grid);
  for (std::size_t i = 0; i < amps.size(); ++i) buf[i] = amps[i];
  fftw_execute(plans_->to_angle);
  for (std::size_t k = 0; k < amps.size(); ++k) buf[k] *= pre[k] * inv_n;
  fftw_execute(plans_->to_momentum);
  for (std::size_t i = 0; i < amps.size(); ++i) buf[i] *= kinetic_[i];
  finish(state, absorb);
}

// Expects the buffer to hold the momentum amplitudes after the first kinetic
// half-step; applies the kick, the second half-step and the projection.
void Propagator::finish(WaveState& state, bool absorb) {
  auto amps = state.amplitudes();
  complex* buf = plans_->data();
  const double inv_n = 1.0 / static_cast<double>(map_.grid);
  fftw_execute(plans_->to_angle);
  for (std::size_t k = 0; k < amps.size(); ++k) buf[k] *= kick_[k] * inv_n;
  fftw_execute(plans_->to_momentum);
  const bool project = absorb && map_.absorbing();
  const std::int64_t half = map_.window / 2;
  for (std::size_t i = 0; i < amps.size(); ++i) {
    std::int64_t n = state.momentum(i);
    if (project && (n <= -half || n >= half))
      amps[i] = 0.0;
    else
      amps[i] = kinetic_[i] * buf[i];
  }
}

}  // namespace qchaos::wave
