#pragma once

// Kicked rotator with absorbing boundaries: survival probability,
// relaxation-time extraction, the relaxation-time scaling scan and
// complex-spectrum diagnostics of the non-unitary one-step map.

#include <complex>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qchaos/execution.hpp"
#include "qchaos/wave.hpp"

namespace qchaos::openrotor {

struct RotorParams {
  std::int64_t N = 256;   ///< absorption window, levels in (-N/2, N/2)
  double lambda = 64.0;   ///< kick strength
  double T = 7.0 / 64.0;  ///< kick period
  int grid_factor = 4;    ///< simulation grid = next power of two >= grid_factor N

  /// lambda = N/ratio, T = lambdaT/lambda.
  static RotorParams from_ratio(std::int64_t N, double lambda_times_period, double ratio,
                                int grid_factor = 4);

  double chaos_parameter() const noexcept { return lambda * T; }
  double ratio() const noexcept { return static_cast<double>(N) / lambda; }
  std::int64_t grid() const;

  /// Throws ValidationError naming the violated invariant.
  void validate() const;
  wave::KickedMap kicked_map() const;
};

/// One application of the absorbing map (or of the closed map when absorb
/// is false).
void rotor_step(wave::WaveState& state, const RotorParams& params, bool absorb = true);

struct SurvivalSeries {
  std::vector<double> probability;  ///< P_t for t = 0..t_max
  RotorParams params;
};

/// P_t = ||psi_t||^2 starting from |n = 0>.
SurvivalSeries survival_series(const RotorParams& params, int t_max);

struct RelaxationOptions {
  /// Local slope counts as asymptotic within this relative tolerance.
  double tolerance = 0.2;
  /// Fraction of the series (its end) used to fit the asymptotic slope.
  double tail_fraction = 0.25;
  /// Sliding-window length; 0 selects max(8, floor(sqrt(N)/2)).
  int window = 0;
};

struct RelaxationResult {
  bool resolved = false;
  double time = 0.0;              ///< onset of the asymptotic exponential decay
  double asymptotic_slope = 0.0;  ///< d ln P/dt over the tail
  int window = 0;
  std::string reason;             ///< set when unresolved
};

int default_relaxation_window(std::int64_t N);

/// The relaxation time is the first sliding-window start at which the local
/// slope of ln P_t is within `tolerance` of the tail slope.
RelaxationResult relaxation_time(const std::vector<double>& probability, std::int64_t N,
                                 const RelaxationOptions& options = {});
RelaxationResult relaxation_time(const SurvivalSeries& series,
                                 const RelaxationOptions& options = {});

/// t_max = multiplier sqrt(N), capped at 10^5.
struct TmaxRule {
  double multiplier = 16.0;
  int cap = 100'000;
  int operator()(std::int64_t N) const;
};

struct ScanRow {
  std::int64_t N = 0;
  double lambda = 0.0;
  double T = 0.0;
  int t_max = 0;
  RelaxationResult relaxation;
};

struct ScalingFit {
  double exponent = 0.0;
  double exponent_stderr = 0.0;
  double prefactor = 0.0;
  std::vector<ScanRow> rows;
  std::vector<std::string> warnings;
};

struct ScanOptions {
  double lambda_times_period = 7.0;
  double ratio = 4.0;
  int grid_factor = 4;
  TmaxRule t_max_rule;
  RelaxationOptions relaxation;
  Execution execution = Execution::parallel;
};

/// Fits log T(N) against log N over the resolved rows; unresolved rows are
/// excluded with a warning and fewer than 3 resolved rows is an error.
ScalingFit fit_scaling(std::vector<ScanRow> rows);

/// Requires at least 4 distinct N spanning a factor of 8 or more.
ScalingFit relaxation_scaling_scan(const std::vector<std::int64_t>& n_list,
                                   const ScanOptions& options = {});

struct SpectrumRing {
  std::vector<std::complex<double>> eigenvalues;
  double mean_modulus = 0.0;
  double ring_inner = 0.0;  ///< 10th percentile of |z|
  double ring_outer = 0.0;  ///< 90th percentile of |z|
  double ring_area = 0.0;   ///< pi (outer^2 - inner^2)
  double mean_spacing = 0.0;
  /// mean_spacing sqrt(N / ring_area)
  double spacing_ratio = 0.0;
  int qr_iterations = 0;
};

/// Spectrum of the one-step map restricted to the N-1 window levels.
/// Limited to N <= 512.
SpectrumRing spectrum_ring(const RotorParams& params);

}  // namespace qchaos::openrotor
