#pragma once

// Loschmidt echo of kicked quantum maps, the q-deformed m-point correlation
// model and q-exponential decay fitting.

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "qchaos/execution.hpp"
#include "qchaos/qmath.hpp"
#include "qchaos/wave.hpp"

namespace qchaos::echo {

/// Self-adjoint perturbation B, multiplicative in the angle representation.
enum class Perturbation { cos_theta, sin_theta };

Perturbation parse_perturbation(const std::string& text);
std::string to_string(Perturbation b);

struct EchoSeries {
  std::vector<double> fidelity;  ///< M_t for t = 0..t_max
  double delta = 0.0;
  std::string system;

  std::size_t t_max() const noexcept { return fidelity.empty() ? 0 : fidelity.size() - 1; }
};

/// M(t) = |<psi0| (U'_delta)^-t U^t |psi0>|^2 with U'_delta = U exp(-i delta B),
/// by propagating psi0 forward with U and with U'_delta and taking the overlap.
/// The base map must be closed (no absorption window).
EchoSeries loschmidt_echo(const wave::KickedMap& base, Perturbation b, double delta,
                          const wave::WaveState& psi0, int t_max);

struct EnsembleOptions {
  int members = 48;
  std::uint64_t seed = 0;
  Execution execution = Execution::parallel;
};

/// Echo averaged over coherent states with uniformly random centres on the
/// torus; the packet width is sqrt(1/(2T)) levels (equal spread in angle and
/// scaled momentum).
EchoSeries ensemble_echo(const wave::KickedMap& base, Perturbation b, double delta, int t_max,
                         const EnsembleOptions& options);

/// K / e_q(lambda_q m) with K = eta/N and lambda_q = ln_q(eta).
double q_correlation_model(double eta, std::int64_t n_states, qmath::EntropicIndex q, int m);

/// Measure of one m-fold intersection T_{t1}A_{j1} ∩ ... ∩ T_{tm}A_{jm}.
struct IntersectionMeasure {
  std::vector<int> cells;  ///< j1..jm
  double measure = 0.0;
};

/// (eta/N) sum [(g_{j1})^-1 (x)_q ... (x)_q (g_{jm})^-1]^-1 mu(intersection).
/// Throws DomainError naming the term whose q-product hits the cutoff.
double q_correlation_discrete(double eta, std::int64_t n_states, const std::vector<double>& gammas,
                              const std::vector<IntersectionMeasure>& intersections,
                              qmath::EntropicIndex q);

/// 1 - 2/(3D), the entropic index of the regular (power-law) echo regime.
double regular_index(int degrees_of_freedom);

// ---------------------------------------------------------------------------
// q-exponential decay fitting

struct DecayFitOptions {
  int t_first = 0;
  int t_last = std::numeric_limits<int>::max();
  /// Points with M_t <= floor are excluded.
  double floor = 1e-12;
  /// Points with M_t > ceiling are excluded (restricts the fit to the decay
  /// band, e.g. 0.5 to skip an initial plateau).
  double ceiling = std::numeric_limits<double>::infinity();
  double q_min = 0.0;
  double q_max = 1.5;
  int q_grid = 151;
  double rate_min = 1e-6;
  double rate_max = 1e3;
};

enum class FitStatus { ok, no_decay };

struct DecayFit {
  FitStatus status = FitStatus::ok;
  double q_fid = 1.0;
  double rate = 0.0;
  double amplitude = 1.0;
  double rms_residual = 0.0;  ///< on ln M
  int t_first = 0;
  int t_last = 0;
  int points = 0;

  /// amplitude / e_{q_fid}(rate t).
  double model(double t) const;
};

/// Least-squares fit of ln M_t to ln(amplitude) - ln e_q(rate t): a q grid
/// with an inner golden-section search over log(rate), then golden-section
/// refinement of q. The amplitude is profiled out in closed form.
DecayFit fit_q_exponential(const std::vector<double>& series, const DecayFitOptions& options = {});

enum class Regime { lyapunov, regular, no_decay };

/// lyapunov when |q_fid - 1| <= tolerance, regular otherwise.
Regime classify(const DecayFit& fit, double tolerance = 0.05);
std::string to_string(Regime r);

}  // namespace qchaos::echo
