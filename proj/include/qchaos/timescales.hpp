#pragma once

// The unified time scale tau_q = ln_q(eta)/h_q, its logarithmic (q = 1) and
// power-law (q = 1 - alpha) limits, graininess bookkeeping and the deformed
// uncorrelation model of refinement-atom measures.

#include <cstdint>
#include <vector>

#include "qchaos/execution.hpp"
#include "qchaos/qmath.hpp"

namespace qchaos::timescales {

/// Planck-cell counting for a phase-space volume mu_omega at action scale h
/// with D degrees of freedom.
class Graininess {
 public:
  Graininess(double mu_omega, double h, int degrees_of_freedom);

  double mu_omega() const noexcept { return mu_omega_; }
  double h() const noexcept { return h_; }
  int degrees_of_freedom() const noexcept { return dof_; }
  /// eta = mu_omega / h^D (>= 1).
  double eta() const noexcept { return eta_; }
  /// M = round(eta), at least 1.
  std::int64_t cells() const noexcept { return cells_; }
  /// |M - eta|/eta, the rounding discrepancy of treating M = eta.
  double rounding_discrepancy() const noexcept;

 private:
  double mu_omega_;
  double h_;
  int dof_;
  double eta_;
  std::int64_t cells_;
};

struct TimescaleRow {
  double eta = 1.0;
  double q = 1.0;
  double tau = 0.0;
  double h_ks_q = 1.0;
};

double tau_q(double eta, qmath::EntropicIndex q, double h_ks_q);

struct RelaxationLimit {
  double exact = 0.0;      ///< tau_q(eta, 1 - alpha, h)
  double asymptote = 0.0;  ///< eta^alpha / (alpha h)
  double relative_gap() const { return asymptote == 0.0 ? 0.0 : (asymptote - exact) / asymptote; }
};

RelaxationLimit tau_relaxation_limit(double eta, double alpha, double h_ks_q);

double ks_time_q(double h_ks_q);

/// mu = [(n+1) M^{1-q} - n]^{-1/(1-q)}: the measure of an (n+1)-fold
/// refinement atom when the factors combine through the q-product.
/// Reduces to M^{-(n+1)} at q = 1. Throws DomainError at the q-product cutoff.
double deformed_atom_measure(std::int64_t cells, int n, qmath::EntropicIndex q);

struct PowerLawRow {
  int n = 0;
  double exact = 0.0;
  double approx = 0.0;
  double rel_error = 0.0;
};

/// Compares deformed_atom_measure(M, n, 1 - alpha) with 1/(M (n+1)^{1/alpha}).
std::vector<PowerLawRow> regular_power_law_check(std::int64_t cells, double alpha,
                                                 const std::vector<int>& n_list);

struct GraininessEntropy {
  double at_kappa = 0.0;  ///< h_q(T_kappa) = ln_q(eta)
  double per_step = 0.0;  ///< ln_q(eta) / kappa
};

GraininessEntropy graininess_hks(double eta, qmath::EntropicIndex q, double kappa);

/// H_q of a normalised refinement whose atoms all have measure
/// deformed_atom_measure(M, n, q); equals (n+1) ln_q M.
double deformed_entropy_sum(std::int64_t cells, int n, qmath::EntropicIndex q);

enum class EtaSpacing { logarithmic, linear };

struct CurveOptions {
  std::vector<double> q_list;
  double eta_min = 1.0;
  double eta_max = 1e8;
  int points = 200;
  EtaSpacing spacing = EtaSpacing::logarithmic;
  double h_ks_q = 1.0;
  Execution execution = Execution::parallel;
};

/// Rows ordered q outer (as given), eta inner ascending.
std::vector<TimescaleRow> timescale_curves(const CurveOptions& options);

}  // namespace qchaos::timescales
