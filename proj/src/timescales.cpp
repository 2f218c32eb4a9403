#include "qchaos/timescales.hpp"

#include <cmath>
#include <string>

#include "qchaos/error.hpp"

namespace qchaos::timescales {

using qmath::EntropicIndex;

Graininess::Graininess(double mu_omega, double h, int degrees_of_freedom)
    : mu_omega_(mu_omega), h_(h), dof_(degrees_of_freedom) {
  if (!(mu_omega > 0.0) || !std::isfinite(mu_omega))
    throw ValidationError("graininess: phase-space volume must be positive");
  if (!(h > 0.0) || !std::isfinite(h)) throw ValidationError("graininess: h must be positive");
  if (degrees_of_freedom < 1) throw ValidationError("graininess: D must be >= 1");
  eta_ = mu_omega / std::pow(h, degrees_of_freedom);
  if (!(eta_ >= 1.0))
    throw ValidationError("graininess: eta = " + std::to_string(eta_) +
                          " < 1, the action is below one Planck cell");
  cells_ = std::max<std::int64_t>(1, std::llround(eta_));
}

double Graininess::rounding_discrepancy() const noexcept {
  return std::abs(static_cast<double>(cells_) - eta_) / eta_;
}

namespace {

void check_eta(double eta, const char* who) {
  if (!(eta >= 1.0) || !std::isfinite(eta))
    throw ValidationError(std::string(who) + ": eta must be a finite value >= 1");
}

void check_positive(double v, const char* who, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v))
    throw ValidationError(std::string(who) + ": " + name + " must be positive");
}

}  // namespace

double tau_q(double eta, EntropicIndex q, double h_ks_q) {
  check_eta(eta, "tau_q");
  check_positive(h_ks_q, "tau_q", "h_ks_q");
  return qmath::q_log(eta, q) / h_ks_q;
}

RelaxationLimit tau_relaxation_limit(double eta, double alpha, double h_ks_q) {
  check_positive(alpha, "tau_relaxation_limit", "alpha");
  RelaxationLimit out;
  out.exact = tau_q(eta, EntropicIndex(1.0 - alpha), h_ks_q);
  out.asymptote = std::pow(eta, alpha) / (alpha * h_ks_q);
  return out;
}

double ks_time_q(double h_ks_q) {
  check_positive(h_ks_q, "ks_time_q", "h_ks_q");
  return 1.0 / h_ks_q;
}

namespace {

// ln(1/mu) for the deformed atom measure; kept in log space so that large
// refinements do not overflow.
double log_inverse_measure(std::int64_t cells, int n, EntropicIndex q) {
  if (cells < 2) throw ValidationError("deformed_atom_measure: M must be >= 2");
  if (n < 0) throw ValidationError("deformed_atom_measure: n must be >= 0");
  const double lm = std::log(static_cast<double>(cells));
  const double factors = static_cast<double>(n) + 1.0;
  if (q.near_one()) return factors * lm * (1.0 - 0.5 * n * q.deformation() * lm);
  // (n+1) M^{1-q} - n = 1 + (n+1)(M^{1-q} - 1), accumulated through expm1.
  const double base_minus_one = factors * std::expm1(q.deformation() * lm);
  if (1.0 + base_minus_one <= 0.0)
    throw DomainError("deformed_atom_measure: q-product cutoff hit for M = " +
                      std::to_string(cells) + ", n = " + std::to_string(n) +
                      ", q = " + std::to_string(q.value()));
  return std::log1p(base_minus_one) / q.deformation();
}

}  // namespace

double deformed_atom_measure(std::int64_t cells, int n, EntropicIndex q) {
  return std::exp(-log_inverse_measure(cells, n, q));
}

std::vector<PowerLawRow> regular_power_law_check(std::int64_t cells, double alpha,
                                                 const std::vector<int>& n_list) {
  check_positive(alpha, "regular_power_law_check", "alpha");
  EntropicIndex q(1.0 - alpha);
  std::vector<PowerLawRow> rows;
  rows.reserve(n_list.size());
  for (int n : n_list) {
    PowerLawRow row;
    row.n = n;
    row.exact = deformed_atom_measure(cells, n, q);
    row.approx = 1.0 / (static_cast<double>(cells) * std::pow(n + 1.0, 1.0 / alpha));
    row.rel_error = std::abs(row.exact - row.approx) / row.exact;
    rows.push_back(row);
  }
  return rows;
}

GraininessEntropy graininess_hks(double eta, EntropicIndex q, double kappa) {
  check_eta(eta, "graininess_hks");
  check_positive(kappa, "graininess_hks", "kappa");
  GraininessEntropy out;
  out.at_kappa = qmath::q_log(eta, q);
  out.per_step = out.at_kappa / kappa;
  return out;
}

double deformed_entropy_sum(std::int64_t cells, int n, EntropicIndex q) {
  const double log_inv = log_inverse_measure(cells, n, q);
  // Normalisation fixes the effective atom count at 1/mu, so the sum of
  // 1/mu equal terms mu ln_q(1/mu) collapses to ln_q(1/mu).
  if (q.near_one()) return log_inv * (1.0 + 0.5 * q.deformation() * log_inv);
  return std::expm1(q.deformation() * log_inv) / q.deformation();
}

std::vector<TimescaleRow> timescale_curves(const CurveOptions& options) {
  if (!(options.eta_min >= 1.0) || !(options.eta_min < options.eta_max) ||
      !std::isfinite(options.eta_max))
    throw ValidationError("timescale curves: need 1 <= eta_min < eta_max");
  if (options.points < 2) throw ValidationError("timescale curves: points must be >= 2");
  if (options.q_list.empty()) throw ValidationError("timescale curves: q list is empty");
  check_positive(options.h_ks_q, "timescale curves", "h_ks_q");

  std::vector<EntropicIndex> qs;
  for (double q : options.q_list) qs.emplace_back(q);

  const auto points = static_cast<std::size_t>(options.points);
  std::vector<double> etas(points);
  const double denom = static_cast<double>(points - 1);
  for (std::size_t i = 0; i < points; ++i) {
    double f = static_cast<double>(i) / denom;
    if (options.spacing == EtaSpacing::logarithmic)
      etas[i] = options.eta_min * std::pow(options.eta_max / options.eta_min, f);
    else
      etas[i] = options.eta_min + (options.eta_max - options.eta_min) * f;
  }
  etas.front() = options.eta_min;
  etas.back() = options.eta_max;

  std::vector<TimescaleRow> rows(qs.size() * points);
  const auto total = static_cast<std::int64_t>(rows.size());
  const bool par = options.execution == Execution::parallel;
#pragma omp parallel for schedule(static) if (par)
  for (std::int64_t k = 0; k < total; ++k) {
    const auto idx = static_cast<std::size_t>(k);
    const EntropicIndex& q = qs[idx / points];
    const double eta = etas[idx % points];
    rows[idx] = {eta, q.value(), qmath::q_log(eta, q) / options.h_ks_q, options.h_ks_q};
  }
  return rows;
}

}  // namespace qchaos::timescales
