#include "qchaos/qmath.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "qchaos/error.hpp"

namespace qchaos::qmath {

namespace {

// Neumaier compensated sum; the 1e-12 normalisation check must survive
// tables with millions of entries.
double stable_sum(std::span<const double> v) {
  double sum = 0.0;
  double c = 0.0;
  for (double x : v) {
    double t = sum + x;
    if (std::abs(sum) >= std::abs(x))
      c += (sum - t) + x;
    else
      c += (x - t) + sum;
    sum = t;
  }
  return sum + c;
}

void require_positive(double x, const char* what) {
  if (!(x > 0.0) || !std::isfinite(x))
    throw DomainError(std::string(what) + " requires a positive finite argument, got " +
                      std::to_string(x));
}

// Term p ln_q(1/p) = (p^q - p)/(1-q), written through expm1 so that the
// value stays accurate for q close to (but not within the threshold of) 1.
double entropy_term(double p, EntropicIndex q) {
  double log_inv = -std::log(p);
  if (q.near_one()) return p * log_inv * (1.0 + 0.5 * q.deformation() * log_inv);
  return p * std::expm1(q.deformation() * log_inv) / q.deformation();
}

}  // namespace

EntropicIndex::EntropicIndex(double q, double near_one) : q_(q) {
  if (!std::isfinite(q)) throw ValidationError("entropic index q must be finite");
  if (!(near_one >= 0.0)) throw ValidationError("near-one threshold must be nonnegative");
  near_one_ = std::abs(1.0 - q) < near_one;
}

ProbabilityVector::ProbabilityVector(std::vector<double> p) : p_(std::move(p)) {
  if (p_.empty()) throw ValidationError("probability vector is empty");
  for (double v : p_) {
    if (!std::isfinite(v) || v < 0.0)
      throw ValidationError("probability vector has a negative or non-finite entry");
  }
  double total = stable_sum(p_);
  if (std::abs(total - 1.0) > 1e-12)
    throw ValidationError("probability vector sums to " + std::to_string(total) + ", not 1");
}

ProbabilityVector ProbabilityVector::from_counts(std::span<const std::uint64_t> counts) {
  std::uint64_t total = std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
  if (total == 0) throw ValidationError("cannot normalise an all-zero count table");
  std::vector<double> p(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i)
    p[i] = static_cast<double>(counts[i]) / static_cast<double>(total);
  return ProbabilityVector(std::move(p));
}

double q_log(double x, EntropicIndex q) {
  require_positive(x, "q_log");
  double lx = std::log(x);
  if (q.near_one()) return lx * (1.0 + 0.5 * q.deformation() * lx);
  return std::expm1(q.deformation() * lx) / q.deformation();
}

double q_exp(double x, EntropicIndex q) {
  double base_minus_one = q.deformation() * x;
  if (1.0 + base_minus_one <= 0.0) return 0.0;
  if (q.near_one()) return std::exp(x) * (1.0 - 0.5 * q.deformation() * x * x);
  return std::exp(std::log1p(base_minus_one) / q.deformation());
}

double q_sum(double x, double y, EntropicIndex q) {
  if (q.near_one()) return x + y;
  return x + y + q.deformation() * x * y;
}

double q_diff(double x, double y, EntropicIndex q) {
  if (q.near_one()) return x - y;
  double denom = 1.0 + q.deformation() * y;
  if (denom == 0.0)
    throw DomainError("q_diff pole: y = 1/(q-1) with q = " + std::to_string(q.value()));
  return (x - y) / denom;
}

namespace {

// [1 + a]_+^{1/(1-q)} where a = base - 1 was accumulated from expm1 terms.
CutoffValue deformed_power(double a, EntropicIndex q) {
  if (1.0 + a <= 0.0) return {0.0, true};
  return {std::exp(std::log1p(a) / q.deformation()), false};
}

}  // namespace

CutoffValue q_prod(double x, double y, EntropicIndex q) {
  require_positive(x, "q_prod");
  require_positive(y, "q_prod");
  if (q.near_one()) return {x * y, false};
  double a = std::expm1(q.deformation() * std::log(x));
  double b = std::expm1(q.deformation() * std::log(y));
  return deformed_power(a + b, q);
}

CutoffValue q_div(double x, double y, EntropicIndex q) {
  require_positive(x, "q_div");
  require_positive(y, "q_div");
  if (q.near_one()) return {x / y, false};
  double a = std::expm1(q.deformation() * std::log(x));
  double b = std::expm1(q.deformation() * std::log(y));
  return deformed_power(a - b, q);
}

double tsallis_entropy(const ProbabilityVector& p, EntropicIndex q) {
  double s = 0.0;
  for (double pi : p.values()) {
    if (pi == 0.0) {
      if (q.value() <= 0.0)
        throw DomainError("Tsallis entropy with a zero weight is undefined for q <= 0");
      continue;
    }
    s += entropy_term(pi, q);
  }
  return s;
}

double tsallis_entropy_counts(std::span<const std::uint64_t> counts, EntropicIndex q) {
  std::uint64_t total = std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
  if (total == 0) throw ValidationError("cannot normalise an all-zero count table");
  double inv_total = 1.0 / static_cast<double>(total);
  double s = 0.0;
  for (std::uint64_t c : counts) {
    if (c == 0) {
      if (q.value() <= 0.0)
        throw DomainError("Tsallis entropy with a zero weight is undefined for q <= 0");
      continue;
    }
    s += entropy_term(static_cast<double>(c) * inv_total, q);
  }
  return s;
}

}  // namespace qchaos::qmath
