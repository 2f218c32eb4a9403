#pragma once

// q-deformed elementary functions, q-algebra and Tsallis entropy.
//
// Every function switches to its q -> 1 limit form when |1 - q| is below the
// index's threshold (default 1e-8), so callers never see the cancellation of
// the direct formulas near the classical point.

#include <cstdint>
#include <span>
#include <vector>

namespace qchaos::qmath {

inline constexpr double kDefaultNearOne = 1e-8;

/// The Tsallis deformation parameter q. Any finite real is legal; q = 1
/// selects the classical (Boltzmann-Gibbs / Shannon) forms.
class EntropicIndex {
 public:
  explicit EntropicIndex(double q, double near_one = kDefaultNearOne);

  double value() const noexcept { return q_; }
  /// 1 - q, the exponent that appears in every deformed formula.
  double deformation() const noexcept { return 1.0 - q_; }
  bool near_one() const noexcept { return near_one_; }

 private:
  double q_;
  bool near_one_;
};

/// Finite nonnegative weights summing to one within 1e-12.
class ProbabilityVector {
 public:
  explicit ProbabilityVector(std::vector<double> p);

  /// Normalised empirical frequencies. Zero counts are kept as zero weights.
  static ProbabilityVector from_counts(std::span<const std::uint64_t> counts);

  std::span<const double> values() const noexcept { return p_; }
  std::size_t size() const noexcept { return p_.size(); }
  double operator[](std::size_t i) const { return p_[i]; }

 private:
  std::vector<double> p_;
};

/// Result of an operation whose formula carries a [.]_+ cutoff. When the
/// cutoff is hit, value is 0 and cutoff is set.
struct CutoffValue {
  double value = 0.0;
  bool cutoff = false;
};

/// ln_q x = (x^{1-q} - 1)/(1-q). Throws DomainError for x <= 0.
double q_log(double x, EntropicIndex q);

/// e_q x = [1 + (1-q) x]_+^{1/(1-q)}; exactly 0 at and beyond the cutoff.
double q_exp(double x, EntropicIndex q);

double q_sum(double x, double y, EntropicIndex q);

/// Throws DomainError at the pole y = 1/(q-1).
double q_diff(double x, double y, EntropicIndex q);

/// x (x)_q y = [x^{1-q} + y^{1-q} - 1]_+^{1/(1-q)} for x, y > 0.
CutoffValue q_prod(double x, double y, EntropicIndex q);

/// x (/)_q y = [x^{1-q} - y^{1-q} + 1]_+^{1/(1-q)} for x, y > 0.
CutoffValue q_div(double x, double y, EntropicIndex q);

/// S_q = sum_i p_i ln_q(1/p_i) with k = 1. Zero weights contribute nothing
/// for q > 0; for q <= 0 a zero weight is rejected (the limit diverges).
double tsallis_entropy(const ProbabilityVector& p, EntropicIndex q);

/// Same as tsallis_entropy over raw counts, normalised by their total.
/// Avoids materialising a ProbabilityVector for large atom tables.
double tsallis_entropy_counts(std::span<const std::uint64_t> counts, EntropicIndex q);

}  // namespace qchaos::qmath
