#pragma once

// Partition refinement under a measure-preserving map and finite-step
// estimates of the (q-deformed) Kolmogorov-Sinai entropy.
//
// Atom measures are Monte-Carlo itinerary frequencies: sample points are
// drawn uniformly, iterated forward, and the sequence of cell labels they
// visit is the itinerary that names their refinement atom.

#include <cstdint>
#include <utility>
#include <vector>

#include "qchaos/execution.hpp"
#include "qchaos/maps.hpp"
#include "qchaos/qmath.hpp"

namespace qchaos::partitions {

/// Sample points are generated in fixed-size blocks, each from its own
/// engine seeded with (seed, block index). The block layout, not the worker
/// count, fixes the random stream.
inline constexpr std::size_t kSampleBlock = std::size_t{1} << 16;

/// Upper bound on the number of distinct atoms kept at any step.
inline constexpr std::size_t kMaxAtoms = 10'000'000;

struct RefineOptions {
  int n_max = 12;
  std::size_t samples = 1'000'000;
  std::uint64_t seed = 0;
  /// Iterate the k-fold composition T^k, labelling each composed step by the
  /// joined partition Q v T^-1 Q v ... v T^-(k-1) Q.
  int kappa = 1;
  Execution execution = Execution::parallel;
};

/// One refinement atom: its itinerary encoded as a radix-m integer (oldest
/// label most significant) and the number of samples that followed it.
struct Atom {
  std::uint64_t itinerary = 0;
  std::uint64_t count = 0;

  friend bool operator==(const Atom&, const Atom&) = default;
};

/// Atom tables of the refinements v_{j=0}^n T^-j Q for n = 0..n_max.
class RefinementAtoms {
 public:
  RefinementAtoms(int symbol_count, std::size_t samples, std::vector<std::vector<Atom>> steps);

  int n_max() const noexcept { return static_cast<int>(steps_.size()) - 1; }
  int symbol_count() const noexcept { return symbols_; }
  std::size_t samples() const noexcept { return samples_; }
  /// Monte-Carlo tolerance on any single measure, 4 sqrt(m/samples).
  double tolerance() const noexcept { return tolerance_; }

  const std::vector<Atom>& atoms(int n) const { return steps_.at(static_cast<std::size_t>(n)); }
  std::size_t atom_count(int n) const { return atoms(n).size(); }

  qmath::ProbabilityVector measures(int n) const;
  /// Decodes an itinerary key at step n into n+1 cell labels.
  std::vector<int> itinerary(int n, std::uint64_t key) const;
  /// Empirical measure of T^-n A for every symbol A (the last label of each
  /// step-n itinerary).
  std::vector<double> cell_marginal(int n) const;

  friend bool operator==(const RefinementAtoms&, const RefinementAtoms&) = default;

 private:
  int symbols_;
  std::size_t samples_;
  double tolerance_;
  std::vector<std::vector<Atom>> steps_;
};

struct FitWindow {
  int first = 0;
  int last = 0;
};

struct KsEstimate {
  double q = 1.0;
  std::vector<double> entropies;
  std::vector<std::size_t> atom_counts;
  FitWindow window;
  double slope = 0.0;
  double slope_stderr = 0.0;
};

/// H_q of a partition with the given atom measures.
double partition_entropy(const qmath::ProbabilityVector& measures, qmath::EntropicIndex q);

RefinementAtoms refine(const maps::MapSpec& map, const maps::GridPartition& partition,
                       const RefineOptions& options);

/// Default tail window [n_max/2, n_max].
FitWindow default_window(int n_max);

KsEstimate ks_entropy_estimate(const RefinementAtoms& atoms, qmath::EntropicIndex q,
                               FitWindow window);

KsEstimate ks_entropy_estimate(const maps::MapSpec& map, const maps::GridPartition& partition,
                               qmath::EntropicIndex q, const RefineOptions& options,
                               FitWindow window);

struct RescaledCheck {
  KsEstimate base;      ///< estimate for T
  KsEstimate composed;  ///< estimate for T^kappa
  int kappa = 1;
  double per_step_base = 0.0;      ///< h(T)
  double per_step_composed = 0.0;  ///< h(T^kappa)/kappa
  double combined_stderr = 0.0;
};

/// Compares h_q(T) with h_q(T^kappa)/kappa. The composed run uses
/// max(n_max/kappa, 2) steps so that both runs resolve itineraries of the
/// same length in units of T.
RescaledCheck rescaled_entropy_check(const maps::MapSpec& map, int kappa,
                                     const maps::GridPartition& partition, qmath::EntropicIndex q,
                                     const RefineOptions& options);

}  // namespace qchaos::partitions
