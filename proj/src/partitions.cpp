#include "qchaos/partitions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#ifdef _OPENMP
#include <parallel/algorithm>
#endif

#include "qchaos/error.hpp"
#include "qchaos/linfit.hpp"

namespace qchaos::partitions {

using maps::GridPartition;
using maps::MapSpec;
using maps::Point;

RefinementAtoms::RefinementAtoms(int symbol_count, std::size_t samples,
                                 std::vector<std::vector<Atom>> steps)
    : symbols_(symbol_count),
      samples_(samples),
      tolerance_(4.0 * std::sqrt(static_cast<double>(symbol_count) / static_cast<double>(samples))),
      steps_(std::move(steps)) {
  if (steps_.empty()) throw ValidationError("refinement needs at least step 0");
}

qmath::ProbabilityVector RefinementAtoms::measures(int n) const {
  const auto& table = atoms(n);
  std::vector<std::uint64_t> counts(table.size());
  std::transform(table.begin(), table.end(), counts.begin(), [](const Atom& a) { return a.count; });
  return qmath::ProbabilityVector::from_counts(counts);
}

std::vector<int> RefinementAtoms::itinerary(int n, std::uint64_t key) const {
  std::vector<int> labels(static_cast<std::size_t>(n) + 1);
  const auto m = static_cast<std::uint64_t>(symbols_);
  for (auto it = labels.rbegin(); it != labels.rend(); ++it) {
    *it = static_cast<int>(key % m);
    key /= m;
  }
  return labels;
}

std::vector<double> RefinementAtoms::cell_marginal(int n) const {
  std::vector<double> marginal(static_cast<std::size_t>(symbols_), 0.0);
  const auto m = static_cast<std::uint64_t>(symbols_);
  for (const Atom& a : atoms(n)) marginal[a.itinerary % m] += static_cast<double>(a.count);
  for (double& v : marginal) v /= static_cast<double>(samples_);
  return marginal;
}

double partition_entropy(const qmath::ProbabilityVector& measures, qmath::EntropicIndex q) {
  return qmath::tsallis_entropy(measures, q);
}

namespace {

// Largest radix-m key length that fits in 64 bits.
bool key_fits(std::uint64_t radix, int digits) {
  std::uint64_t limit = std::numeric_limits<std::uint64_t>::max();
  std::uint64_t value = 1;
  for (int i = 0; i < digits; ++i) {
    if (value > limit / radix) return false;
    value *= radix;
  }
  return true;
}

void generate_block(std::size_t block, std::uint64_t seed, int dimension, std::vector<Point>& pts) {
  const std::size_t begin = block * kSampleBlock;
  const std::size_t end = std::min(pts.size(), begin + kSampleBlock);
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(block)};
  std::mt19937_64 engine(seq);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  for (std::size_t i = begin; i < end; ++i) {
    pts[i].x = uniform(engine);
    pts[i].y = dimension == 2 ? uniform(engine) : 0.0;
  }
}

std::vector<Atom> count_runs(std::vector<std::uint64_t>& keys, Execution exec) {
#ifdef _OPENMP
  if (exec == Execution::parallel)
    __gnu_parallel::sort(keys.begin(), keys.end());
  else
    std::sort(keys.begin(), keys.end());
#else
  (void)exec;
  std::sort(keys.begin(), keys.end());
#endif
  std::vector<Atom> atoms;
  for (std::size_t i = 0; i < keys.size();) {
    std::size_t j = i + 1;
    while (j < keys.size() && keys[j] == keys[i]) ++j;
    atoms.push_back({keys[i], static_cast<std::uint64_t>(j - i)});
    i = j;
  }
  return atoms;
}

}  // namespace

RefinementAtoms refine(const MapSpec& map, const GridPartition& partition,
                       const RefineOptions& options) {
  if (options.n_max < 0) throw ValidationError("refine: n_max must be >= 0");
  if (options.n_max > 24) throw ValidationError("refine: n_max is capped at 24");
  if (options.samples < 10'000) throw ValidationError("refine: samples must be >= 10^4");
  if (options.kappa < 1) throw ValidationError("refine: kappa must be >= 1");
  if (map.dimension() == 1 && partition.cells_y() != 1)
    throw ValidationError("refine: a one-dimensional map needs a partition with one row");

  const auto m = static_cast<std::uint64_t>(partition.cell_count());
  const int digits = options.kappa * (options.n_max + 1);
  if (!key_fits(m, digits))
    throw ValidationError("refine: itineraries of " + std::to_string(digits) + " labels over " +
                          std::to_string(m) + " cells do not fit a 64-bit key");
  std::uint64_t joined = 1;
  for (int k = 0; k < options.kappa; ++k) joined *= m;
  if (joined > static_cast<std::uint64_t>(std::numeric_limits<int>::max()))
    throw ValidationError("refine: joined partition for kappa is too large");

  const std::size_t n_samples = options.samples;
  const bool par = options.execution == Execution::parallel;
  const int dim = map.dimension();
  const int kappa = options.kappa;

  std::vector<Point> pts(n_samples);
  const auto blocks = static_cast<std::int64_t>((n_samples + kSampleBlock - 1) / kSampleBlock);
#pragma omp parallel for schedule(static) if (par)
  for (std::int64_t b = 0; b < blocks; ++b)
    generate_block(static_cast<std::size_t>(b), options.seed, dim, pts);

  std::vector<std::uint64_t> keys(n_samples, 0);
  std::vector<std::uint64_t> scratch;
  std::vector<std::vector<Atom>> steps;
  steps.reserve(static_cast<std::size_t>(options.n_max) + 1);

  const auto n_signed = static_cast<std::int64_t>(n_samples);
  for (int n = 0; n <= options.n_max; ++n) {
#pragma omp parallel for schedule(static) if (par)
    for (std::int64_t i = 0; i < n_signed; ++i) {
      Point& p = pts[static_cast<std::size_t>(i)];
      std::uint64_t key = keys[static_cast<std::size_t>(i)];
      for (int k = 0; k < kappa; ++k) {
        key = key * m + static_cast<std::uint64_t>(partition.label(p));
        map.apply(p);
      }
      keys[static_cast<std::size_t>(i)] = key;
    }
    scratch = keys;
    steps.push_back(count_runs(scratch, options.execution));
    if (steps.back().size() > kMaxAtoms)
      throw ValidationError("refine: atom count exceeds the 10^7 cap at step " +
                            std::to_string(n));
  }
  return RefinementAtoms(static_cast<int>(joined), n_samples, std::move(steps));
}

FitWindow default_window(int n_max) { return {n_max / 2, n_max}; }

KsEstimate ks_entropy_estimate(const RefinementAtoms& atoms, qmath::EntropicIndex q,
                               FitWindow window) {
  if (window.first < 0 || window.last > atoms.n_max() || window.first > window.last)
    throw ValidationError("ks estimate: fit window [" + std::to_string(window.first) + ", " +
                          std::to_string(window.last) + "] is not inside [0, " +
                          std::to_string(atoms.n_max()) + "]");
  if (window.last - window.first + 1 < 3)
    throw ValidationError("ks estimate: fit window needs at least 3 distinct steps");

  KsEstimate est;
  est.q = q.value();
  est.window = window;
  for (int n = 0; n <= atoms.n_max(); ++n) {
    std::vector<std::uint64_t> counts;
    counts.reserve(atoms.atom_count(n));
    for (const Atom& a : atoms.atoms(n)) counts.push_back(a.count);
    est.entropies.push_back(qmath::tsallis_entropy_counts(counts, q));
    est.atom_counts.push_back(atoms.atom_count(n));
  }
  std::vector<double> xs, ys;
  for (int n = window.first; n <= window.last; ++n) {
    xs.push_back(n);
    ys.push_back(est.entropies[static_cast<std::size_t>(n)]);
  }
  LineFit fit = fit_line(xs, ys);
  est.slope = fit.slope;
  est.slope_stderr = fit.slope_stderr;
  return est;
}

KsEstimate ks_entropy_estimate(const MapSpec& map, const GridPartition& partition,
                               qmath::EntropicIndex q, const RefineOptions& options,
                               FitWindow window) {
  if (window.last - window.first + 1 < 3)
    throw ValidationError("ks estimate: fit window needs at least 3 distinct steps");
  return ks_entropy_estimate(refine(map, partition, options), q, window);
}

RescaledCheck rescaled_entropy_check(const MapSpec& map, int kappa,
                                     const GridPartition& partition, qmath::EntropicIndex q,
                                     const RefineOptions& options) {
  if (kappa < 1) throw ValidationError("rescaled check: kappa must be >= 1");
  RefineOptions base_opts = options;
  base_opts.kappa = 1;
  RescaledCheck out;
  out.kappa = kappa;
  out.base = ks_entropy_estimate(map, partition, q, base_opts, default_window(base_opts.n_max));

  if (kappa == 1) {
    out.composed = out.base;
  } else {
    RefineOptions comp_opts = options;
    comp_opts.kappa = kappa;
    comp_opts.n_max = std::max(options.n_max / kappa, 3);
    out.composed =
        ks_entropy_estimate(map, partition, q, comp_opts, default_window(comp_opts.n_max));
  }
  out.per_step_base = out.base.slope;
  out.per_step_composed = out.composed.slope / kappa;
  out.combined_stderr = std::hypot(out.base.slope_stderr, out.composed.slope_stderr / kappa);
  return out;
}

}  // namespace qchaos::partitions
