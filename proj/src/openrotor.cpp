#include "qchaos/openrotor.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

#include "qchaos/complex_eigen.hpp"
#include "qchaos/error.hpp"
#include "qchaos/linfit.hpp"

namespace qchaos::openrotor {

using wave::WaveState;

RotorParams RotorParams::from_ratio(std::int64_t N, double lambda_times_period, double ratio,
                                    int grid_factor) {
  if (!(ratio > 0.0)) throw ValidationError("rotor: ratio N/lambda must be positive");
  if (!(lambda_times_period > 0.0)) throw ValidationError("rotor: lambdaT must be positive");
  RotorParams p;
  p.N = N;
  p.lambda = static_cast<double>(N) / ratio;
  p.T = lambda_times_period / p.lambda;
  p.grid_factor = grid_factor;
  return p;
}

std::int64_t RotorParams::grid() const {
  return wave::next_power_of_two(static_cast<std::int64_t>(grid_factor) * N);
}

void RotorParams::validate() const {
  if (N < 8 || N % 2 != 0)
    throw ValidationError("N = " + std::to_string(N) + " violates constraint: even, >= 8");
  if (!(lambda >= 0.0) || !std::isfinite(lambda))
    throw ValidationError("lambda violates constraint: finite, >= 0");
  if (!(T > 0.0) || !std::isfinite(T)) throw ValidationError("T violates constraint: finite, > 0");
  if (grid_factor < 2) throw ValidationError("grid_factor violates constraint: >= 2");
  if (grid() > (std::int64_t{1} << 26)) throw ValidationError("rotor: simulation grid too large");
}

wave::KickedMap RotorParams::kicked_map() const {
  validate();
  wave::KickedMap m;
  m.lambda = lambda;
  m.period = T;
  m.grid = grid();
  m.window = N;
  return m;
}

void rotor_step(WaveState& state, const RotorParams& params, bool absorb) {
  wave::KickedMap map = params.kicked_map();
  if (state.grid() != map.grid)
    throw ValidationError("rotor_step: state grid " + std::to_string(state.grid()) +
                          " does not match the simulation grid " + std::to_string(map.grid));
  wave::Propagator prop(map);
  prop.step(state, absorb);
}

SurvivalSeries survival_series(const RotorParams& params, int t_max) {
  if (t_max < 1) throw ValidationError("survival: t_max must be >= 1");
  wave::KickedMap map = params.kicked_map();
  wave::Propagator prop(map);
  WaveState psi = WaveState::basis(map.grid, 0);
  SurvivalSeries out;
  out.params = params;
  out.probability.reserve(static_cast<std::size_t>(t_max) + 1);
  out.probability.push_back(1.0);
  for (int t = 1; t <= t_max; ++t) {
    prop.step(psi, true);
    out.probability.push_back(psi.norm2());
  }
  return out;
}

int default_relaxation_window(std::int64_t N) {
  return std::max(8, static_cast<int>(std::sqrt(static_cast<double>(N)) / 2.0));
}

RelaxationResult relaxation_time(const std::vector<double>& probability, std::int64_t N,
                                 const RelaxationOptions& options) {
  if (!(options.tolerance > 0.0)) throw ValidationError("relaxation: tolerance must be positive");
  if (!(options.tail_fraction > 0.0 && options.tail_fraction < 1.0))
    throw ValidationError("relaxation: tail fraction must lie in (0, 1)");
  RelaxationResult out;
  out.window = options.window > 0 ? options.window : default_relaxation_window(N);
  const std::size_t w = static_cast<std::size_t>(out.window);

  std::vector<double> t, lp;
  for (std::size_t i = 0; i < probability.size(); ++i) {
    double p = probability[i];
    if (!(p > 1e-300) || !std::isfinite(p)) break;
    t.push_back(static_cast<double>(i));
    lp.push_back(std::log(p));
  }
  const std::size_t len = t.size();
  const std::size_t tail = std::max<std::size_t>(
      {w, 3, static_cast<std::size_t>(std::ceil(options.tail_fraction * static_cast<double>(len)))});
  if (len < 2 * w || len < tail + w) {
    out.reason = "series too short for the sliding window";
    return out;
  }
  const std::size_t tail_start = len - tail;
  LineFit asym = fit_line(std::span(t).subspan(tail_start), std::span(lp).subspan(tail_start));
  out.asymptotic_slope = asym.slope;
  if (!(asym.slope < 0.0)) {
    out.reason = "no exponential tail (tail slope is not negative)";
    return out;
  }
  const double band = options.tolerance * std::abs(asym.slope);
  for (std::size_t i = 0; i + w <= len; ++i) {
    LineFit local = fit_line(std::span(t).subspan(i, w), std::span(lp).subspan(i, w));
    if (std::abs(local.slope - asym.slope) <= band) {
      if (i >= tail_start) break;
      out.resolved = true;
      out.time = static_cast<double>(i);
      return out;
    }
  }
  out.reason = "local slope never reaches the asymptotic slope before the tail";
  return out;
}

RelaxationResult relaxation_time(const SurvivalSeries& series, const RelaxationOptions& options) {
  return relaxation_time(series.probability, series.params.N, options);
}

int TmaxRule::operator()(std::int64_t N) const {
  double t = multiplier * std::sqrt(static_cast<double>(N));
  return static_cast<int>(std::min<double>(std::ceil(t), cap));
}

ScalingFit fit_scaling(std::vector<ScanRow> rows) {
  ScalingFit out;
  std::vector<double> x, y;
  for (const ScanRow& r : rows) {
    if (!r.relaxation.resolved) {
      out.warnings.push_back("N = " + std::to_string(r.N) +
                             " excluded: relaxation time unresolved (" + r.relaxation.reason + ")");
      continue;
    }
    if (!(r.relaxation.time > 0.0)) {
      out.warnings.push_back("N = " + std::to_string(r.N) +
                             " excluded: relaxation time is zero, no crossover");
      continue;
    }
    x.push_back(std::log(static_cast<double>(r.N)));
    y.push_back(std::log(r.relaxation.time));
  }
  out.rows = std::move(rows);
  if (x.size() < 3)
    throw NumericalError("relaxation scan: only " + std::to_string(x.size()) +
                         " resolved points, need at least 3");
  LineFit f = fit_line(x, y);
  out.exponent = f.slope;
  out.exponent_stderr = f.slope_stderr;
  out.prefactor = std::exp(f.intercept);
  return out;
}

ScalingFit relaxation_scaling_scan(const std::vector<std::int64_t>& n_list,
                                   const ScanOptions& options) {
  std::set<std::int64_t> distinct(n_list.begin(), n_list.end());
  if (distinct.size() < 4) throw ValidationError("relaxation scan: need at least 4 distinct N");
  if (*distinct.rbegin() < 8 * *distinct.begin())
    throw ValidationError("relaxation scan: N values must span at least a factor of 8");

  std::vector<ScanRow> rows(n_list.size());
  for (std::size_t i = 0; i < n_list.size(); ++i) {
    RotorParams p = RotorParams::from_ratio(n_list[i], options.lambda_times_period, options.ratio,
                                            options.grid_factor);
    p.validate();
    rows[i].N = p.N;
    rows[i].lambda = p.lambda;
    rows[i].T = p.T;
    rows[i].t_max = options.t_max_rule(p.N);
  }
  const bool par = options.execution == Execution::parallel;
  const auto count = static_cast<std::int64_t>(rows.size());
  // Largest N first under dynamic scheduling keeps the long runs from
  // trailing; row order is unaffected.
#pragma omp parallel for schedule(dynamic) if (par)
  for (std::int64_t k = count - 1; k >= 0; --k) {
    ScanRow& row = rows[static_cast<std::size_t>(k)];
    RotorParams p = RotorParams::from_ratio(row.N, options.lambda_times_period, options.ratio,
                                            options.grid_factor);
    row.relaxation = relaxation_time(survival_series(p, row.t_max), options.relaxation);
  }
  return fit_scaling(std::move(rows));
}

SpectrumRing spectrum_ring(const RotorParams& params) {
  params.validate();
  if (params.N > 512) throw ValidationError("spectrum: N is limited to 512 for the dense solve");
  wave::KickedMap map = params.kicked_map();
  wave::Propagator prop(map);
  const std::int64_t half = params.N / 2;
  const auto dim = static_cast<std::size_t>(params.N - 1);

  linalg::ComplexMatrix u(dim);
  for (std::size_t c = 0; c < dim; ++c) {
    WaveState psi = WaveState::basis(map.grid, -half + 1 + static_cast<std::int64_t>(c));
    prop.step(psi, true);
    for (std::size_t r = 0; r < dim; ++r)
      u(r, c) = psi.amplitudes()[psi.index_of(-half + 1 + static_cast<std::int64_t>(r))];
  }
  linalg::EigenResult eig = linalg::eigenvalues(std::move(u));

  SpectrumRing out;
  out.eigenvalues = std::move(eig.values);
  out.qr_iterations = eig.total_iterations;
  std::vector<double> mod;
  for (const auto& z : out.eigenvalues) mod.push_back(std::abs(z));
  double sum = 0.0;
  for (double m : mod) sum += m;
  out.mean_modulus = sum / static_cast<double>(mod.size());
  std::vector<double> sorted = mod;
  std::sort(sorted.begin(), sorted.end());
  auto pct = [&](double f) {
    return sorted[static_cast<std::size_t>(f * static_cast<double>(sorted.size() - 1))];
  };
  out.ring_inner = pct(0.1);
  out.ring_outer = pct(0.9);
  out.ring_area = std::numbers::pi * (out.ring_outer * out.ring_outer - out.ring_inner * out.ring_inner);

  std::vector<std::complex<double>> ring;
  for (std::size_t i = 0; i < mod.size(); ++i)
    if (mod[i] >= out.ring_inner && mod[i] <= out.ring_outer) ring.push_back(out.eigenvalues[i]);
  if (ring.size() >= 2) {
    double total = 0.0;
    for (std::size_t i = 0; i < ring.size(); ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < ring.size(); ++j)
        if (i != j) best = std::min(best, std::abs(ring[i] - ring[j]));
      total += best;
    }
    out.mean_spacing = total / static_cast<double>(ring.size());
  }
  if (out.ring_area > 0.0)
    out.spacing_ratio = out.mean_spacing * std::sqrt(static_cast<double>(params.N) / out.ring_area);
  return out;
}

}  // namespace qchaos::openrotor
