// Acceptance run: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "oracles.hpp"
#include "qchaos/echo.hpp"
#include "qchaos/openrotor.hpp"
#include "qchaos/partitions.hpp"
#include "qchaos/qmath.hpp"
#include "qchaos/timescales.hpp"

using namespace qchaos;
using Q = qmath::EntropicIndex;

namespace {

struct Verdict {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

struct Criterion {
  std::string name;
  double limit_seconds;
  std::function<void(Verdict&)> body;
};

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

std::string num(double v, int precision = 4) {
  std::ostringstream os;
  os.precision(precision);
  os << v;
  return os.str();
}

// ---------------------------------------------------------------------------

void q_algebra(Verdict& v) {
  constexpr int cases = 10'000;
  constexpr double tol = 1e-10;
  const double eps = std::numeric_limits<double>::epsilon();
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> uq(-2.0, 3.0), ulx(std::log(1e-3), std::log(1e3)), uly(-2.0, 2.0);

  int inverse_fail = 0, inverse_loose = 0, conditioned = 0, hom_fail = 0, pseudo_fail = 0, trip_fail = 0;
  double worst_hom = 0.0, worst_pseudo = 0.0, worst_trip = 0.0, worst_inverse = 0.0;
  for (int i = 0; i < cases; ++i) {
    Q q(uq(rng));
    const double d = q.deformation();

    // e_q(ln_q x) carries the rounding of ln_q x times kappa = x^{-(1-q)}.
    double x = std::exp(ulx(rng));
    double kappa = std::max(1.0, std::exp(-d * std::log(x)));
    double err = rel(qmath::q_exp(qmath::q_log(x, q), q), x);
    if (err > 64 * eps * kappa) ++inverse_loose;
    if (kappa <= 1e4) {
      ++conditioned;
      worst_inverse = std::max(worst_inverse, err);
      if (err > tol) ++inverse_fail;
    }
    double s = ulx(rng);
    if (qmath::q_exp(s, q) > 0.0) {
      double back = qmath::q_log(qmath::q_exp(s, q), q);
      double e = std::abs(back - s) / std::max(1.0, std::abs(s));
      worst_inverse = std::max(worst_inverse, e);
      if (e > tol) ++inverse_fail;
    }

    double a = std::exp(uly(rng)), b = std::exp(uly(rng));
    double la = qmath::q_log(a, q), lb = qmath::q_log(b, q);
    double lab = qmath::q_log(a * b, q);
    double e = std::abs(lab - (la + lb + d * la * lb)) / std::max({1.0, std::abs(lab), std::abs(la * lb)});
    worst_pseudo = std::max(worst_pseudo, e);
    if (e > tol) ++pseudo_fail;

    auto p = qmath::q_prod(a, b, q);
    if (!p.cutoff) {
      double eh = std::abs(qmath::q_log(p.value, q) - (la + lb)) / std::max({1.0, std::abs(la), std::abs(lb)});
      worst_hom = std::max(worst_hom, eh);
      if (eh > tol) ++hom_fail;
      auto r = qmath::q_div(p.value, b, q);
      double et = r.cutoff ? 1.0 : rel(r.value, a);
      worst_trip = std::max(worst_trip, et);
      if (et > tol) ++trip_fail;
    }
    if (std::abs(1.0 + d * b) > 1e-3) {
      double et = rel(qmath::q_diff(qmath::q_sum(a, b, q), b, q), a);
      worst_trip = std::max(worst_trip, et);
      if (et > tol) ++trip_fail;
    }
  }
  v.detail << cases << " cases, q in [-2,3]; max rel err inverse " << num(worst_inverse) << " (" << conditioned
           << " with kappa <= 1e4), homomorphism " << num(worst_hom) << ", pseudo-additivity "
           << num(worst_pseudo) << ", round-trip " << num(worst_trip);
  v.require(inverse_fail == 0, std::to_string(inverse_fail) + " inverse-pair cases above 1e-10");
  v.require(inverse_loose == 0, std::to_string(inverse_loose) + " inverse-pair cases above 64 eps kappa");
  v.require(hom_fail == 0, std::to_string(hom_fail) + " homomorphism cases");
  v.require(pseudo_fail == 0, std::to_string(pseudo_fail) + " pseudo-additivity cases");
  v.require(trip_fail == 0, std::to_string(trip_fail) + " round-trip cases");
}

void ks_oracles(Verdict& v) {
  using maps::GridPartition;
  using maps::MapSpec;
  partitions::RefineOptions o;
  o.n_max = 12;
  o.samples = 1'000'000;
  o.seed = 20;
  const auto window = partitions::default_window(o.n_max);
  auto estimate = [&](const MapSpec& m) {
    return partitions::ks_entropy_estimate(m, GridPartition::generating_for(m), Q(1.0), o, window);
  };

  auto rot = estimate(MapSpec::rotation(1, 2));
  v.detail << "quarter-turn slope " << num(rot.slope) << " +- " << num(rot.slope_stderr);
  v.require(std::abs(rot.slope) <= 2 * rot.slope_stderr + 1e-12, "rotation slope not zero within 2 stderr");

  std::vector<double> exact;
  for (int n = 0; n <= o.n_max; ++n) exact.push_back(oracle::doubling_entropy(n));
  const double dyadic = oracle::slope(exact, window.first, window.last);
  auto dbl = estimate(MapSpec::doubling());
  v.detail << "; doubling " << num(dbl.slope) << " vs dyadic " << num(dyadic);
  v.require(std::abs(dbl.slope - dyadic) <= 0.05 * dyadic, "doubling slope off by more than 5%");

  auto baker = estimate(MapSpec::baker());
  v.detail << "; baker " << num(baker.slope) << " vs ln 2";
  v.require(std::abs(baker.slope - std::log(2.0)) <= 0.05 * std::log(2.0), "baker slope off by more than 5%");

  auto chk = partitions::rescaled_entropy_check(MapSpec::doubling(), 2, GridPartition::generating_for(MapSpec::doubling()),
                                                Q(1.0), o);
  const double gap = std::abs(chk.per_step_base - chk.per_step_composed);
  v.detail << "; h(T) " << num(chk.per_step_base) << " vs h(T^2)/2 " << num(chk.per_step_composed) << " (gap "
           << num(gap) << ", 2 sigma " << num(2 * chk.combined_stderr) << ")";
  v.require(gap <= 2 * chk.combined_stderr, "rescaled entropies differ beyond 2 combined stderr");
}

void closure(Verdict& v) {
  double worst_prod = 0.0, worst_closed = 0.0;
  int compared = 0;
  for (double qv : {-1.0, 0.0, 0.25, 0.5, 0.9, 1.0, 1.2, 1.5}) {
    Q q(qv);
    for (std::int64_t m : {2, 3, 10, 97, 1000}) {
      const double md = static_cast<double>(m);
      const double lnq = qmath::q_log(md, q);
      double prod = md;
      bool cut = false;
      for (int n = 0; n <= 20; ++n) {
        if (n > 0) {
          auto r = qmath::q_prod(prod, md, q);
          cut = cut || r.cutoff;
          prod = r.value;
        }
        if (cut || (n + 1) * lnq * q.deformation() <= -1.0) break;
        double mu = timescales::deformed_atom_measure(m, n, q);
        worst_prod = std::max(worst_prod, rel(1.0 / mu, prod));
        worst_closed = std::max(worst_closed, rel(timescales::deformed_entropy_sum(m, n, q), (n + 1) * lnq));
        ++compared;
      }
    }
  }
  v.detail << compared << " (q, M, n) cases; max rel gap 1/mu vs iterated q-product " << num(worst_prod)
           << ", entropy sum vs (n+1) ln_q M " << num(worst_closed);
  v.require(worst_prod <= 1e-10, "atom measure differs from the iterated q-product");
  v.require(worst_closed <= 1e-12, "entropy sum differs from (n+1) ln_q M");

  bool monotone = true;
  for (double alpha : {0.25, 0.5, 1.0})
    for (int n : {1, 3, 7}) {
      double prev = std::numeric_limits<double>::infinity();
      for (std::int64_t m : {100, 1000, 10'000, 100'000, 1'000'000}) {
        double e = timescales::regular_power_law_check(m, alpha, {n}).front().rel_error;
        monotone = monotone && e < prev;
        prev = e;
      }
    }
  v.detail << "; power-law error decreasing in M: " << (monotone ? "yes" : "no");
  v.require(monotone, "power-law error not decreasing in M");
}

void unified_time_scale(Verdict& v) {
  auto lim = timescales::tau_relaxation_limit(1e6, 0.5, 1.0);
  v.detail << "relaxation-limit gap " << num(100 * lim.relative_gap()) << "%";
  v.require(lim.relative_gap() < 0.005, "relaxation-limit gap >= 0.5%");

  // tau_q has slope ln^2(eta)/2 in q at q = 1, so the check is that both
  // sides meet there: their mean matches tau_1 and each side follows the slope.
  constexpr double d = 1e-6;
  double worst_mid = 0.0, worst_side = 0.0;
  for (double eta : {1.5, 10.0, 1e3, 1e6}) {
    double base = timescales::tau_q(eta, Q(1.0), 1.0);
    double up = timescales::tau_q(eta, Q(1.0 - d), 1.0);
    double down = timescales::tau_q(eta, Q(1.0 + d), 1.0);
    double l = std::log(eta);
    double slope = 0.5 * d * l * l;
    worst_mid = std::max(worst_mid, rel(0.5 * (up + down), base));
    worst_side = std::max({worst_side, rel(up - base, slope), rel(base - down, slope)});
  }
  v.detail << "; at dq = 1e-6 two-sided mean vs tau_1 " << num(worst_mid) << " rel, one-sided gaps vs analytic "
           << num(worst_side) << " rel";
  v.require(worst_mid <= 1e-8, "tau_q jumps at q = 1");
  v.require(worst_side <= 1e-4, "one-sided gaps do not follow the analytic slope");

  timescales::CurveOptions o;
  o.q_list = {1.0, 0.8, 0.5, 0.0};
  auto rows = timescales::timescale_curves(o);
  const auto points = static_cast<std::size_t>(o.points);
  int violations = 0, checked = 0;
  for (std::size_t i = 0; i < points; ++i) {
    if (!(rows[i].eta > 1.0)) continue;
    for (std::size_t k = 1; k < o.q_list.size(); ++k, ++checked)
      if (!(rows[k * points + i].tau > rows[(k - 1) * points + i].tau)) ++violations;
  }
  v.detail << "; curve ordering violations " << violations << " of " << checked;
  v.require(checked > 0 && violations == 0, "curve family not ordered in q");
}

void rotor_scaling(Verdict& v) {
  using namespace openrotor;
  ScanOptions o;
  o.execution = Execution::serial;
  auto fit = relaxation_scaling_scan({64, 128, 256, 512, 1024}, o);
  v.detail << "relaxation times";
  for (const auto& r : fit.rows)
    v.detail << ' ' << r.N << ':' << (r.relaxation.resolved ? num(r.relaxation.time) : "unresolved");
  v.detail << "; exponent " << num(fit.exponent) << " +- " << num(fit.exponent_stderr);
  v.require(std::abs(fit.exponent - 0.5) <= 0.1, "exponent outside 0.5 +- 0.1");

  auto p = RotorParams::from_ratio(256, 7.0, 4.0);
  wave::WaveState s = wave::WaveState::basis(p.grid(), 0);
  double drift = 0.0;
  for (int t = 1; t <= 10'000; ++t) {
    rotor_step(s, p, false);
    drift = std::max(drift, std::abs(s.norm2() - 1.0));
  }
  v.detail << "; closed-map norm drift " << num(drift) << " over 1e4 steps";
  v.require(drift <= 1e-10, "closed map norm drift above 1e-10");

  // Before the first absorption P_t is a norm after unitary steps, equal to
  // one up to FFT rounding; increases are compared in units of eps.
  const double eps = std::numeric_limits<double>::epsilon();
  double worst_rise = 0.0;
  for (const auto& r : fit.rows) {
    auto series = survival_series(RotorParams::from_ratio(r.N, 7.0, 4.0), r.t_max);
    for (std::size_t t = 1; t < series.probability.size(); ++t)
      worst_rise = std::max(worst_rise, (series.probability[t] - series.probability[t - 1]) /
                                            (eps * series.probability[t - 1]));
  }
  v.detail << "; survival non-increasing, largest step-to-step rise " << num(worst_rise) << " eps";
  v.require(worst_rise <= 16.0, "survival rises by more than rounding");
}

std::vector<double> q_series(double q, double rate, int t_max) {
  std::vector<double> s;
  for (int t = 0; t <= t_max; ++t) {
    double x = rate * t, d = 1.0 - q;
    double le = std::abs(d) < 1e-12 ? x : (1.0 + d * x > 0 ? std::log1p(d * x) / d : INFINITY);
    s.push_back(std::exp(-le));
  }
  return s;
}

void fidelity(Verdict& v) {
  auto small = wave::KickedMap::torus(7.0, 1024, 4);
  auto psi = wave::WaveState::coherent(small.grid, 37.0, 1.3, std::sqrt(1.0 / (2.0 * small.period)));
  auto still = echo::loschmidt_echo(small, echo::Perturbation::cos_theta, 0.0, psi, 50);
  bool identity = std::all_of(still.fidelity.begin(), still.fidelity.end(), [](double m) { return m == 1.0; });
  auto moved = echo::loschmidt_echo(small, echo::Perturbation::cos_theta, 2.0, psi, 50);
  v.detail << "delta = 0 gives M == 1: " << (identity ? "yes" : "no") << ", M(0) = " << moved.fidelity[0];
  v.require(identity && moved.fidelity[0] == 1.0, "echo boundary values");

  int tested = 0, missed = 0;
  double worst_q = 0.0, worst_rate = 0.0;
  for (int qi = 0; qi <= 14; ++qi) {
    double q = 0.1 * qi;
    for (double rate : {0.05, 0.1, 0.25, 0.5, 1.0, 2.0}) {
      auto s = q_series(q, rate, 120);
      if (std::count_if(s.begin(), s.end(), [](double m) { return m > 1e-12; }) < 8) continue;
      auto f = echo::fit_q_exponential(s);
      double eq = std::abs(f.q_fid - q) / std::max(q, 1.0);
      double er = std::abs(f.rate - rate) / rate;
      worst_q = std::max(worst_q, eq);
      worst_rate = std::max(worst_rate, er);
      if (eq > 0.05 || er > 0.05) ++missed;
      ++tested;
    }
  }
  v.detail << "; fit recovery on " << tested << " series, worst q err " << num(worst_q) << ", rate err "
           << num(worst_rate);
  v.require(missed == 0, std::to_string(missed) + " synthetic series not recovered within 5%");

  auto torus = wave::KickedMap::torus(7.0, 65536, 8);
  echo::EnsembleOptions eo;
  eo.members = 192;
  eo.seed = 1;
  echo::DecayFitOptions fo;
  fo.q_min = fo.q_max = 1.0;
  fo.ceiling = 0.5;
  fo.floor = 1e-3;
  double rates[2];
  int k = 0;
  for (double delta : {3.0, 6.0})
    rates[k++] = echo::fit_q_exponential(
                     echo::ensemble_echo(torus, echo::Perturbation::cos_theta, delta, 10, eo).fidelity, fo)
                     .rate;
  const double ratio = rates[1] / rates[0];
  v.detail << "; echo rate at delta 3 / 6: " << num(rates[0]) << " / " << num(rates[1]) << " (ratio " << num(ratio)
           << ")";
  v.require(std::abs(ratio - 1.0) <= 0.15, "echo rate depends on delta beyond 15%");

  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst_corr = 0.0;
  for (int cells : {2, 5, 16, 64}) {
    std::vector<double> gammas(static_cast<std::size_t>(cells), 1.0 / cells);
    for (int m = 1; m <= 6; ++m) {
      std::vector<echo::IntersectionMeasure> terms(12);
      double total = 0.0;
      for (auto& t : terms) {
        for (int i = 0; i < m; ++i) t.cells.push_back(static_cast<int>(rng() % static_cast<unsigned>(cells)));
        t.measure = u(rng);
        total += t.measure;
      }
      for (auto& t : terms) t.measure /= total;
      for (double q : {0.0, 0.5, 1.0}) {
        double model = echo::q_correlation_model(cells, 1000, Q(q), m);
        worst_corr = std::max(worst_corr, rel(echo::q_correlation_discrete(cells, 1000, gammas, terms, Q(q)), model));
      }
    }
  }
  v.detail << "; discrete vs model correlation " << num(worst_corr);
  v.require(worst_corr <= 1e-12, "discrete q-correlation differs from the model");

  bool exact = echo::regular_index(1) == 1.0 / 3.0 && echo::regular_index(2) == 2.0 / 3.0;
  v.detail << "; regular_index(1), (2) exact: " << (exact ? "yes" : "no");
  v.require(exact, "regular index not exact");
}

void reproducibility(Verdict& v) {
  namespace fs = std::filesystem;
  const fs::path root = fs::temp_directory_path() / "qchaos_acceptance_replay";
  fs::remove_all(root);
  const std::vector<std::vector<std::string>> runs{
      {"qmath", "eval", "--fn", "qprod", "--q", "0.5,1,1.5", "--x", "0.5,2,7", "--y", "3"},
      {"ks", "estimate", "--map", "baker", "--samples", "100000", "--n-max", "10", "--q", "1,0.5", "--seed", "4"},
      {"timescale", "curves"},
      {"uncorrelation", "table", "--M", "1000", "--alpha", "0.5", "--n-max", "12"},
      {"echo", "run", "--grid", "4096", "--members", "16", "--seed", "9"},
      {"rotor", "survival", "--N", "256"},
      {"rotor", "scan", "--N", "64,128,256,512"},
      {"rotor", "spectrum", "--N", "64"},
  };
  int identical = 0;
  for (const auto& args : runs) {
    std::string stem = args[0] + "_" + args[1];
    fs::path dir = root / stem;
    std::vector<std::string> full{"--out", dir.string()};
    full.insert(full.end(), args.begin(), args.end());
    std::ostringstream out, err;
    int code = cli::run(full, out, err);
    if (code != 0) {
      v.require(false, stem + " exited " + std::to_string(code) + ": " + err.str());
      continue;
    }
    std::ostringstream rout, rerr;
    code = cli::run({"replay", (dir / (stem + ".manifest.json")).string()}, rout, rerr);
    if (code == 0) ++identical;
    else v.require(false, stem + " replay differs: " + rout.str() + rerr.str());
  }
  v.detail << identical << " of " << runs.size() << " subcommands replayed byte-identically";
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {"1 q-algebra identities", 5.0, q_algebra},
      {"2 KS-entropy oracles", 60.0, ks_oracles},
      {"3 deformed-uncorrelation closure", 1.0, closure},
      {"4 unified time scale", 1.0, unified_time_scale},
      {"5 kicked-rotator scaling", 600.0, rotor_scaling},
      {"6 fidelity properties", std::numeric_limits<double>::infinity(), fidelity},
      {"7 manifest replay", std::numeric_limits<double>::infinity(), reproducibility},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    Verdict v;
    const auto start = std::chrono::steady_clock::now();
    try {
      c.body(v);
    } catch (const std::exception& e) {
      v.require(false, std::string("exception: ") + e.what());
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (seconds > c.limit_seconds) v.require(false, "runtime above " + num(c.limit_seconds) + " s");
    failed += v.pass ? 0 : 1;
    std::cout << (v.pass ? "PASS" : "FAIL") << "  " << c.name << " (" << num(seconds, 3) << " s";
    if (std::isfinite(c.limit_seconds)) std::cout << ", limit " << num(c.limit_seconds) << " s";
    std::cout << "): " << v.detail.str() << std::endl;
  }
  return failed;
}
