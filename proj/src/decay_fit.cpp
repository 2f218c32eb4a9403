#include <algorithm>
#include <cmath>
#include <limits>

#include "qchaos/echo.hpp"
#include "qchaos/error.hpp"

namespace qchaos::echo {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kInvPhi = 0.6180339887498949;

// ln e_q(x); -inf at and beyond the cutoff.
double log_q_exp(double x, double q) {
  const double d = 1.0 - q;
  if (std::abs(d) < qmath::kDefaultNearOne) return x - 0.5 * d * x * x;
  const double a = d * x;
  if (1.0 + a <= 0.0) return -kInf;
  return std::log1p(a) / d;
}

struct Sample {
  double t;
  double log_m;
};

struct Profile {
  double ssr = kInf;
  double log_amplitude = 0.0;
};

// Sum of squared log residuals with ln(amplitude) profiled out.
Profile profile(const std::vector<Sample>& pts, double q, double rate) {
  double mean = 0.0;
  for (const auto& s : pts) {
    double lm = log_q_exp(rate * s.t, q);
    if (!std::isfinite(lm)) return {};
    mean += s.log_m + lm;
  }
  mean /= static_cast<double>(pts.size());
  double ssr = 0.0;
  for (const auto& s : pts) {
    double r = s.log_m - (mean - log_q_exp(rate * s.t, q));
    ssr += r * r;
  }
  return {ssr, mean};
}

template <class F>
double golden_min(F&& f, double lo, double hi, double tol) {
  double a = lo, b = hi;
  double c = b - kInvPhi * (b - a);
  double d = a + kInvPhi * (b - a);
  double fc = f(c), fd = f(d);
  while (std::abs(b - a) > tol) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvPhi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvPhi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

struct RateFit {
  double log_rate = 0.0;
  double ssr = kInf;
};

RateFit best_rate(const std::vector<Sample>& pts, double q, const DecayFitOptions& opt) {
  const double lo = std::log(opt.rate_min);
  const double hi = std::log(opt.rate_max);
  constexpr int kCoarse = 81;
  const double step = (hi - lo) / (kCoarse - 1);
  int best = -1;
  double best_ssr = kInf;
  for (int i = 0; i < kCoarse; ++i) {
    double s = profile(pts, q, std::exp(lo + step * i)).ssr;
    if (s < best_ssr) {
      best_ssr = s;
      best = i;
    }
  }
  if (best < 0) return {};
  auto f = [&](double lr) { return profile(pts, q, std::exp(lr)).ssr; };
  double a = lo + step * std::max(best - 1, 0);
  double b = lo + step * std::min(best + 1, kCoarse - 1);
  double lr = golden_min(f, a, b, 1e-12);
  double s = f(lr);
  if (!(s <= best_ssr)) return {lo + step * best, best_ssr};
  return {lr, s};
}

}  // namespace

double DecayFit::model(double t) const {
  return amplitude * std::exp(-log_q_exp(rate * t, q_fid));
}

DecayFit fit_q_exponential(const std::vector<double>& series, const DecayFitOptions& opt) {
  if (!(opt.q_min <= opt.q_max)) throw ValidationError("decay fit: q_min > q_max");
  if (opt.q_grid < 1) throw ValidationError("decay fit: q_grid must be >= 1");
  if (!(opt.rate_min > 0.0) || !(opt.rate_min < opt.rate_max))
    throw ValidationError("decay fit: need 0 < rate_min < rate_max");

  std::vector<Sample> pts;
  const int last = static_cast<int>(std::min<std::size_t>(
      series.empty() ? 0 : series.size() - 1, static_cast<std::size_t>(std::max(opt.t_last, 0))));
  for (int t = std::max(opt.t_first, 0); t <= last && !series.empty(); ++t) {
    double m = series[static_cast<std::size_t>(t)];
    if (m > opt.floor && m <= opt.ceiling && std::isfinite(m)) pts.push_back({double(t), std::log(m)});
  }
  if (pts.size() < 5)
    throw ValidationError("decay fit: window holds " + std::to_string(pts.size()) +
                          " usable points, need at least 5");

  DecayFit fit;
  fit.t_first = static_cast<int>(pts.front().t);
  fit.t_last = static_cast<int>(pts.back().t);
  fit.points = static_cast<int>(pts.size());

  auto [lo_it, hi_it] = std::minmax_element(
      pts.begin(), pts.end(), [](const Sample& a, const Sample& b) { return a.log_m < b.log_m; });
  if (hi_it->log_m - lo_it->log_m < 1e-9) {
    fit.status = FitStatus::no_decay;
    fit.rate = 0.0;
    fit.amplitude = std::exp(pts.front().log_m);
    return fit;
  }

  const int grid = opt.q_min == opt.q_max ? 1 : opt.q_grid;
  const double dq = grid > 1 ? (opt.q_max - opt.q_min) / (grid - 1) : 0.0;
  int best = -1;
  RateFit best_fit;
  for (int i = 0; i < grid; ++i) {
    RateFit r = best_rate(pts, opt.q_min + dq * i, opt);
    if (r.ssr < best_fit.ssr) {
      best_fit = r;
      best = i;
    }
  }
  if (best < 0) throw NumericalError("decay fit: no admissible (q, rate) in the search box");

  double q_best = opt.q_min + dq * best;
  if (grid > 1) {
    auto f = [&](double q) { return best_rate(pts, q, opt).ssr; };
    double a = opt.q_min + dq * std::max(best - 1, 0);
    double b = opt.q_min + dq * std::min(best + 1, grid - 1);
    double q_ref = golden_min(f, a, b, 1e-9);
    RateFit r = best_rate(pts, q_ref, opt);
    if (r.ssr <= best_fit.ssr) {
      q_best = q_ref;
      best_fit = r;
    }
  }

  fit.q_fid = q_best;
  fit.rate = std::exp(best_fit.log_rate);
  Profile p = profile(pts, fit.q_fid, fit.rate);
  fit.amplitude = std::exp(p.log_amplitude);
  fit.rms_residual = std::sqrt(p.ssr / static_cast<double>(pts.size()));
  return fit;
}

Regime classify(const DecayFit& fit, double tolerance) {
  if (fit.status == FitStatus::no_decay) return Regime::no_decay;
  return std::abs(fit.q_fid - 1.0) <= tolerance ? Regime::lyapunov : Regime::regular;
}

std::string to_string(Regime r) {
  switch (r) {
    case Regime::lyapunov:
      return "lyapunov";
    case Regime::regular:
      return "regular";
    case Regime::no_decay:
      return "no-decay";
  }
  return "unknown";
}

}  // namespace qchaos::echo
