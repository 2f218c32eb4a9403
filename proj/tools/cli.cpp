#include "cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "output.hpp"
#include "qchaos/echo.hpp"
#include "qchaos/error.hpp"
#include "qchaos/openrotor.hpp"
#include "qchaos/partitions.hpp"
#include "qchaos/timescales.hpp"

namespace qchaos::cli {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using qmath::EntropicIndex;

std::string to_param(double v) { return round_trip(v); }
std::string to_param(int v) { return std::to_string(v); }
std::string to_param(std::int64_t v) { return std::to_string(v); }
std::string to_param(std::uint64_t v) { return std::to_string(v); }
std::string to_param(bool v) { return v ? "true" : "false"; }
std::string to_param(const std::string& v) { return v; }
template <class T>
std::string to_param(const std::vector<T>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + to_param(v[i]);
  return s;
}

json nullable(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

// Per-run state handed to a subcommand body.
struct Run {
  std::ostream& out;
  Execution execution = Execution::parallel;
  json results = json::object();
  json seeds = json::object();
  std::vector<std::pair<std::string, CsvWriter>> tables;

  void table(std::string file, CsvWriter w) { tables.emplace_back(std::move(file), std::move(w)); }
};

class Command {
 public:
  Command(CLI::App* parent, std::string name, std::string description, std::string path)
      : app_(parent->add_subcommand(std::move(name), std::move(description))), path_(std::move(path)) {}
  virtual ~Command() = default;

  CLI::App* app() const noexcept { return app_; }
  const std::string& path() const noexcept { return path_; }
  std::string stem() const {
    std::string s = path_;
    std::replace(s.begin(), s.end(), ' ', '_');
    return s;
  }

  /// Effective parameter values, in declaration order.
  json parameters() const {
    json p = json::object();
    for (const auto& [key, get] : params_)
      if (auto v = get()) p[key] = *v;
    return p;
  }

  virtual void execute(Run& run) = 0;

 protected:
  template <class T>
  CLI::Option* add(const std::string& key, T& ref, const std::string& description) {
    params_.emplace_back(key, [&ref]() -> std::optional<std::string> { return to_param(ref); });
    auto* opt = app_->add_option("--" + key, ref, description)->capture_default_str();
    if constexpr (requires { ref.begin(); } && !std::is_same_v<T, std::string>) opt->delimiter(',');
    return opt;
  }
  CLI::Option* flag(const std::string& key, bool& ref, const std::string& description) {
    params_.emplace_back(key, [&ref]() -> std::optional<std::string> { return to_param(ref); });
    return app_->add_flag("--" + key, ref, description);
  }
  void param(const std::string& key, std::function<std::optional<std::string>()> get) {
    params_.emplace_back(key, std::move(get));
  }

 private:
  CLI::App* app_;
  std::string path_;
  std::vector<std::pair<std::string, std::function<std::optional<std::string>()>>> params_;
};

// ---------------------------------------------------------------------------

class QmathEval final : public Command {
 public:
  explicit QmathEval(CLI::App* parent)
      : Command(parent, "eval", "Evaluate a q-function at given points", "qmath eval") {
    add("fn", fn_, "qlog, qexp, qsum, qdiff, qprod, qdiv or entropy");
    add("q", q_, "Entropic indices (comma separated)");
    add("x", x_, "First arguments");
    add("y", y_, "Second arguments of binary functions (one value broadcasts)");
    add("p", p_, "Probability vector for entropy");
  }

  void execute(Run& run) override {
    if (q_.empty()) throw ValidationError("qmath eval: --q needs at least one value");
    static const std::vector<std::string> known{"qlog", "qexp", "qsum", "qdiff", "qprod", "qdiv", "entropy"};
    std::string fn = fn_ == "ln_q" ? "qlog" : fn_ == "e_q" ? "qexp" : fn_;
    if (std::find(known.begin(), known.end(), fn) == known.end())
      throw ValidationError("fn violates constraint: one of qlog, qexp, qsum, qdiff, qprod, qdiv, entropy");
    const bool binary = fn == "qsum" || fn == "qdiff" || fn == "qprod" || fn == "qdiv";
    if (fn != "entropy" && x_.empty()) throw ValidationError("x violates constraint: required for " + fn);
    if (binary && !(y_.size() == x_.size() || y_.size() == 1))
      throw ValidationError("y violates constraint: one value or as many as x");

    CsvWriter csv("fn,q,x,y,value,cutoff");
    for (double qv : q_) {
      EntropicIndex q(qv);
      if (fn == "entropy") {
        double s = qmath::tsallis_entropy(qmath::ProbabilityVector(p_), q);
        csv.row(fn, qv, std::string(), std::string(), s, false);
        run.out << fmt(s) << '\n';
        continue;
      }
      for (std::size_t i = 0; i < x_.size(); ++i) {
        double x = x_[i];
        double y = binary ? y_[y_.size() == 1 ? 0 : i] : 0.0;
        double value = 0.0;
        bool cutoff = false;
        if (fn == "qlog") value = qmath::q_log(x, q);
        else if (fn == "qexp") value = qmath::q_exp(x, q);
        else if (fn == "qsum") value = qmath::q_sum(x, y, q);
        else if (fn == "qdiff") value = qmath::q_diff(x, y, q);
        else {
          auto r = fn == "qprod" ? qmath::q_prod(x, y, q) : qmath::q_div(x, y, q);
          value = r.value;
          cutoff = r.cutoff;
        }
        if (binary) csv.row(fn, qv, x, y, value, cutoff);
        else csv.row(fn, qv, x, std::string(), value, cutoff);
        run.out << fmt(value) << '\n';
      }
    }
    run.results["rows"] = csv.rows();
    run.table(stem() + ".csv", std::move(csv));
  }

 private:
  std::string fn_ = "qlog";
  std::vector<double> q_{1.0};
  std::vector<double> x_, y_, p_;
};

class KsEstimate final : public Command {
 public:
  explicit KsEstimate(CLI::App* parent)
      : Command(parent, "estimate", "Partition-refinement (q-)KS entropy estimate", "ks estimate") {
    add("map", map_, "doubling, baker, cat, rotation or rotation:p/q");
    add("cells", cells_, "Cells per axis; 0 selects the generating partition");
    add("q", q_, "Entropic indices (comma separated)");
    add("n-max", n_max_, "Refinement steps");
    add("samples", samples_, "Monte-Carlo sample points");
    add("seed", seed_, "Random seed");
    add("fit-first", fit_first_, "First fitted step; -1 selects n_max/2");
    add("fit-last", fit_last_, "Last fitted step; -1 selects n_max");
  }

  void execute(Run& run) override {
    auto map = maps::MapSpec::parse(map_);
    if (cells_ < 0) throw ValidationError("cells violates constraint: >= 0");
    auto partition = cells_ == 0 ? maps::GridPartition::generating_for(map)
                                 : maps::GridPartition::uniform(cells_, map.dimension());
    if (!(samples_ >= 1.0) || samples_ != std::floor(samples_) || samples_ > 1e10)
      throw ValidationError("samples violates constraint: integer in [1e4, 1e10]");
    if (q_.empty()) throw ValidationError("q violates constraint: at least one value");

    partitions::RefineOptions opt;
    opt.n_max = n_max_;
    opt.samples = static_cast<std::size_t>(samples_);
    opt.seed = seed_;
    opt.execution = run.execution;
    auto atoms = partitions::refine(map, partition, opt);
    auto window = partitions::default_window(n_max_);
    if (fit_first_ >= 0) window.first = fit_first_;
    if (fit_last_ >= 0) window.last = fit_last_;

    CsvWriter csv("map,q,n,H_q,atom_count");
    json estimates = json::array();
    for (double qv : q_) {
      auto est = partitions::ks_entropy_estimate(atoms, EntropicIndex(qv), window);
      for (int n = 0; n <= n_max_; ++n)
        csv.row(map.name(), qv, n, est.entropies[static_cast<std::size_t>(n)],
                est.atom_counts[static_cast<std::size_t>(n)]);
      estimates.push_back({{"q", qv},
                           {"slope", est.slope},
                           {"slope_stderr", est.slope_stderr},
                           {"ks_time", est.slope > 0 ? json(1.0 / est.slope) : json(nullptr)}});
      run.out << "q = " << fmt(qv) << "  h_KS ~ " << fmt(est.slope) << " +- " << fmt(est.slope_stderr)
              << '\n';
    }
    run.seeds["seed"] = seed_;
    run.results["map"] = map.name();
    run.results["partition"] = {{"cells_x", partition.cells_x()}, {"cells_y", partition.cells_y()}};
    run.results["fit_window"] = {window.first, window.last};
    run.results["measure_tolerance"] = atoms.tolerance();
    run.results["estimates"] = estimates;
    run.table(stem() + ".csv", std::move(csv));
  }

 private:
  std::string map_ = "doubling";
  int cells_ = 0;
  std::vector<double> q_{1.0};
  int n_max_ = 12;
  double samples_ = 1e6;
  std::uint64_t seed_ = 0;
  int fit_first_ = -1;
  int fit_last_ = -1;
};

class TimescaleCurves final : public Command {
 public:
  explicit TimescaleCurves(CLI::App* parent)
      : Command(parent, "curves", "Curve family tau_q(eta)", "timescale curves") {
    add("q", q_, "Entropic indices (comma separated)");
    add("eta-min", eta_min_, "Smallest eta (>= 1)");
    add("eta-max", eta_max_, "Largest eta");
    add("points", points_, "Points per curve");
    add("spacing", spacing_, "log or linear");
    add("h-ks", h_, "h_KS^(q) used to normalise tau");
  }

  void execute(Run& run) override {
    timescales::CurveOptions o;
    o.q_list = q_;
    o.eta_min = eta_min_;
    o.eta_max = eta_max_;
    o.points = points_;
    o.h_ks_q = h_;
    o.execution = run.execution;
    if (spacing_ == "log") o.spacing = timescales::EtaSpacing::logarithmic;
    else if (spacing_ == "linear") o.spacing = timescales::EtaSpacing::linear;
    else throw ValidationError("spacing violates constraint: log or linear");
    auto rows = timescales::timescale_curves(o);
    CsvWriter csv("eta,q,tau,h_ks_q");
    for (const auto& r : rows) csv.row(r.eta, r.q, r.tau, r.h_ks_q);
    run.results["rows"] = csv.rows();
    run.out << "wrote " << csv.rows() << " rows\n";
    run.table(stem() + ".csv", std::move(csv));
  }

 private:
  std::vector<double> q_{1.0, 0.8, 0.5, 0.0};
  double eta_min_ = 1.0;
  double eta_max_ = 1e8;
  int points_ = 200;
  std::string spacing_ = "log";
  double h_ = 1.0;
};

class UncorrelationTable final : public Command {
 public:
  explicit UncorrelationTable(CLI::App* parent)
      : Command(parent, "table", "Deformed atom measures and their closures", "uncorrelation table") {
    add("M", cells_, "Cells per factor (>= 2)");
    app()->add_option("--q", q_, "Entropic index (exclusive with --alpha)");
    app()->add_option("--alpha", alpha_, "q = 1 - alpha (default 0.5)");
    param("q", [this]() -> std::optional<std::string> { return to_param(effective_q()); });
    add("n-min", n_min_, "First n");
    add("n-max", n_max_, "Last n");
  }

  void execute(Run& run) override {
    if (q_ && alpha_) throw ValidationError("q violates constraint: give --q or --alpha, not both");
    if (alpha_ && !(*alpha_ > 0.0)) throw ValidationError("alpha violates constraint: > 0");
    if (n_min_ < 0 || n_max_ < n_min_) throw ValidationError("n-max violates constraint: 0 <= n-min <= n-max");
    const double qv = effective_q();
    EntropicIndex q(qv);
    const double alpha = 1.0 - qv;
    const double m = static_cast<double>(cells_);

    CsvWriter csv("M,q,n,mu,inverse_qprod,entropy_sum,closed_form,power_law,power_law_rel_error");
    double worst_prod = 0.0, worst_closure = 0.0;
    for (int n = n_min_; n <= n_max_; ++n) {
      double mu = timescales::deformed_atom_measure(cells_, n, q);
      double prod = m;
      for (int k = 0; k < n; ++k) prod = qmath::q_prod(prod, m, q).value;
      double sum = timescales::deformed_entropy_sum(cells_, n, q);
      double closed = (n + 1) * qmath::q_log(m, q);
      worst_prod = std::max(worst_prod, std::abs(1.0 / mu - prod) / prod);
      worst_closure = std::max(worst_closure, closed == 0 ? std::abs(sum) : std::abs(sum - closed) / closed);
      if (alpha > 0.0) {
        auto pl = timescales::regular_power_law_check(cells_, alpha, {n}).front();
        csv.row(cells_, qv, n, mu, prod, sum, closed, pl.approx, pl.rel_error);
      } else {
        csv.row(cells_, qv, n, mu, prod, sum, closed, std::string(), std::string());
      }
    }
    run.results["max_rel_gap_inverse_qprod"] = worst_prod;
    run.results["max_rel_gap_closure"] = worst_closure;
    run.out << "max |1/mu - qprod|/qprod = " << fmt(worst_prod) << '\n';
    run.table(stem() + ".csv", std::move(csv));
  }

 private:
  double effective_q() const { return q_ ? *q_ : 1.0 - alpha_.value_or(0.5); }

  std::int64_t cells_ = 1000;
  std::optional<double> q_;
  std::optional<double> alpha_;
  int n_min_ = 0;
  int n_max_ = 10;
};

class EchoRun final : public Command {
 public:
  explicit EchoRun(CLI::App* parent)
      : Command(parent, "run", "Loschmidt echo of the kicked rotator on the torus", "echo run") {
    add("grid", grid_, "Momentum levels (power of two)");
    add("cells", cells_, "Classical cells j; T = 4 pi j / grid");
    add("lambdaT", lambda_t_, "Chaos parameter lambda T");
    add("B", b_, "Perturbation operator: cos or sin");
    add("delta", delta_, "Perturbation strength");
    add("t-max", t_max_, "Steps");
    add("members", members_, "Coherent states averaged");
    add("seed", seed_, "Random seed for packet centres");
    flag("single", single_, "Use one packet at (n0, theta0) instead of an ensemble");
    add("n0", n0_, "Packet momentum centre (with --single)");
    add("theta0", theta0_, "Packet angle centre (with --single)");
    add("fit-first", fit_.t_first, "First fitted step");
    add("fit-last", fit_last_, "Last fitted step; -1 selects t_max");
    add("fit-floor", fit_.floor, "Exclude points with M <= floor");
    add("fit-ceiling", fit_.ceiling, "Exclude points with M > ceiling");
    add("q-min", fit_.q_min, "Lower end of the q search");
    add("q-max", fit_.q_max, "Upper end of the q search");
  }

  void execute(Run& run) override {
    auto map = wave::KickedMap::torus(lambda_t_, grid_, cells_);
    auto b = echo::parse_perturbation(b_);
    echo::EchoSeries series;
    if (single_) {
      auto psi = wave::WaveState::coherent(grid_, n0_, theta0_, std::sqrt(1.0 / (2.0 * map.period)));
      series = echo::loschmidt_echo(map, b, delta_, psi, t_max_);
    } else {
      echo::EnsembleOptions o;
      o.members = members_;
      o.seed = seed_;
      o.execution = run.execution;
      series = echo::ensemble_echo(map, b, delta_, t_max_, o);
      run.seeds["seed"] = seed_;
    }
    CsvWriter csv("t,M");
    for (std::size_t t = 0; t < series.fidelity.size(); ++t) csv.row(t, series.fidelity[t]);

    auto fo = fit_;
    fo.t_last = fit_last_ < 0 ? t_max_ : fit_last_;
    json fit;
    try {
      auto f = echo::fit_q_exponential(series.fidelity, fo);
      fit = {{"status", f.status == echo::FitStatus::ok ? "ok" : "no-decay"},
             {"q_fid", f.q_fid},
             {"rate", f.rate},
             {"amplitude", f.amplitude},
             {"rms_residual", f.rms_residual},
             {"t_first", f.t_first},
             {"t_last", f.t_last},
             {"points", f.points},
             {"regime", echo::to_string(echo::classify(f))}};
      run.out << "q_fid = " << fmt(f.q_fid) << "  rate = " << fmt(f.rate) << "  regime "
              << echo::to_string(echo::classify(f)) << '\n';
    } catch (const ValidationError& e) {
      fit = {{"status", "skipped"}, {"reason", e.what()}};
      run.out << "fit skipped: " << e.what() << '\n';
    }
    run.results["system"] = series.system;
    run.results["period"] = map.period;
    run.results["lambda"] = map.lambda;
    run.results["fit"] = fit;
    run.table(stem() + ".csv", std::move(csv));
  }

 private:
  std::int64_t grid_ = 4096;
  int cells_ = 8;
  double lambda_t_ = 7.0;
  std::string b_ = "cos";
  double delta_ = 6.0;
  int t_max_ = 40;
  int members_ = 48;
  std::uint64_t seed_ = 0;
  bool single_ = false;
  double n0_ = 0.0;
  double theta0_ = 1.0;
  int fit_last_ = -1;
  echo::DecayFitOptions fit_ = [] {
    echo::DecayFitOptions f;
    f.ceiling = 1.0;
    return f;
  }();
};

struct RotorFlags {
  double lambda_t = 7.0;
  double ratio = 4.0;
  int grid_factor = 4;
};

json describe(const openrotor::RotorParams& p) {
  return {{"N", p.N},         {"lambda", p.lambda},
          {"T", p.T},         {"chaos_parameter", p.chaos_parameter()},
          {"ratio", p.ratio()}, {"grid_factor", p.grid_factor},
          {"grid", p.grid()}};
}

json describe(const openrotor::RelaxationResult& r) {
  return {{"resolved", r.resolved},
          {"relax_time", r.resolved ? json(r.time) : json(nullptr)},
          {"asymptotic_slope", nullable(r.asymptotic_slope)},
          {"window", r.window},
          {"reason", r.reason}};
}

class RotorSurvival final : public Command {
 public:
  explicit RotorSurvival(CLI::App* parent)
      : Command(parent, "survival", "Survival probability of the absorbing rotor", "rotor survival") {
    add("N", n_, "Absorption window (even, >= 8)");
    add("lambdaT", f_.lambda_t, "Chaos parameter lambda T");
    add("ratio", f_.ratio, "N / lambda");
    add("grid-factor", f_.grid_factor, "Grid = next power of two >= grid_factor N");
    add("t-max", t_max_, "Steps; 0 selects 16 sqrt(N)");
  }

  void execute(Run& run) override {
    auto p = openrotor::RotorParams::from_ratio(n_, f_.lambda_t, f_.ratio, f_.grid_factor);
    if (t_max_ < 0) throw ValidationError("t-max violates constraint: >= 0");
    const int t_max = t_max_ == 0 ? openrotor::TmaxRule{}(n_) : t_max_;
    auto s = openrotor::survival_series(p, t_max);
    CsvWriter csv("t,P");
    for (std::size_t t = 0; t < s.probability.size(); ++t) csv.row(t, s.probability[t]);
    auto r = openrotor::relaxation_time(s);
    run.results["params"] = describe(p);
    run.results["t_max"] = t_max;
    run.results["relaxation"] = describe(r);
    run.out << "P(" << t_max << ") = " << fmt(s.probability.back());
    if (r.resolved) run.out << "  relaxation time " << fmt(r.time);
    run.out << '\n';
    run.table(stem() + ".csv", std::move(csv));
  }

 private:
  std::int64_t n_ = 256;
  RotorFlags f_;
  int t_max_ = 0;
};

class RotorScan final : public Command {
 public:
  explicit RotorScan(CLI::App* parent)
      : Command(parent, "scan", "Relaxation-time scaling scan over N", "rotor scan") {
    add("N", n_list_, "Window sizes (comma separated)");
    add("lambdaT", f_.lambda_t, "Chaos parameter lambda T");
    add("ratio", f_.ratio, "N / lambda");
    add("grid-factor", f_.grid_factor, "Grid = next power of two >= grid_factor N");
    add("tmax-multiplier", o_.t_max_rule.multiplier, "t_max = multiplier sqrt(N)");
    add("tmax-cap", o_.t_max_rule.cap, "Upper bound on t_max");
    add("tolerance", o_.relaxation.tolerance, "Relative slope tolerance of the extractor");
    add("tail-fraction", o_.relaxation.tail_fraction, "Series fraction fitted for the tail slope");
    add("window", o_.relaxation.window, "Sliding window; 0 selects max(8, sqrt(N)/2)");
  }

  void execute(Run& run) override {
    auto o = o_;
    o.lambda_times_period = f_.lambda_t;
    o.ratio = f_.ratio;
    o.grid_factor = f_.grid_factor;
    o.execution = run.execution;
    auto fit = openrotor::relaxation_scaling_scan(n_list_, o);
    CsvWriter csv("N,lambda,T,relax_time,resolved");
    json rows = json::array();
    for (const auto& r : fit.rows) {
      if (r.relaxation.resolved) csv.row(r.N, r.lambda, r.T, r.relaxation.time, true);
      else csv.row(r.N, r.lambda, r.T, std::string(), false);
      json d = describe(r.relaxation);
      d["N"] = r.N;
      d["t_max"] = r.t_max;
      rows.push_back(d);
    }
    run.results["exponent"] = fit.exponent;
    run.results["exponent_stderr"] = fit.exponent_stderr;
    run.results["prefactor"] = fit.prefactor;
    run.results["rows"] = rows;
    run.results["warnings"] = fit.warnings;
    run.out << "exponent = " << fmt(fit.exponent) << " +- " << fmt(fit.exponent_stderr) << '\n';
    for (const auto& w : fit.warnings) run.out << "warning: " << w << '\n';
    run.table(stem() + ".csv", std::move(csv));
  }

 private:
  std::vector<std::int64_t> n_list_{64, 128, 256, 512, 1024};
  RotorFlags f_;
  openrotor::ScanOptions o_;
};

class RotorSpectrum final : public Command {
 public:
  explicit RotorSpectrum(CLI::App* parent)
      : Command(parent, "spectrum", "Complex spectrum of the absorbing one-step map", "rotor spectrum") {
    add("N", n_, "Absorption window (even, 8..512)");
    add("lambdaT", f_.lambda_t, "Chaos parameter lambda T");
    add("ratio", f_.ratio, "N / lambda");
    add("grid-factor", f_.grid_factor, "Grid = next power of two >= grid_factor N");
  }

  void execute(Run& run) override {
    auto p = openrotor::RotorParams::from_ratio(n_, f_.lambda_t, f_.ratio, f_.grid_factor);
    auto ring = openrotor::spectrum_ring(p);
    auto z = ring.eigenvalues;
    std::sort(z.begin(), z.end(), [](const auto& a, const auto& b) {
      if (std::abs(a) != std::abs(b)) return std::abs(a) > std::abs(b);
      return std::arg(a) < std::arg(b);
    });
    CsvWriter csv("index,re,im,modulus");
    for (std::size_t i = 0; i < z.size(); ++i) csv.row(i, z[i].real(), z[i].imag(), std::abs(z[i]));
    run.results["params"] = describe(p);
    run.results["mean_modulus"] = ring.mean_modulus;
    run.results["ring_inner"] = ring.ring_inner;
    run.results["ring_outer"] = ring.ring_outer;
    run.results["ring_area"] = ring.ring_area;
    run.results["mean_spacing"] = ring.mean_spacing;
    run.results["spacing_ratio"] = ring.spacing_ratio;
    run.results["qr_iterations"] = ring.qr_iterations;
    run.out << z.size() << " eigenvalues, mean |z| = " << fmt(ring.mean_modulus)
            << ", spacing ratio = " << fmt(ring.spacing_ratio) << '\n';
    run.table(stem() + ".csv", std::move(csv));
  }

 private:
  std::int64_t n_ = 128;
  RotorFlags f_;
};

// ---------------------------------------------------------------------------

// Applies config entries that sit at top level or in the section named after
// the selected subcommand (e.g. [rotor.scan]); flags given on the command line
// win. Keys of other sections are ignored.
void apply_config(const std::string& path, Command& cmd) {
  if (!fs::exists(path)) throw ValidationError("config: file '" + path + "' not found");
  std::vector<CLI::ConfigItem> items;
  try {
    items = CLI::ConfigINI().from_file(path);
  } catch (const CLI::ParseError& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  std::string section = cmd.path();
  std::replace(section.begin(), section.end(), ' ', '.');
  std::ostringstream problems;
  for (const auto& item : items) {
    std::string parents;
    for (const auto& p : item.parents) parents += (parents.empty() ? "" : ".") + p;
    if (!parents.empty() && parents != section && parents != "default") continue;
    if (item.name == "++" || item.name == "--") continue;  // section markers
    CLI::Option* opt = cmd.app()->get_option_no_throw("--" + item.name);
    if (opt == nullptr) {
      problems << "config: unknown key '" << item.name << "' for '" << cmd.path() << "'\n";
      continue;
    }
    if (opt->count() > 0) continue;
    try {
      opt->add_result(item.inputs);
      opt->run_callback();
    } catch (const CLI::ParseError& e) {
      problems << "config: " << item.name << ": " << e.what() << '\n';
    }
  }
  std::string report = problems.str();
  if (!report.empty()) {
    report.pop_back();
    throw ValidationError(report);
  }
}

fs::path default_out_dir() {
  if (const char* env = std::getenv(kOutDirEnv); env != nullptr && *env != '\0') return env;
  return "qchaos-out";
}

int replay(const std::string& manifest_path, std::optional<std::string> out_flag, bool serial,
           std::ostream& out, std::ostream& err) {
  json manifest;
  try {
    manifest = json::parse(read_file(manifest_path));
  } catch (const json::exception& e) {
    throw ValidationError("replay: cannot parse manifest: " + std::string(e.what()));
  }
  if (!manifest.contains("subcommand") || !manifest.contains("parameters") || !manifest.contains("outputs"))
    throw ValidationError("replay: manifest lacks subcommand, parameters or outputs");
  fs::path dir = out_flag ? fs::path(*out_flag)
                          : (std::getenv(kOutDirEnv) && *std::getenv(kOutDirEnv)
                                 ? default_out_dir()
                                 : fs::path(manifest_path).parent_path() / "replay");
  std::vector<std::string> args{"--out", dir.string()};
  if (serial) args.push_back("--serial");
  std::istringstream words(manifest["subcommand"].get<std::string>());
  for (std::string w; words >> w;) args.push_back(w);
  for (const auto& [key, value] : manifest["parameters"].items()) {
    std::string v = value.get<std::string>();
    if (!v.empty()) args.push_back("--" + key + "=" + v);
  }
  int code = run(args, out, err);
  if (code != ok) return code;

  bool same = true;
  for (const auto& o : manifest["outputs"]) {
    const std::string file = o["file"].get<std::string>();
    const std::string digest = sha256_file(dir / file);
    const bool match = digest == o["sha256"].get<std::string>();
    same = same && match;
    out << (match ? "identical " : "DIFFERS ") << file << ' ' << digest << '\n';
  }
  return same ? ok : numerical;
}

CLI::App* deepest(CLI::App& app) {
  CLI::App* cur = &app;
  for (;;) {
    auto subs = cur->get_subcommands();
    if (subs.empty()) return cur;
    cur = subs.front();
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Quantum-chaos time scales: q-algebra, KS entropy, echoes and the open kicked rotator",
               "qchaos"};
  std::string config;
  std::string out_dir;
  bool serial = false;
  app.add_option("--config", config, "INI file whose keys mirror the flags");
  auto* out_opt = app.add_option("--out", out_dir, std::string("Output directory (env ") + kOutDirEnv + ")");
  app.add_flag("--serial", serial, "Run kernels on the serial reference path");
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  app.fallthrough();

  std::vector<std::unique_ptr<Command>> commands;
  auto* qmath_app = app.add_subcommand("qmath", "q-algebra evaluation")->require_subcommand(1);
  commands.push_back(std::make_unique<QmathEval>(qmath_app));
  auto* ks_app = app.add_subcommand("ks", "Kolmogorov-Sinai entropy")->require_subcommand(1);
  commands.push_back(std::make_unique<KsEstimate>(ks_app));
  auto* ts_app = app.add_subcommand("timescale", "Unified time scale")->require_subcommand(1);
  commands.push_back(std::make_unique<TimescaleCurves>(ts_app));
  auto* un_app = app.add_subcommand("uncorrelation", "Deformed uncorrelation")->require_subcommand(1);
  commands.push_back(std::make_unique<UncorrelationTable>(un_app));
  auto* echo_app = app.add_subcommand("echo", "Loschmidt echo")->require_subcommand(1);
  commands.push_back(std::make_unique<EchoRun>(echo_app));
  auto* rotor_app = app.add_subcommand("rotor", "Kicked rotator with absorption")->require_subcommand(1);
  commands.push_back(std::make_unique<RotorSurvival>(rotor_app));
  commands.push_back(std::make_unique<RotorScan>(rotor_app));
  commands.push_back(std::make_unique<RotorSpectrum>(rotor_app));
  auto* replay_app = app.add_subcommand("replay", "Re-run a manifest and compare CSV digests");
  std::string manifest_path;
  replay_app->add_option("manifest", manifest_path, "Path to a .manifest.json")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << deepest(app)->help();
    return ok;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return ok;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << '\n';
    return ok;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << deepest(app)->help();
    return invalid;
  }

  try {
    if (replay_app->parsed())
      return replay(manifest_path, out_opt->count() ? std::optional(out_dir) : std::nullopt, serial, out, err);

    Command* cmd = nullptr;
    for (auto& c : commands)
      if (c->app()->parsed()) cmd = c.get();
    if (cmd == nullptr) throw ValidationError("no subcommand selected");
    if (!config.empty()) apply_config(config, *cmd);

    const fs::path dir = out_opt->count() ? fs::path(out_dir) : default_out_dir();
    Run ctx{out, Execution::parallel, json::object(), json::object(), {}};
    ctx.execution = serial ? Execution::serial : Execution::parallel;
    const auto started = std::chrono::system_clock::now();
    cmd->execute(ctx);
    const auto finished = std::chrono::system_clock::now();

    json outputs = json::array();
    for (const auto& [file, table] : ctx.tables) {
      write_file(dir / file, table.text());
      outputs.push_back({{"file", file},
                         {"sha256", sha256_hex(table.text())},
                         {"bytes", table.text().size()},
                         {"rows", table.rows()}});
    }
    json manifest = {{"tool", "qchaos"},
                     {"version", kVersion},
                     {"subcommand", cmd->path()},
                     {"parameters", cmd->parameters()},
                     {"seeds", json::object()},
                     {"execution", {{"mode", serial ? "serial" : "parallel"}, {"max_threads", max_threads()}}},
                     {"started_at", iso8601_utc(started)},
                     {"finished_at", iso8601_utc(finished)},
                     {"outputs", outputs},
                     {"results", ctx.results}};
    manifest["seeds"] = ctx.seeds;
    write_file(dir / (cmd->stem() + ".manifest.json"), manifest.dump(2) + "\n");
    return ok;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return invalid;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return invalid;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return numerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return io_failure;
  }
}

}  // namespace qchaos::cli
