#include "qchaos/echo.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "qchaos/error.hpp"

namespace qchaos::echo {

using qmath::EntropicIndex;
using wave::KickedMap;
using wave::Propagator;
using wave::WaveState;

Perturbation parse_perturbation(const std::string& text) {
  if (text == "cos" || text == "cos_theta") return Perturbation::cos_theta;
  if (text == "sin" || text == "sin_theta") return Perturbation::sin_theta;
  throw ValidationError("perturbation: unknown operator '" + text + "', expected cos or sin");
}

std::string to_string(Perturbation b) {
  return b == Perturbation::cos_theta ? "cos" : "sin";
}

namespace {

double perturbation_fn_cos(double th) { return std::cos(th); }
double perturbation_fn_sin(double th) { return std::sin(th); }

std::string describe(const KickedMap& m) {
  std::ostringstream os;
  os.precision(17);
  os << "kicked-rotator lambda=" << m.lambda << " T=" << m.period << " grid=" << m.grid;
  return os.str();
}

void check_drift(const WaveState& s, int t) {
  double drift = std::abs(s.norm2() - 1.0);
  if (drift > 1e-9) {
    std::ostringstream os;
    os << "echo: norm drift " << drift << " at step " << t << " exceeds 1e-9";
    throw NumericalError(os.str());
  }
}

}  // namespace

EchoSeries loschmidt_echo(const KickedMap& base, Perturbation b, double delta,
                          const WaveState& psi0, int t_max) {
  if (base.absorbing())
    throw ValidationError("echo: the base map must be unitary (absorption window set)");
  if (t_max < 1) throw ValidationError("echo: t_max must be >= 1");
  if (!std::isfinite(delta)) throw ValidationError("echo: delta must be finite");
  if (psi0.grid() != base.grid) throw ValidationError("echo: initial state grid mismatch");
  if (std::abs(psi0.norm2() - 1.0) > 1e-9)
    throw ValidationError("echo: initial state must be normalised");

  Propagator forward(base);
  Propagator perturbed(base);
  const wave::AnglePhase kick = wave::angle_phase(
      base.grid, delta, b == Perturbation::cos_theta ? perturbation_fn_cos : perturbation_fn_sin);

  EchoSeries out;
  out.delta = delta;
  out.system = describe(base);
  out.fidelity.reserve(static_cast<std::size_t>(t_max) + 1);
  out.fidelity.push_back(1.0);

  WaveState a = psi0;
  WaveState p = psi0;
  for (int t = 1; t <= t_max; ++t) {
    forward.step(a, false);
    check_drift(a, t);
    if (delta == 0.0) {
      // U'_0 = U: the echo is identically one.
      out.fidelity.push_back(1.0);
      continue;
    }
    perturbed.step_after(p, kick, false);
    check_drift(p, t);
    out.fidelity.push_back(std::norm(p.overlap(a)));
  }
  return out;
}

EchoSeries ensemble_echo(const KickedMap& base, Perturbation b, double delta, int t_max,
                         const EnsembleOptions& options) {
  if (options.members < 1) throw ValidationError("echo ensemble: need at least one member");
  if (t_max < 1) throw ValidationError("echo: t_max must be >= 1");
  const double sigma = std::sqrt(1.0 / (2.0 * base.period));
  const auto members = static_cast<std::size_t>(options.members);

  std::vector<std::vector<double>> runs(members);
  const bool par = options.execution == Execution::parallel;
  const auto count = static_cast<std::int64_t>(members);
#pragma omp parallel for schedule(dynamic) if (par)
  for (std::int64_t k = 0; k < count; ++k) {
    std::seed_seq seq{static_cast<std::uint32_t>(options.seed),
                      static_cast<std::uint32_t>(options.seed >> 32),
                      static_cast<std::uint32_t>(k)};
    std::mt19937_64 engine(seq);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    const double g = static_cast<double>(base.grid);
    const double n0 = (uniform(engine) - 0.5) * g;
    const double theta0 = 2.0 * std::numbers::pi * uniform(engine);
    WaveState psi0 = WaveState::coherent(base.grid, n0, theta0, sigma);
    runs[static_cast<std::size_t>(k)] = loschmidt_echo(base, b, delta, psi0, t_max).fidelity;
  }

  EchoSeries out;
  out.delta = delta;
  out.system = describe(base) + " ensemble=" + std::to_string(options.members);
  out.fidelity.assign(static_cast<std::size_t>(t_max) + 1, 0.0);
  for (const auto& run : runs)
    for (std::size_t t = 0; t < run.size(); ++t) out.fidelity[t] += run[t];
  for (double& m : out.fidelity) m /= static_cast<double>(members);
  out.fidelity[0] = 1.0;
  return out;
}

double q_correlation_model(double eta, std::int64_t n_states, EntropicIndex q, int m) {
  if (!(eta >= 1.0) || !std::isfinite(eta))
    throw ValidationError("q_correlation_model: eta must be >= 1");
  if (n_states < 1) throw ValidationError("q_correlation_model: N must be >= 1");
  if (m < 1) throw ValidationError("q_correlation_model: m must be >= 1");
  const double k = eta / static_cast<double>(n_states);
  const double lambda_q = qmath::q_log(eta, q);
  return k / qmath::q_exp(lambda_q * m, q);
}

double q_correlation_discrete(double eta, std::int64_t n_states, const std::vector<double>& gammas,
                              const std::vector<IntersectionMeasure>& intersections,
                              EntropicIndex q) {
  if (!(eta >= 1.0) || !std::isfinite(eta))
    throw ValidationError("q_correlation_discrete: eta must be >= 1");
  if (n_states < 1) throw ValidationError("q_correlation_discrete: N must be >= 1");
  if (gammas.empty()) throw ValidationError("q_correlation_discrete: no weights");
  for (double g : gammas)
    if (!(g > 0.0)) throw ValidationError("q_correlation_discrete: weights must be positive");

  double total_measure = 0.0;
  double sum = 0.0;
  for (std::size_t t = 0; t < intersections.size(); ++t) {
    const auto& term = intersections[t];
    if (term.cells.empty()) throw ValidationError("q_correlation_discrete: empty intersection");
    if (!(term.measure >= 0.0))
      throw ValidationError("q_correlation_discrete: negative intersection measure");
    total_measure += term.measure;
    double product = 0.0;
    for (std::size_t i = 0; i < term.cells.size(); ++i) {
      int j = term.cells[i];
      if (j < 0 || static_cast<std::size_t>(j) >= gammas.size())
        throw ValidationError("q_correlation_discrete: cell index out of range");
      double inv = 1.0 / gammas[static_cast<std::size_t>(j)];
      if (i == 0) {
        product = inv;
        continue;
      }
      qmath::CutoffValue next = qmath::q_prod(product, inv, q);
      if (next.cutoff)
        throw DomainError("q_correlation_discrete: q-product cutoff in term " + std::to_string(t));
      product = next.value;
    }
    sum += term.measure / product;
  }
  if (std::abs(total_measure - 1.0) > 1e-9)
    throw ValidationError("q_correlation_discrete: intersection measures must sum to 1");
  return eta / static_cast<double>(n_states) * sum;
}

double regular_index(int degrees_of_freedom) {
  if (degrees_of_freedom < 1) throw ValidationError("regular_index: D must be >= 1");
  const double three_d = 3.0 * degrees_of_freedom;
  return (three_d - 2.0) / three_d;
}

}  // namespace qchaos::echo
