#include "qchaos/complex_eigen.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "qchaos/error.hpp"

namespace qchaos::linalg {

void reduce_to_hessenberg(ComplexMatrix& a) {
  const std::size_t n = a.size();
  if (n < 3) return;
  std::vector<complex> v(n);
  for (std::size_t k = 0; k + 2 < n; ++k) {
    double alpha_norm = 0.0;
    for (std::size_t i = k + 1; i < n; ++i) alpha_norm += std::norm(a(i, k));
    alpha_norm = std::sqrt(alpha_norm);
    if (alpha_norm == 0.0) continue;

    // v = x + e^{i arg x0} |x| e1; H = I - 2 v v^H / (v^H v).
    complex x0 = a(k + 1, k);
    complex phase = std::abs(x0) == 0.0 ? complex(1.0) : x0 / std::abs(x0);
    for (std::size_t i = k + 1; i < n; ++i) v[i] = a(i, k);
    v[k + 1] += phase * alpha_norm;
    double vnorm2 = 0.0;
    for (std::size_t i = k + 1; i < n; ++i) vnorm2 += std::norm(v[i]);
    if (vnorm2 == 0.0) continue;
    const double beta = 2.0 / vnorm2;

    // A <- H A
    for (std::size_t j = k; j < n; ++j) {
      complex s{};
      for (std::size_t i = k + 1; i < n; ++i) s += std::conj(v[i]) * a(i, j);
      s *= beta;
      for (std::size_t i = k + 1; i < n; ++i) a(i, j) -= v[i] * s;
    }
    // A <- A H
    for (std::size_t i = 0; i < n; ++i) {
      complex s{};
      for (std::size_t j = k + 1; j < n; ++j) s += a(i, j) * v[j];
      s *= beta;
      for (std::size_t j = k + 1; j < n; ++j) a(i, j) -= s * std::conj(v[j]);
    }
    for (std::size_t i = k + 2; i < n; ++i) a(i, k) = 0.0;
  }
}

namespace {

struct Givens {
  double c = 1.0;
  complex s{};
};

// Rotation G with G [a; b] = [r; 0].
Givens make_givens(complex a, complex b) {
  const double abs_a = std::abs(a);
  const double r = std::hypot(abs_a, std::abs(b));
  if (r == 0.0) return {};
  if (abs_a == 0.0) return {0.0, complex(1.0)};
  return {abs_a / r, (a / abs_a) * std::conj(b) / r};
}

void rotate_rows(ComplexMatrix& h, const Givens& g, std::size_t k, std::size_t c0, std::size_t c1) {
  for (std::size_t j = c0; j <= c1; ++j) {
    complex x = h(k, j), y = h(k + 1, j);
    h(k, j) = g.c * x + g.s * y;
    h(k + 1, j) = -std::conj(g.s) * x + g.c * y;
  }
}

void rotate_cols(ComplexMatrix& h, const Givens& g, std::size_t k, std::size_t r0, std::size_t r1) {
  for (std::size_t i = r0; i <= r1; ++i) {
    complex x = h(i, k), y = h(i, k + 1);
    h(i, k) = x * g.c + y * std::conj(g.s);
    h(i, k + 1) = -x * g.s + y * g.c;
  }
}

// Eigenvalue of the trailing 2x2 block closer to its bottom-right entry.
complex wilkinson_shift(const ComplexMatrix& h, std::size_t u) {
  complex a = h(u - 1, u - 1), b = h(u - 1, u), c = h(u, u - 1), d = h(u, u);
  complex half = 0.5 * (a - d);
  complex disc = std::sqrt(half * half + b * c);
  complex mu1 = 0.5 * (a + d) + disc;
  complex mu2 = 0.5 * (a + d) - disc;
  return std::abs(mu1 - d) < std::abs(mu2 - d) ? mu1 : mu2;
}

}  // namespace

EigenResult eigenvalues(ComplexMatrix h, const EigenOptions& options) {
  const std::size_t n = h.size();
  EigenResult out;
  out.values.assign(n, complex{});
  if (n == 0) return out;
  reduce_to_hessenberg(h);

  const double eps = std::numeric_limits<double>::epsilon();
  double scale = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = (i == 0 ? 0 : i - 1); j < n; ++j) scale = std::max(scale, std::abs(h(i, j)));
  const double tiny = std::numeric_limits<double>::min() / eps;

  std::size_t u = n - 1;
  int iter = 0;
  while (true) {
    // Find the start l of the unreduced block ending at u.
    std::size_t l = u;
    while (l > 0) {
      double s = std::abs(h(l - 1, l - 1)) + std::abs(h(l, l));
      if (s == 0.0) s = scale;
      if (std::abs(h(l, l - 1)) <= eps * s || std::abs(h(l, l - 1)) < tiny) {
        h(l, l - 1) = 0.0;
        break;
      }
      --l;
    }
    if (l == u) {
      out.values[u] = h(u, u);
      iter = 0;
      if (u == 0) break;
      --u;
      continue;
    }
    if (++iter > options.max_iterations_per_eigenvalue)
      throw NumericalError("complex QR: eigenvalue " + std::to_string(u) + " of " +
                           std::to_string(n) + " did not converge after " +
                           std::to_string(iter - 1) + " iterations (active block " +
                           std::to_string(l) + ".." + std::to_string(u) + ")");
    ++out.total_iterations;

    complex shift;
    if (iter % 10 == 0) {
      // Exceptional shift to break cycles.
      shift = h(u, u) + complex(std::abs(h(u, u - 1)), 0.0) * 0.75;
    } else {
      shift = wilkinson_shift(h, u);
    }

    Givens g = make_givens(h(l, l) - shift, h(l + 1, l));
    rotate_rows(h, g, l, l, u);
    rotate_cols(h, g, l, l, std::min(l + 2, u));
    for (std::size_t k = l + 1; k < u; ++k) {
      g = make_givens(h(k, k - 1), h(k + 1, k - 1));
      rotate_rows(h, g, k, k - 1, u);
      h(k + 1, k - 1) = 0.0;
      rotate_cols(h, g, k, l, std::min(k + 2, u));
    }
  }
  return out;
}

}  // namespace qchaos::linalg
