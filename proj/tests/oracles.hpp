#pragma once

// Test-only oracles. Nothing here calls into the code paths it checks.

#include <cmath>
#include <cstdint>
#include <map>
#include <vector>

namespace qchaos::oracle {

/// Exact refinement of the doubling map with the two-cell partition: the
/// itinerary of length L names the dyadic interval [k 2^-L, (k+1) 2^-L),
/// whose binary digits are the labels. Returns key -> exact measure.
inline std::map<std::uint64_t, double> doubling_atoms(int n) {
  const int len = n + 1;
  std::map<std::uint64_t, double> atoms;
  const double mu = std::ldexp(1.0, -len);
  for (std::uint64_t k = 0; k < (std::uint64_t{1} << len); ++k) atoms[k] = mu;
  return atoms;
}

/// H(n) = sum mu ln(1/mu) over the exact dyadic atoms.
inline double doubling_entropy(int n) {
  double h = 0.0;
  for (const auto& [key, mu] : doubling_atoms(n)) h -= mu * std::log(mu);
  return h;
}

/// Brute-force refinement of the baker's map with the left/right partition
/// over a sheared (2^bits x 2^bits) lattice: point (i, j) sits at
/// x = (i + (j + 1/2) 2^-bits) 2^-bits, y = (j + 1/2) 2^-bits, so all x are
/// distinct. The map is iterated in exact integer arithmetic on coordinates
/// scaled by 2^(2 bits + 1). Returns Shannon H(n), n = 0..n_max.
inline std::vector<double> baker_lattice_entropies(int bits, int n_max) {
  const std::uint64_t side = std::uint64_t{1} << bits;
  const std::uint64_t scale = side * side * 2;
  const std::uint64_t half = scale / 2;
  std::vector<std::vector<std::uint64_t>> counts(static_cast<std::size_t>(n_max) + 1);
  for (int n = 0; n <= n_max; ++n) counts[static_cast<std::size_t>(n)].assign(std::size_t{1} << (n + 1), 0);
  for (std::uint64_t i = 0; i < side; ++i)
    for (std::uint64_t j = 0; j < side; ++j) {
      std::uint64_t x = 2 * (i * side + j) + 1;
      std::uint64_t y = (2 * j + 1) * side;
      std::uint64_t key = 0;
      for (int n = 0; n <= n_max; ++n) {
        std::uint64_t bit = x >= half ? 1 : 0;
        key = (key << 1) | bit;
        ++counts[static_cast<std::size_t>(n)][key];
        x = 2 * x - bit * scale;
        y = (y + bit * scale) / 2;
      }
    }
  const double total = static_cast<double>(side * side);
  std::vector<double> h;
  for (const auto& c : counts) {
    double s = 0.0;
    for (std::uint64_t k : c)
      if (k) {
        double mu = static_cast<double>(k) / total;
        s -= mu * std::log(mu);
      }
    h.push_back(s);
  }
  return h;
}

/// OLS slope of y over x = first..last.
inline double slope(const std::vector<double>& y, int first, int last) {
  double n = last - first + 1, sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int i = first; i <= last; ++i) {
    sx += i;
    sy += y[static_cast<std::size_t>(i)];
    sxx += double(i) * i;
    sxy += i * y[static_cast<std::size_t>(i)];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace qchaos::oracle
