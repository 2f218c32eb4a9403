#pragma once

// Eigenvalues of dense complex non-symmetric matrices: Householder reduction
// to upper Hessenberg form followed by Wilkinson-shifted complex QR sweeps
// with Givens rotations and deflation on negligible subdiagonals.

#include <complex>
#include <cstddef>
#include <vector>

namespace qchaos::linalg {

using complex = std::complex<double>;

/// Row-major square complex matrix.
class ComplexMatrix {
 public:
  explicit ComplexMatrix(std::size_t n) : n_(n), data_(n * n) {}

  std::size_t size() const noexcept { return n_; }
  complex& operator()(std::size_t r, std::size_t c) { return data_[r * n_ + c]; }
  const complex& operator()(std::size_t r, std::size_t c) const { return data_[r * n_ + c]; }

 private:
  std::size_t n_;
  std::vector<complex> data_;
};

struct EigenOptions {
  int max_iterations_per_eigenvalue = 60;
};

struct EigenResult {
  std::vector<complex> values;
  int total_iterations = 0;
};

/// Throws NumericalError (naming the stuck row and iteration count) when an
/// eigenvalue fails to deflate.
EigenResult eigenvalues(ComplexMatrix a, const EigenOptions& options = {});

/// In-place Householder reduction to upper Hessenberg form (similarity
/// transform). Exposed for testing.
void reduce_to_hessenberg(ComplexMatrix& a);

}  // namespace qchaos::linalg
