#pragma once

#include <span>

namespace qchaos {

/// Ordinary least-squares line y = intercept + slope * x.
struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  /// Standard error of the slope from the residual variance; 0 for an exact
  /// fit or for two points.
  double slope_stderr = 0.0;
  double rms_residual = 0.0;
};

/// Throws ValidationError for fewer than two points, mismatched lengths or
/// all-equal abscissae.
LineFit fit_line(std::span<const double> x, std::span<const double> y);

}  // namespace qchaos
