#pragma once

#include <functional>
#include <vector>

namespace krigeweight {

struct NelderMeadOptions {
  int max_iterations = 2000;
  /// Converged once the largest vertex distance from the best vertex falls below this.
  double diameter_tol = 1e-8;
  double initial_step = 1.0;
  /// Box bounds, applied to every coordinate by clamping trial points.
  double lower = -1e300;
  double upper = 1e300;
};

struct NelderMeadResult {
  std::vector<double> x;
  double value = 0.0;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
};

/// Derivative-free simplex minimizer (reflection 1, expansion 2,
/// contraction 0.5, shrink 0.5). Non-finite objective values are treated
/// as +infinity.
NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                             std::vector<double> start, const NelderMeadOptions& opts = {});

}  // namespace krigeweight
