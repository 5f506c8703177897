#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "krigeweight/core.hpp"
#include "krigeweight/pointprocess.hpp"

namespace krigeweight {

/// Pair weighting for the composite likelihood.
///
/// UNIT gives the plain composite likelihood. SURVEY uses inverse design
/// probabilities w_ij = 1 / (p_i p_j). INTENSITY uses inverse sampling
/// intensities w_ij = 1 / (lambda_i lambda_j).
struct WeightScheme {
  enum class Kind { kUnit, kSurvey, kIntensity };

  Kind kind = Kind::kUnit;
  /// Per-location intensities for INTENSITY. SURVEY reads the sample's own
  /// inclusion probabilities unless these are set.
  std::vector<double> values;

  static WeightScheme unit() { return {}; }
  static WeightScheme survey(std::vector<double> probs = {}) {
    return {Kind::kSurvey, std::move(probs)};
  }
  static WeightScheme intensity(std::vector<double> lambdas) {
    return {Kind::kIntensity, std::move(lambdas)};
  }
};

const char* to_string(WeightScheme::Kind kind);

/// Pairwise contrasts v_ij = Z_i - Z_j for i < j, stored column-wise.
struct ContrastSet {
  std::vector<std::size_t> first;
  std::vector<std::size_t> second;
  std::vector<double> contrast;
  std::vector<double> dist;
  std::vector<double> weight;
  /// Coincident pairs dropped because gamma(0) = 0 makes their density degenerate.
  std::size_t excluded_zero_distance = 0;

  std::size_t size() const { return contrast.size(); }
};

ContrastSet build_contrasts(const SpatialSample& sample, const WeightScheme& scheme,
                            std::optional<double> max_lag = std::nullopt);

/// Negative log weighted composite likelihood with N(0, 2 gamma) contrasts:
///   sum_ij w_ij * ( v_ij^2 / (4 gamma_ij) + 0.5 log gamma_ij ).
/// Pairs are summed in stored order, so the result is bit-reproducible.
double neg_log_wcl(const VariogramModel& params, const ContrastSet& contrasts);

struct FitConfig {
  int max_iterations = 2000;
  double diameter_tol = 1e-8;
  double lower_bound = 1e-8;
  double upper_bound = 1e8;
  std::optional<double> max_lag;
  /// Restart the simplex once from the optimum to guard against collapse.
  bool restart = true;
};

struct FitResult {
  VariogramModel model;
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
  std::size_t pairs = 0;
  std::size_t excluded_pairs = 0;
};

/// Scale-aware starting point: nugget = partial sill = var(Z)/2,
/// range = max pairwise distance / 4.
VariogramModel default_initial_model(const SpatialSample& sample);

/// Minimizes neg_log_wcl over (log nugget, log partial sill, log range).
FitResult fit_variogram(const SpatialSample& sample, const WeightScheme& scheme,
                        std::optional<VariogramModel> init = std::nullopt,
                        const FitConfig& config = {});

/// Same as fit_variogram on a prebuilt contrast set.
FitResult fit_contrasts(const ContrastSet& contrasts, const VariogramModel& init,
                        const FitConfig& config = {});

struct EmpiricalBin {
  double lag = 0.0;  ///< bin midpoint
  std::optional<double> gamma;
  std::size_t count = 0;
};

/// Matheron method-of-moments estimator on the half-open bins [e_k, e_{k+1}).
/// The last bin is closed on the right.
std::vector<EmpiricalBin> empirical_semivariogram(const SpatialSample& sample,
                                                  std::span<const double> bin_edges);

struct MarkVariogramPoint {
  double lag = 0.0;
  std::optional<double> gamma;  ///< empty when the kernel weights underflow
};

/// Kernel-weighted mark semivariogram with inverse-intensity pair weights,
/// on semivariogram scale (half the weighted mean squared difference).
/// A Gaussian kernel is used. A non-positive `bandwidth` selects
/// 0.5 * median pairwise distance / lags.size().
std::vector<MarkVariogramPoint> mark_variogram_corrected(const SpatialSample& sample,
                                                         std::span<const double> intensity_at_sample,
                                                         std::span<const double> lags,
                                                         double bandwidth = 0.0);

std::vector<MarkVariogramPoint> mark_variogram_corrected(const SpatialSample& sample,
                                                         const IntensitySurface& intensity,
                                                         std::span<const double> lags,
                                                         double bandwidth = 0.0);

}  // namespace krigeweight
