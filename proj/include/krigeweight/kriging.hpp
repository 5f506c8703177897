#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "krigeweight/core.hpp"
#include "krigeweight/pointprocess.hpp"

namespace krigeweight {

enum class VarianceScheme { kSampleOnly, kPopulation, kScaled, kSimulated };

const char* to_string(VarianceScheme scheme);

/// What var(Z(s*)) means in the kriging variance.
enum class PredictionTarget {
  kNoisyObservation,  ///< nugget + partial sill; a new measurement at s*
  kLatentSurface,     ///< partial sill only; the smooth process at s*
};

struct KrigingOptions {
  PredictionTarget target = PredictionTarget::kNoisyObservation;
};

struct KrigingResult {
  double mean = 0.0;
  double variance = 0.0;
  VarianceScheme scheme = VarianceScheme::kSampleOnly;
  std::size_t effective_n = 0;
  /// Set when the raw variance was below -1e-10 * sill before clamping.
  bool negative_variance_clamped = false;
  /// Scaled-scheme means use distance-scaled covariances and are not a
  /// standard ordinary kriging predictor.
  bool nonstandard_mean = false;
};

/// Factorized ordinary kriging system for one set of locations. Every
/// distance, including those to prediction points, is multiplied by
/// `distance_scale` before the covariance function is applied.
class KrigingSystem {
 public:
  KrigingSystem(LocationSet locations, const VariogramModel& model, double distance_scale = 1.0,
                KrigingOptions options = {});

  std::size_t size() const { return locations_.size(); }
  const LocationSet& locations() const { return locations_; }
  const VariogramModel& model() const { return model_; }
  double distance_scale() const { return scale_; }

  Eigen::VectorXd cross_covariance(const Location& pred) const;

  /// Ordinary kriging variance; value-free. The second member is the raw
  /// (pre-clamp) value.
  std::pair<double, double> variance(const Location& pred) const;

  /// Generalized least squares mean 1'C^-1 Z / 1'C^-1 1.
  double gls_mean(std::span<const double> values) const;

  /// Mean and variance at `pred` given values at the system locations.
  KrigingResult predict(const Location& pred, std::span<const double> values) const;

 private:
  LocationSet locations_;
  VariogramModel model_;
  double scale_;
  KrigingOptions options_;
  JitteredCholesky chol_;
  Eigen::VectorXd cinv_one_;
  double one_cinv_one_ = 0.0;
};

double gls_mean(const SpatialSample& sample, const VariogramModel& m);

KrigingResult ordinary_kriging(const Location& pred, const SpatialSample& sample,
                               const VariogramModel& m, KrigingOptions options = {});

/// Ordinary kriging variance using every population location (sampled and
/// known unsampled).
double population_variance(const Location& pred, std::span<const Location> all_locs,
                           const VariogramModel& m, KrigingOptions options = {});

struct RateEstimate {
  double rate = 0.0;
  /// No sample point within 6 bandwidths; the global mean rate was used.
  bool fell_back = false;
};

/// Twice the median nearest-neighbour distance.
double default_rate_bandwidth(std::span<const Location> locs);

/// Gaussian-kernel Nadaraya-Watson average of the rates, clamped to [1e-6, 1].
RateEstimate smooth_inclusion_rate(std::span<const Location> locs, std::span<const double> rates,
                                   const Location& target, double bandwidth);

/// Ordinary kriging with every distance multiplied by sqrt(rate_at_pred).
KrigingResult scaled_kriging_variance(const Location& pred, const SpatialSample& sample,
                                      const VariogramModel& m, double rate_at_pred,
                                      KrigingOptions options = {});

struct SimulatedOptions {
  KrigingOptions kriging{};
  /// Refuse combined sizes above this unless `allow_large` is set.
  std::size_t max_combined = 20'000;
  bool allow_large = false;
};

/// Ordinary kriging variance over the sample locations plus the
/// pseudo-observation locations.
KrigingResult simulated_kriging_variance(const Location& pred, const SpatialSample& sample,
                                         const VariogramModel& m,
                                         const PseudoObservationSet& pseudo,
                                         SimulatedOptions options = {});

/// Variance at many prediction points sharing one combined factorization.
std::vector<KrigingResult> simulated_kriging_variances(std::span<const Location> preds,
                                                       const SpatialSample& sample,
                                                       const VariogramModel& m,
                                                       const PseudoObservationSet& pseudo,
                                                       SimulatedOptions options = {});

/// Scaled variances at many prediction points; systems are shared between
/// points with identical rates.
std::vector<KrigingResult> scaled_kriging_variances(std::span<const Location> preds,
                                                    const SpatialSample& sample,
                                                    const VariogramModel& m,
                                                    std::span<const double> rates,
                                                    KrigingOptions options = {});

}  // namespace krigeweight
