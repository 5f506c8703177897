#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

namespace krigeweight {

/// Raised when a covariance matrix cannot be factorized even after the
/// maximum diagonal jitter has been applied.
class IllConditionedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Location {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Location&, const Location&) = default;
};

/// Ordered point collection; index order defines identity.
using LocationSet = std::vector<Location>;

double distance(const Location& a, const Location& b);

/// Exponential semivariogram with nugget.
///
/// gamma(0) = 0, gamma(d > 0) = nugget + partial_sill * (1 - exp(-d / range)).
/// The nugget is part of the total variance, so C(0) = nugget + partial_sill.
struct VariogramModel {
  double nugget = 0.0;
  double partial_sill = 1.0;
  double range = 1.0;

  double sill() const { return nugget + partial_sill; }

  /// Throws std::invalid_argument unless nugget >= 0, partial_sill > 0,
  /// range > 0 and all finite.
  void validate() const;
};

struct SpatialSample {
  LocationSet locations;
  std::vector<double> values;
  std::optional<std::vector<double>> inclusion_probs;

  std::size_t size() const { return locations.size(); }

  /// Checks vector lengths and that inclusion probabilities lie in (0, 1].
  void validate() const;
};

struct GpRealization {
  LocationSet locations;
  std::vector<double> values;
  VariogramModel model;
  double mean = 0.0;
};

Eigen::MatrixXd distance_matrix(std::span<const Location> locs);

double semivariogram(double d, const VariogramModel& m);
double covariance(double d, const VariogramModel& m);

/// Covariance matrix C(scale * d_ij). `scale` multiplies every distance
/// before the covariance function is applied.
Eigen::MatrixXd covariance_matrix(std::span<const Location> locs, const VariogramModel& m,
                                  double scale = 1.0);

/// Result of a jittered Cholesky factorization.
struct JitteredCholesky {
  Eigen::LLT<Eigen::MatrixXd> llt;
  double jitter = 0.0;
};

/// Factorizes `cov`, adding 1e-10 * sill to the diagonal and escalating by
/// x10 up to 1e-6 * sill when the plain factorization fails.
JitteredCholesky factorize_with_jitter(const Eigen::MatrixXd& cov, double sill);

/// Draws one realization of N(mean, C) at `locs` using the jittered Cholesky
/// factor of C. Deterministic for a given seed.
GpRealization simulate_gp(std::span<const Location> locs, const VariogramModel& m, double mean,
                          std::uint64_t seed);

/// Draws N(0, I) variates of length n from a dedicated engine seeded by `seed`.
Eigen::VectorXd standard_normals(Eigen::Index n, std::uint64_t seed);

}  // namespace krigeweight
