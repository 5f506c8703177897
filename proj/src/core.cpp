#include "krigeweight/core.hpp"

#include <cmath>
#include <fmt/format.h>

#include "krigeweight/random.hpp"

namespace krigeweight {

double distance(const Location& a, const Location& b) { return std::hypot(a.x - b.x, a.y - b.y); }

void VariogramModel::validate() const {
  if (!std::isfinite(nugget) || !std::isfinite(partial_sill) || !std::isfinite(range)) {
    throw std::invalid_argument("variogram parameters must be finite");
  }
  if (nugget < 0.0) throw std::invalid_argument("nugget must be >= 0");
  if (partial_sill <= 0.0) throw std::invalid_argument("partial sill must be > 0");
  if (range <= 0.0) throw std::invalid_argument("range must be > 0");
}

void SpatialSample::validate() const {
  if (values.size() != locations.size()) {
    throw std::invalid_argument(fmt::format("sample has {} locations but {} values",
                                            locations.size(), values.size()));
  }
  for (const auto& loc : locations) {
    if (!std::isfinite(loc.x) || !std::isfinite(loc.y)) {
      throw std::invalid_argument("sample coordinates must be finite");
    }
  }
  if (inclusion_probs) {
    if (inclusion_probs->size() != locations.size()) {
      throw std::invalid_argument("inclusion_probs length differs from locations");
    }
    for (double p : *inclusion_probs) {
      if (!(p > 0.0 && p <= 1.0)) {
        throw std::invalid_argument(fmt::format("inclusion probability {} outside (0, 1]", p));
      }
    }
  }
}

Eigen::MatrixXd distance_matrix(std::span<const Location> locs) {
  const auto n = static_cast<Eigen::Index>(locs.size());
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double dij = distance(locs[i], locs[j]);
      d(i, j) = dij;
      d(j, i) = dij;
    }
  }
  return d;
}

double semivariogram(double d, const VariogramModel& m) {
  if (d < 0.0 || std::isnan(d)) throw std::invalid_argument("distance must be >= 0");
  if (d == 0.0) return 0.0;
  return m.sill() - covariance(d, m);
}

double covariance(double d, const VariogramModel& m) {
  if (d < 0.0 || std::isnan(d)) throw std::invalid_argument("distance must be >= 0");
  const double sill = m.sill();
  if (d == 0.0) return sill;
  const double c = m.partial_sill * std::exp(-d / m.range);
  // Below half the sill, round C so that sill - C is exact (Sterbenz); then
  // covariance + semivariogram reproduces the sill bit for bit.
  if (c >= 0.5 * sill) return c;
  return sill - (sill - c);
}

Eigen::MatrixXd covariance_matrix(std::span<const Location> locs, const VariogramModel& m,
                                  double scale) {
  const auto n = static_cast<Eigen::Index>(locs.size());
  Eigen::MatrixXd c(n, n);
  const double c0 = m.sill();
  for (Eigen::Index i = 0; i < n; ++i) {
    c(i, i) = c0;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double cij = covariance(scale * distance(locs[i], locs[j]), m);
      c(i, j) = cij;
      c(j, i) = cij;
    }
  }
  return c;
}

namespace {

// Eigen accepts pivots that are positive only through rounding; treat those
// as failures so the jitter schedule kicks in.
bool factor_ok(const Eigen::LLT<Eigen::MatrixXd>& llt, double sill) {
  if (llt.info() != Eigen::Success) return false;
  const double min_pivot = llt.matrixLLT().diagonal().minCoeff();
  return std::isfinite(min_pivot) && min_pivot * min_pivot > 1e-15 * sill;
}

}  // namespace

JitteredCholesky factorize_with_jitter(const Eigen::MatrixXd& cov, double sill) {
  JitteredCholesky out;
  if (cov.size() == 0) return out;
  out.llt.compute(cov);
  if (factor_ok(out.llt, sill)) return out;

  Eigen::MatrixXd work = cov;
  for (double rel = 1e-10; rel <= 1e-6 * (1.0 + 1e-9); rel *= 10.0) {
    const double jitter = rel * sill;
    work.diagonal() = cov.diagonal().array() + jitter;
    out.llt.compute(work);
    if (factor_ok(out.llt, sill)) {
      out.jitter = jitter;
      return out;
    }
  }
  throw IllConditionedError(
      "covariance matrix is not positive definite after maximum jitter "
      "(coincident locations with zero nugget?)");
}

Eigen::VectorXd standard_normals(Eigen::Index n, std::uint64_t seed) {
  Engine rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd z(n);
  for (Eigen::Index i = 0; i < n; ++i) z(i) = normal(rng);
  return z;
}

GpRealization simulate_gp(std::span<const Location> locs, const VariogramModel& m, double mean,
                          std::uint64_t seed) {
  if (locs.empty()) throw std::invalid_argument("simulate_gp needs at least one location");
  m.validate();
  const auto chol = factorize_with_jitter(covariance_matrix(locs, m), m.sill());
  const Eigen::VectorXd z = standard_normals(static_cast<Eigen::Index>(locs.size()), seed);
  const Eigen::VectorXd w = chol.llt.matrixL() * z;

  GpRealization out;
  out.locations.assign(locs.begin(), locs.end());
  out.values.resize(locs.size());
  for (std::size_t i = 0; i < locs.size(); ++i) out.values[i] = mean + w(static_cast<Eigen::Index>(i));
  out.model = m;
  out.mean = mean;
  return out;
}

}  // namespace krigeweight
