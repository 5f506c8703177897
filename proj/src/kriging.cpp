#include "krigeweight/kriging.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include <fmt/format.h>

namespace krigeweight {

const char* to_string(VarianceScheme scheme) {
  switch (scheme) {
    case VarianceScheme::kSampleOnly: return "sample";
    case VarianceScheme::kPopulation: return "population";
    case VarianceScheme::kScaled: return "scaled";
    case VarianceScheme::kSimulated: return "simulated";
  }
  return "?";
}

KrigingSystem::KrigingSystem(LocationSet locations, const VariogramModel& model,
                             double distance_scale, KrigingOptions options)
    : locations_(std::move(locations)), model_(model), scale_(distance_scale), options_(options) {
  if (locations_.empty()) throw std::invalid_argument("kriging needs at least one location");
  if (!(distance_scale > 0.0) || !std::isfinite(distance_scale)) {
    throw std::invalid_argument("distance scale must be positive");
  }
  model_.validate();
  chol_ = factorize_with_jitter(covariance_matrix(locations_, model_, scale_), model_.sill());
  cinv_one_ = chol_.llt.solve(Eigen::VectorXd::Ones(static_cast<Eigen::Index>(size())));
  one_cinv_one_ = cinv_one_.sum();
  if (!(one_cinv_one_ > 0.0) || !std::isfinite(one_cinv_one_)) {
    throw IllConditionedError("1'C^-1 1 is not positive; covariance is singular");
  }
}

Eigen::VectorXd KrigingSystem::cross_covariance(const Location& pred) const {
  Eigen::VectorXd c(static_cast<Eigen::Index>(size()));
  const bool latent = options_.target == PredictionTarget::kLatentSurface;
  for (std::size_t i = 0; i < size(); ++i) {
    const double d = scale_ * distance(pred, locations_[i]);
    c(static_cast<Eigen::Index>(i)) =
        latent ? model_.partial_sill * std::exp(-d / model_.range) : covariance(d, model_);
  }
  return c;
}

std::pair<double, double> KrigingSystem::variance(const Location& pred) const {
  const Eigen::VectorXd c = cross_covariance(pred);
  const Eigen::VectorXd cinv_c = chol_.llt.solve(c);
  const double prior = options_.target == PredictionTarget::kLatentSurface ? model_.partial_sill
                                                                           : model_.sill();
  const double penalty = 1.0 - cinv_one_.dot(c);
  const double raw = prior - c.dot(cinv_c) + penalty * penalty / one_cinv_one_;
  return {std::max(raw, 0.0), raw};
}

double KrigingSystem::gls_mean(std::span<const double> values) const {
  if (values.size() != size()) throw std::invalid_argument("value count differs from locations");
  const Eigen::Map<const Eigen::VectorXd> z(values.data(), static_cast<Eigen::Index>(values.size()));
  return cinv_one_.dot(z) / one_cinv_one_;
}

KrigingResult KrigingSystem::predict(const Location& pred, std::span<const double> values) const {
  const double mu = gls_mean(values);
  const Eigen::Map<const Eigen::VectorXd> z(values.data(), static_cast<Eigen::Index>(values.size()));
  const Eigen::VectorXd resid = z.array() - mu;
  const Eigen::VectorXd c = cross_covariance(pred);

  KrigingResult out;
  out.mean = mu + c.dot(chol_.llt.solve(resid));
  const auto [var, raw] = variance(pred);
  out.variance = var;
  out.negative_variance_clamped = raw < -1e-10 * model_.sill();
  out.effective_n = size();
  return out;
}

double gls_mean(const SpatialSample& sample, const VariogramModel& m) {
  sample.validate();
  return KrigingSystem(sample.locations, m).gls_mean(sample.values);
}

KrigingResult ordinary_kriging(const Location& pred, const SpatialSample& sample,
                               const VariogramModel& m, KrigingOptions options) {
  sample.validate();
  KrigingSystem sys(sample.locations, m, 1.0, options);
  auto out = sys.predict(pred, sample.values);
  out.scheme = VarianceScheme::kSampleOnly;
  return out;
}

double population_variance(const Location& pred, std::span<const Location> all_locs,
                           const VariogramModel& m, KrigingOptions options) {
  KrigingSystem sys(LocationSet(all_locs.begin(), all_locs.end()), m, 1.0, options);
  return sys.variance(pred).first;
}

double default_rate_bandwidth(std::span<const Location> locs) {
  auto nn = nearest_neighbor_distances(locs);
  if (nn.empty()) return 1.0;
  auto mid = nn.begin() + static_cast<std::ptrdiff_t>(nn.size() / 2);
  std::nth_element(nn.begin(), mid, nn.end());
  const double b = 2.0 * *mid;
  return b > 0.0 ? b : 1.0;
}

RateEstimate smooth_inclusion_rate(std::span<const Location> locs, std::span<const double> rates,
                                   const Location& target, double bandwidth) {
  if (locs.size() != rates.size() || locs.empty()) {
    throw std::invalid_argument("need one rate per location and at least one location");
  }
  if (!(bandwidth > 0.0)) throw std::invalid_argument("bandwidth must be positive");
  constexpr double kMinRate = 1e-6;

  double num = 0.0;
  double den = 0.0;
  double sum = 0.0;
  bool any_near = false;
  for (std::size_t i = 0; i < locs.size(); ++i) {
    const double r = rates[i];
    if (!(r > 0.0 && r <= 1.0)) {
      throw std::invalid_argument(fmt::format("rate {} outside (0, 1]", r));
    }
    sum += r;
    const double u = distance(locs[i], target) / bandwidth;
    if (u <= 6.0) any_near = true;
    const double k = std::exp(-0.5 * u * u);
    num += k * r;
    den += k;
  }
  RateEstimate out;
  if (!any_near || !(den > 0.0)) {
    out.rate = sum / static_cast<double>(locs.size());
    out.fell_back = true;
  } else {
    out.rate = num / den;
  }
  out.rate = std::clamp(out.rate, kMinRate, 1.0);
  return out;
}

namespace {

void check_rate(double rate) {
  if (!(rate > 0.0 && rate <= 1.0)) {
    throw std::invalid_argument(fmt::format("sampling rate {} outside (0, 1]", rate));
  }
}

}  // namespace

KrigingResult scaled_kriging_variance(const Location& pred, const SpatialSample& sample,
                                      const VariogramModel& m, double rate_at_pred,
                                      KrigingOptions options) {
  check_rate(rate_at_pred);
  sample.validate();
  KrigingSystem sys(sample.locations, m, std::sqrt(rate_at_pred), options);
  auto out = sys.predict(pred, sample.values);
  out.scheme = VarianceScheme::kScaled;
  out.nonstandard_mean = true;
  return out;
}

std::vector<KrigingResult> scaled_kriging_variances(std::span<const Location> preds,
                                                    const SpatialSample& sample,
                                                    const VariogramModel& m,
                                                    std::span<const double> rates,
                                                    KrigingOptions options) {
  if (rates.size() != preds.size()) throw std::invalid_argument("one rate per prediction point");
  sample.validate();
  std::map<double, KrigingSystem> systems;
  std::vector<KrigingResult> out;
  out.reserve(preds.size());
  for (std::size_t k = 0; k < preds.size(); ++k) {
    check_rate(rates[k]);
    auto it = systems.find(rates[k]);
    if (it == systems.end()) {
      it = systems
               .emplace(rates[k], KrigingSystem(sample.locations, m, std::sqrt(rates[k]), options))
               .first;
    }
    auto r = it->second.predict(preds[k], sample.values);
    r.scheme = VarianceScheme::kScaled;
    r.nonstandard_mean = true;
    out.push_back(r);
  }
  return out;
}

std::vector<KrigingResult> simulated_kriging_variances(std::span<const Location> preds,
                                                       const SpatialSample& sample,
                                                       const VariogramModel& m,
                                                       const PseudoObservationSet& pseudo,
                                                       SimulatedOptions options) {
  sample.validate();
  const std::size_t combined_n = sample.size() + pseudo.locations.size();
  if (combined_n > options.max_combined && !options.allow_large) {
    throw std::length_error(fmt::format(
        "combined size {} exceeds the simulated-scheme limit {}; enable allow_large to override",
        combined_n, options.max_combined));
  }
  LocationSet combined = sample.locations;
  combined.insert(combined.end(), pseudo.locations.begin(), pseudo.locations.end());
  KrigingSystem sys(std::move(combined), m, 1.0, options.kriging);

  std::vector<KrigingResult> out;
  out.reserve(preds.size());
  for (const auto& pred : preds) {
    KrigingResult r;
    const auto [var, raw] = sys.variance(pred);
    r.variance = var;
    r.negative_variance_clamped = raw < -1e-10 * m.sill();
    r.scheme = VarianceScheme::kSimulated;
    r.effective_n = combined_n;
    out.push_back(r);
  }
  return out;
}

KrigingResult simulated_kriging_variance(const Location& pred, const SpatialSample& sample,
                                         const VariogramModel& m,
                                         const PseudoObservationSet& pseudo,
                                         SimulatedOptions options) {
  auto out = simulated_kriging_variances(std::span(&pred, 1), sample, m, pseudo, options);
  // The mean only uses observed values, so report the sample-based predictor.
  KrigingSystem sys(sample.locations, m, 1.0, options.kriging);
  out[0].mean = sys.predict(pred, sample.values).mean;
  return out[0];
}

}  // namespace krigeweight
