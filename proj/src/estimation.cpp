#include "krigeweight/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <fmt/format.h>

#include "krigeweight/optimizer.hpp"

namespace krigeweight {

const char* to_string(WeightScheme::Kind kind) {
  switch (kind) {
    case WeightScheme::Kind::kUnit: return "unit";
    case WeightScheme::Kind::kSurvey: return "survey";
    case WeightScheme::Kind::kIntensity: return "intensity";
  }
  return "?";
}

namespace {

std::vector<double> pair_factors(const SpatialSample& sample, const WeightScheme& scheme) {
  const std::size_t n = sample.size();
  std::vector<double> inv;
  switch (scheme.kind) {
    case WeightScheme::Kind::kUnit:
      return {};
    case WeightScheme::Kind::kSurvey: {
      const std::vector<double>* probs = &scheme.values;
      if (probs->empty()) {
        if (!sample.inclusion_probs) {
          throw std::invalid_argument("SURVEY weights need inclusion probabilities");
        }
        probs = &*sample.inclusion_probs;
      }
      if (probs->size() != n) throw std::invalid_argument("SURVEY probabilities length mismatch");
      inv.reserve(n);
      for (double p : *probs) {
        if (!(p > 0.0 && p <= 1.0)) {
          throw std::invalid_argument(fmt::format("inclusion probability {} outside (0, 1]", p));
        }
        inv.push_back(1.0 / p);
      }
      return inv;
    }
    case WeightScheme::Kind::kIntensity: {
      if (scheme.values.size() != n) {
        throw std::invalid_argument("INTENSITY weights need one intensity per location");
      }
      inv.reserve(n);
      for (double l : scheme.values) {
        if (!(l > 0.0) || !std::isfinite(l)) {
          throw std::invalid_argument(fmt::format("intensity {} must be positive and finite", l));
        }
        inv.push_back(1.0 / l);
      }
      return inv;
    }
  }
  return {};
}

}  // namespace

ContrastSet build_contrasts(const SpatialSample& sample, const WeightScheme& scheme,
                            std::optional<double> max_lag) {
  sample.validate();
  const std::size_t n = sample.size();
  if (n < 2) throw std::invalid_argument("contrasts need at least two locations");
  const auto inv = pair_factors(sample, scheme);

  ContrastSet out;
  const std::size_t total = n * (n - 1) / 2;
  out.first.reserve(total);
  out.second.reserve(total);
  out.contrast.reserve(total);
  out.dist.reserve(total);
  out.weight.reserve(total);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = distance(sample.locations[i], sample.locations[j]);
      if (d == 0.0) {
        ++out.excluded_zero_distance;
        continue;
      }
      if (max_lag && d > *max_lag) continue;
      out.first.push_back(i);
      out.second.push_back(j);
      out.contrast.push_back(sample.values[i] - sample.values[j]);
      out.dist.push_back(d);
      out.weight.push_back(inv.empty() ? 1.0 : inv[i] * inv[j]);
    }
  }
  return out;
}

double neg_log_wcl(const VariogramModel& params, const ContrastSet& contrasts) {
  double total = 0.0;
  const double inv_range = 1.0 / params.range;
  for (std::size_t k = 0; k < contrasts.size(); ++k) {
    const double gamma =
        params.nugget - params.partial_sill * std::expm1(-contrasts.dist[k] * inv_range);
    if (!(gamma > 0.0)) {
      throw std::domain_error(fmt::format("semivariogram is {} for pair ({}, {})", gamma,
                                          contrasts.first[k], contrasts.second[k]));
    }
    const double v = contrasts.contrast[k];
    total += contrasts.weight[k] * (v * v / (4.0 * gamma) + 0.5 * std::log(gamma));
  }
  return total;
}

VariogramModel default_initial_model(const SpatialSample& sample) {
  const std::size_t n = sample.size();
  double mean = 0.0;
  for (double v : sample.values) mean += v;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double v : sample.values) var += (v - mean) * (v - mean);
  var /= static_cast<double>(n > 1 ? n - 1 : 1);
  if (!(var > 0.0)) var = 1.0;

  double max_d = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      max_d = std::max(max_d, distance(sample.locations[i], sample.locations[j]));
    }
  }
  if (!(max_d > 0.0)) max_d = 1.0;
  return {0.5 * var, 0.5 * var, 0.25 * max_d};
}

FitResult fit_contrasts(const ContrastSet& contrasts, const VariogramModel& init,
                        const FitConfig& config) {
  if (contrasts.size() == 0) throw std::invalid_argument("no contrasts to fit");
  init.validate();

  auto clamp_param = [&](double v) {
    return std::clamp(v, config.lower_bound, config.upper_bound);
  };
  auto to_model = [&](const std::vector<double>& x) {
    return VariogramModel{clamp_param(std::exp(x[0])), clamp_param(std::exp(x[1])),
                          clamp_param(std::exp(x[2]))};
  };
  auto objective = [&](const std::vector<double>& x) {
    return neg_log_wcl(to_model(x), contrasts);
  };

  NelderMeadOptions opts;
  opts.max_iterations = config.max_iterations;
  opts.diameter_tol = config.diameter_tol;
  opts.lower = std::log(config.lower_bound);
  opts.upper = std::log(config.upper_bound);

  std::vector<double> start{std::log(clamp_param(std::max(init.nugget, config.lower_bound))),
                            std::log(clamp_param(init.partial_sill)),
                            std::log(clamp_param(init.range))};
  auto nm = nelder_mead(objective, start, opts);
  int iterations = nm.iterations;
  if (config.restart && nm.converged) {
    opts.initial_step = 0.1;
    auto again = nelder_mead(objective, nm.x, opts);
    iterations += again.iterations;
    if (again.value <= nm.value) {
      nm.x = again.x;
      nm.value = again.value;
    }
    nm.converged = again.converged;
  }

  FitResult out;
  out.model = to_model(nm.x);
  out.objective = nm.value;
  out.iterations = iterations;
  out.converged = nm.converged && std::isfinite(nm.value);
  out.pairs = contrasts.size();
  out.excluded_pairs = contrasts.excluded_zero_distance;
  return out;
}

FitResult fit_variogram(const SpatialSample& sample, const WeightScheme& scheme,
                        std::optional<VariogramModel> init, const FitConfig& config) {
  if (sample.size() < 3) throw std::invalid_argument("variogram fitting needs at least 3 points");
  const auto contrasts = build_contrasts(sample, scheme, config.max_lag);
  return fit_contrasts(contrasts, init ? *init : default_initial_model(sample), config);
}

std::vector<EmpiricalBin> empirical_semivariogram(const SpatialSample& sample,
                                                  std::span<const double> bin_edges) {
  sample.validate();
  if (bin_edges.size() < 2) throw std::invalid_argument("need at least two bin edges");
  for (std::size_t k = 0; k < bin_edges.size(); ++k) {
    if (bin_edges[k] < 0.0 || (k > 0 && !(bin_edges[k] > bin_edges[k - 1]))) {
      throw std::invalid_argument("bin edges must be nonnegative and strictly increasing");
    }
  }
  const std::size_t nbins = bin_edges.size() - 1;
  std::vector<double> sums(nbins, 0.0);
  std::vector<std::size_t> counts(nbins, 0);
  const std::size_t n = sample.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = distance(sample.locations[i], sample.locations[j]);
      if (d < bin_edges.front() || d > bin_edges.back()) continue;
      auto it = std::upper_bound(bin_edges.begin(), bin_edges.end(), d);
      std::size_t k = static_cast<std::size_t>(it - bin_edges.begin());
      k = (k == 0) ? 0 : std::min(k - 1, nbins - 1);
      const double v = sample.values[i] - sample.values[j];
      sums[k] += v * v;
      ++counts[k];
    }
  }
  std::vector<EmpiricalBin> out(nbins);
  for (std::size_t k = 0; k < nbins; ++k) {
    out[k].lag = 0.5 * (bin_edges[k] + bin_edges[k + 1]);
    out[k].count = counts[k];
    if (counts[k] > 0) out[k].gamma = 0.5 * sums[k] / static_cast<double>(counts[k]);
  }
  return out;
}

std::vector<MarkVariogramPoint> mark_variogram_corrected(const SpatialSample& sample,
                                                         std::span<const double> intensity_at_sample,
                                                         std::span<const double> lags,
                                                         double bandwidth) {
  sample.validate();
  const std::size_t n = sample.size();
  if (intensity_at_sample.size() != n) {
    throw std::invalid_argument("one intensity value per sample location required");
  }
  std::vector<double> inv(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(intensity_at_sample[i] > 0.0)) {
      throw std::invalid_argument("intensity must be strictly positive at sample locations");
    }
    inv[i] = 1.0 / intensity_at_sample[i];
  }

  std::vector<double> dists, weights, sq;
  const std::size_t total = n * (n - 1) / 2;
  dists.reserve(total);
  weights.reserve(total);
  sq.reserve(total);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = sample.values[i] - sample.values[j];
      dists.push_back(distance(sample.locations[i], sample.locations[j]));
      weights.push_back(inv[i] * inv[j]);
      sq.push_back(v * v);
    }
  }

  if (!(bandwidth > 0.0)) {
    if (dists.empty() || lags.empty()) {
      throw std::invalid_argument("cannot choose a default bandwidth without pairs and lags");
    }
    std::vector<double> tmp = dists;
    auto mid = tmp.begin() + static_cast<std::ptrdiff_t>(tmp.size() / 2);
    std::nth_element(tmp.begin(), mid, tmp.end());
    bandwidth = 0.5 * *mid / static_cast<double>(lags.size());
  }

  // The i != j sum counts every unordered pair twice; the factor cancels in the ratio.
  std::vector<MarkVariogramPoint> out;
  out.reserve(lags.size());
  for (double h : lags) {
    double num = 0.0;
    double den = 0.0;
    for (std::size_t k = 0; k < dists.size(); ++k) {
      const double u = (h - dists[k]) / bandwidth;
      const double kw = std::exp(-0.5 * u * u) * weights[k];
      num += kw * sq[k];
      den += kw;
    }
    MarkVariogramPoint p;
    p.lag = h;
    if (den > std::numeric_limits<double>::min() * 1e3 && std::isfinite(num)) {
      p.gamma = 0.5 * num / den;
    }
    out.push_back(p);
  }
  return out;
}

std::vector<MarkVariogramPoint> mark_variogram_corrected(const SpatialSample& sample,
                                                         const IntensitySurface& intensity,
                                                         std::span<const double> lags,
                                                         double bandwidth) {
  std::vector<double> at(sample.size());
  for (std::size_t i = 0; i < sample.size(); ++i) at[i] = intensity.evaluate(sample.locations[i]);
  return mark_variogram_corrected(sample, at, lags, bandwidth);
}

}  // namespace krigeweight
