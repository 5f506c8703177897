#include "krigeweight/study.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <stdexcept>
#include <thread>

#include <fmt/format.h>

#include "krigeweight/random.hpp"

namespace krigeweight {

namespace {

// Stage identifiers for seed fan-out.
enum Stage : std::uint64_t {
  kStageIntensityField = 1,
  kStageLocations,
  kStageResponseField,
  kStageNoise,
  kStagePredictions,
  kStageSample,
  kStagePseudo,
};

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

}  // namespace

const char* to_string(Estimator e) {
  switch (e) {
    case Estimator::kCL: return "CL";
    case Estimator::kWCL1: return "WCL1";
    case Estimator::kWCL2: return "WCL2";
  }
  return "?";
}

std::vector<double> conditional_field_at(const GridField& grid_field, const VariogramModel& m,
                                         std::span<const Location> points, std::uint64_t seed) {
  const auto nodes = grid_field.centers();
  const auto g = static_cast<Eigen::Index>(nodes.size());
  const auto p = static_cast<Eigen::Index>(points.size());
  if (p == 0) return {};

  const auto kgg = factorize_with_jitter(covariance_matrix(nodes, m), m.sill());
  Eigen::MatrixXd kgp(g, p);
  for (Eigen::Index i = 0; i < g; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) {
      kgp(i, j) = covariance(distance(nodes[static_cast<std::size_t>(i)],
                                      points[static_cast<std::size_t>(j)]),
                             m);
    }
  }
  const Eigen::Map<const Eigen::VectorXd> wg(grid_field.values.data(), g);
  const Eigen::MatrixXd a = kgg.llt.matrixL().solve(kgp);  // L^-1 K_gp
  const Eigen::VectorXd cond_mean = a.transpose() * kgg.llt.matrixL().solve(wg);
  Eigen::MatrixXd cond_cov = covariance_matrix(points, m);
  cond_cov.noalias() -= a.transpose() * a;
  const auto chol = factorize_with_jitter(cond_cov, m.sill());
  const Eigen::VectorXd draw = cond_mean + chol.llt.matrixL() * standard_normals(p, seed);
  return {draw.data(), draw.data() + p};
}

SyntheticPopulation simulate_population(const PopulationSpec& spec, std::uint64_t seed) {
  if (spec.kind != 1 && spec.kind != 2) throw std::invalid_argument("population kind must be 1 or 2");
  spec.field.validate();
  SyntheticPopulation out;
  out.truth = {spec.nugget, spec.field.partial_sill, spec.field.range};

  const VariogramModel field_model{0.0, spec.field.partial_sill, spec.field.range};
  out.log_intensity_field = simulate_gp_grid(spec.bounds, spec.grid, spec.grid, field_model, 0.0,
                                             derive_seed(seed, {kStageIntensityField}));
  out.base_rate = calibrate_base_rate(out.log_intensity_field, spec.beta, spec.expected_size);
  auto pattern = simulate_lgcp(out.log_intensity_field, spec.beta, out.base_rate, spec.bounds,
                               derive_seed(seed, {kStageLocations}));
  if (pattern.size() < 3) throw std::runtime_error("simulated population has fewer than 3 points");

  std::vector<double> w;
  if (spec.kind == 1) {
    w = simulate_gp(pattern.points, field_model, 0.0, derive_seed(seed, {kStageResponseField})).values;
  } else {
    w = conditional_field_at(out.log_intensity_field, field_model, pattern.points,
                             derive_seed(seed, {kStageResponseField}));
  }
  const auto eps = standard_normals(static_cast<Eigen::Index>(pattern.size()),
                                    derive_seed(seed, {kStageNoise}));

  auto& pop = out.population;
  pop.values.resize(pattern.size());
  std::vector<double> lambda(pattern.size());
  for (std::size_t i = 0; i < pattern.size(); ++i) {
    pop.values[i] = spec.mean + w[i] + std::sqrt(spec.nugget) * eps(static_cast<Eigen::Index>(i));
    lambda[i] = out.base_rate *
                std::exp(spec.beta * out.log_intensity_field.evaluate(pattern.points[i]));
  }
  pop.covariate = std::move(w);
  pop.intensity = std::move(lambda);
  pop.pattern = std::move(pattern);
  return out;
}

void StudyConfig::validate() const {
  if (replicates < 1) throw std::invalid_argument("replicates must be >= 1");
  if (population.kind != 1 && population.kind != 2) {
    throw std::invalid_argument("population_kind must be 1 or 2");
  }
  if (designs.empty()) throw std::invalid_argument("at least one design is required");
  for (char d : designs) {
    if (d != 'a' && d != 'b' && d != 'c') throw std::invalid_argument(fmt::format("unknown design '{}'", d));
  }
  if (estimators.empty()) throw std::invalid_argument("at least one estimator is required");
  if (!(srs_rate > 0.0 && srs_rate <= 1.0)) throw std::invalid_argument("srs_rate outside (0, 1]");
  if (prediction_points < 1) throw std::invalid_argument("prediction_points must be >= 1");
  if (!(population.expected_size > 0.0)) throw std::invalid_argument("expected_population must be > 0");
  if (population.grid < 2) throw std::invalid_argument("grid must be >= 2");
  if (kde_grid < 2) throw std::invalid_argument("kde_grid must be >= 2");
  if (pseudo_replicates < 1) throw std::invalid_argument("pseudo_replicates must be >= 1");
  for (auto s : schemes) {
    if (s == VarianceScheme::kPopulation) {
      throw std::invalid_argument("the population scheme is the ratio denominator, not a study scheme");
    }
  }
}

DesignSpec lettered_design(char letter, int population_kind, const StudyConfig& config,
                         std::size_t population_size) {
  switch (letter) {
    case 'a': return SrsDesign{config.srs_rate};
    case 'b': return LogitDesign{config.logit_alpha0, config.logit_alpha1};
    case 'c': {
      InverseIntensityDesign d;
      d.target_size = config.srs_rate * static_cast<double>(population_size);
      if (population_kind == 1) {
        d.alpha0 = config.logit_alpha0;
        d.alpha1 = config.logit_alpha1;
      }
      return d;
    }
    default: throw std::invalid_argument(fmt::format("unknown design '{}'", letter));
  }
}

std::size_t resolve_threads(std::size_t fallback) {
  if (const char* env = std::getenv("KRIGEWEIGHT_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1) return static_cast<std::size_t>(v);
  }
  return std::max<std::size_t>(fallback, 1);
}

namespace {

struct SharedState {
  const StudyConfig& config;
  const Population& pop;
  const VariogramModel& pop_fit;
  const LocationSet& preds;
  const std::vector<double>& pop_variance;
};

void add(std::vector<StudyRecord>& out, std::size_t rep, const std::string& design,
         const std::string& est, const std::string& scheme, const std::string& metric, double value) {
  out.push_back({rep, design, est, scheme, metric, value, ""});
}

void add_failure(std::vector<StudyRecord>& out, std::size_t rep, const std::string& design,
                 const std::string& est, const std::string& scheme, const std::string& metric,
                 const std::string& why) {
  std::string reason = why;
  std::replace(reason.begin(), reason.end(), ',', ';');
  std::replace(reason.begin(), reason.end(), '\n', ' ');
  out.push_back({rep, design, est, scheme, metric, kNaN, reason});
}

std::vector<StudyRecord> run_replicate(const SharedState& st, std::size_t rep) {
  const auto& cfg = st.config;
  std::vector<StudyRecord> out;
  for (char letter : cfg.designs) {
    const std::string design(1, letter);
    const auto spec = lettered_design(letter, cfg.population.kind, cfg, st.pop.size());
    SampleDraw draw;
    try {
      const auto incl = evaluate_inclusion(st.pop, spec);
      draw = draw_sample(st.pop, incl.probs,
                         derive_seed(cfg.master_seed, {rep, kStageSample, static_cast<std::uint64_t>(letter)}));
    } catch (const std::exception& e) {
      add_failure(out, rep, design, "-", "-", "sample_size", e.what());
      continue;
    }
    const auto& sample = draw.sample;
    add(out, rep, design, "-", "-", "sample_size", static_cast<double>(sample.size()));
    if (sample.size() < 3) {
      add_failure(out, rep, design, "-", "-", "fit", "sample smaller than 3");
      continue;
    }
    const bool srs = letter == 'a';
    const PointPattern sample_pattern{sample.locations, st.pop.pattern.bounds};

    for (Estimator est : cfg.estimators) {
      const std::string est_name = to_string(est);
      FitResult fit;
      try {
        WeightScheme scheme = WeightScheme::unit();
        if (est == Estimator::kWCL1) {
          scheme = WeightScheme::survey();
        } else if (est == Estimator::kWCL2) {
          std::vector<double> lambda_s(sample.size());
          for (std::size_t i = 0; i < sample.size(); ++i) {
            lambda_s[i] = kde_evaluate(sample_pattern, {}, sample.locations[i]);
          }
          scheme = WeightScheme::intensity(std::move(lambda_s));
        }
        fit = fit_variogram(sample, scheme);
      } catch (const std::exception& e) {
        add_failure(out, rep, design, est_name, "fit", "tau2", e.what());
        continue;
      }
      add(out, rep, design, est_name, "fit", "tau2", fit.model.nugget);
      add(out, rep, design, est_name, "fit", "sigma2", fit.model.partial_sill);
      add(out, rep, design, est_name, "fit", "range", fit.model.range);
      add(out, rep, design, est_name, "fit", "converged", fit.converged ? 1.0 : 0.0);

      for (VarianceScheme vs : cfg.schemes) {
        const std::string scheme_name = to_string(vs);
        try {
          std::vector<double> variances;
          KrigingOptions kopt{cfg.target};
          if (vs == VarianceScheme::kSampleOnly) {
            KrigingSystem sys(sample.locations, fit.model, 1.0, kopt);
            for (const auto& s : st.preds) variances.push_back(sys.variance(s).first);
          } else if (vs == VarianceScheme::kScaled) {
            std::vector<double> rates(st.preds.size(), cfg.srs_rate);
            if (!srs) {
              const double bw = default_rate_bandwidth(sample.locations);
              for (std::size_t k = 0; k < st.preds.size(); ++k) {
                rates[k] = smooth_inclusion_rate(sample.locations, *sample.inclusion_probs,
                                                 st.preds[k], bw)
                               .rate;
              }
            }
            for (const auto& r : scaled_kriging_variances(st.preds, sample, fit.model, rates, kopt)) {
              variances.push_back(r.variance);
            }
          } else if (vs == VarianceScheme::kSimulated) {
            const std::size_t missing = st.pop.size() - sample.size();
            std::optional<std::vector<double>> rates;
            if (!srs) rates = *sample.inclusion_probs;
            PseudoDrawConfig pcfg;
            pcfg.grid = cfg.kde_grid;
            const auto surface = pseudo_target_surface(sample_pattern, rates, pcfg);
            variances.assign(st.preds.size(), 0.0);
            for (std::size_t r = 0; r < cfg.pseudo_replicates; ++r) {
              const auto pseudo = draw_from_surface(
                  surface, missing,
                  derive_seed(cfg.master_seed,
                              {rep, kStagePseudo, static_cast<std::uint64_t>(letter),
                               static_cast<std::uint64_t>(est), r}),
                  pcfg);
              SimulatedOptions sopt;
              sopt.kriging = kopt;
              const auto res = simulated_kriging_variances(st.preds, sample, fit.model, pseudo, sopt);
              for (std::size_t k = 0; k < res.size(); ++k) {
                variances[k] += res[k].variance / static_cast<double>(cfg.pseudo_replicates);
              }
            }
          }
          double ratio_sum = 0.0;
          double var_sum = 0.0;
          for (std::size_t k = 0; k < variances.size(); ++k) {
            ratio_sum += variances[k] / st.pop_variance[k];
            var_sum += variances[k];
          }
          const auto count = static_cast<double>(variances.size());
          add(out, rep, design, est_name, scheme_name, "mean_variance", var_sum / count);
          add(out, rep, design, est_name, scheme_name, "variance_ratio", ratio_sum / count);
        } catch (const std::exception& e) {
          add_failure(out, rep, design, est_name, scheme_name, "variance_ratio", e.what());
        }
      }
    }
  }
  return out;
}

}  // namespace

StudyResults run_study(const StudyConfig& config) {
  config.validate();
  const auto synthetic = simulate_population(config.population, config.master_seed);
  const auto& pop = synthetic.population;

  Engine pred_rng(derive_seed(config.master_seed, {kStagePredictions}));
  const auto& b = pop.pattern.bounds;
  std::uniform_real_distribution<double> ux(b.xmin, b.xmax), uy(b.ymin, b.ymax);
  LocationSet preds(config.prediction_points);
  for (auto& s : preds) s = {ux(pred_rng), uy(pred_rng)};

  StudyResults results;
  results.population_size = pop.size();
  SpatialSample full{pop.pattern.points, pop.values, std::nullopt};
  const auto pop_fit = fit_variogram(full, WeightScheme::unit());
  results.population_fit = pop_fit.model;

  KrigingSystem pop_system(pop.pattern.points, pop_fit.model, 1.0, KrigingOptions{config.target});
  std::vector<double> pop_variance;
  pop_variance.reserve(preds.size());
  for (const auto& s : preds) pop_variance.push_back(pop_system.variance(s).first);

  auto& rec = results.records;
  add(rec, 0, "population", "CL", "fit", "size", static_cast<double>(pop.size()));
  add(rec, 0, "population", "CL", "fit", "tau2", pop_fit.model.nugget);
  add(rec, 0, "population", "CL", "fit", "sigma2", pop_fit.model.partial_sill);
  add(rec, 0, "population", "CL", "fit", "range", pop_fit.model.range);
  add(rec, 0, "population", "CL", "fit", "converged", pop_fit.converged ? 1.0 : 0.0);
  double pv = 0.0;
  for (double v : pop_variance) pv += v;
  add(rec, 0, "population", "CL", "population", "mean_variance",
      pv / static_cast<double>(pop_variance.size()));

  const SharedState shared{config, pop, results.population_fit, preds, pop_variance};
  std::vector<std::vector<StudyRecord>> per_rep(config.replicates);
  const std::size_t workers = std::min(resolve_threads(config.threads), config.replicates);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t r = next++; r < config.replicates; r = next++) {
      try {
        per_rep[r] = run_replicate(shared, r + 1);
      } catch (const std::exception& e) {
        per_rep[r].clear();
        add_failure(per_rep[r], r + 1, "-", "-", "-", "replicate", e.what());
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(work);
  }
  for (auto& chunk : per_rep) rec.insert(rec.end(), chunk.begin(), chunk.end());
  return results;
}

std::vector<SummaryRow> summarize(const std::vector<StudyRecord>& records) {
  std::map<std::tuple<std::string, std::string, std::string, std::string>, std::pair<std::vector<double>, std::size_t>>
      groups;
  for (const auto& r : records) {
    if (r.replicate == 0) continue;
    auto& g = groups[{r.design, r.estimator, r.scheme, r.metric}];
    if (r.failure.empty()) {
      g.first.push_back(r.value);
    } else {
      ++g.second;
    }
  }
  auto quantile = [](const std::vector<double>& sorted, double q) {
    if (sorted.empty()) return kNaN;
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
  };
  std::vector<SummaryRow> out;
  for (auto& [key, g] : groups) {
    auto& vals = g.first;
    std::sort(vals.begin(), vals.end());
    SummaryRow row;
    std::tie(row.design, row.estimator, row.scheme, row.metric) = key;
    row.count = vals.size();
    row.failures = g.second;
    double sum = 0.0;
    for (double v : vals) sum += v;
    row.mean = vals.empty() ? kNaN : sum / static_cast<double>(vals.size());
    row.q05 = quantile(vals, 0.05);
    row.q25 = quantile(vals, 0.25);
    row.q50 = quantile(vals, 0.50);
    row.q75 = quantile(vals, 0.75);
    row.q95 = quantile(vals, 0.95);
    out.push_back(row);
  }
  return out;
}

}  // namespace krigeweight
