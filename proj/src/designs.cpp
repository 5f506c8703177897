#include "krigeweight/designs.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include <fmt/format.h>

#include "krigeweight/random.hpp"

namespace krigeweight {

void Population::validate() const {
  const std::size_t n = size();
  if (values.size() != n) throw std::invalid_argument("population values length mismatch");
  if (covariate && covariate->size() != n) throw std::invalid_argument("covariate length mismatch");
  if (intensity && intensity->size() != n) throw std::invalid_argument("intensity length mismatch");
  if (stratum && stratum->size() != n) throw std::invalid_argument("stratum length mismatch");
}

StratifiedDesign StratifiedDesign::wells_default() {
  return {{{400, 0.10}, {200, 0.15}, {100, 0.20}, {20, 0.30}, {0, 0.40}}};
}

double StratifiedDesign::rate_for(long long stratum_count) const {
  for (const auto& row : rows) {
    if (stratum_count >= row.min_count) return row.rate;
  }
  throw std::invalid_argument(fmt::format("no stratified rate covers stratum size {}", stratum_count));
}

std::string describe(const DesignSpec& spec) {
  struct Visitor {
    std::string operator()(const SrsDesign& d) const { return fmt::format("srs(k={})", d.rate); }
    std::string operator()(const LogitDesign& d) const {
      return fmt::format("logit(a0={},a1={})", d.alpha0, d.alpha1);
    }
    std::string operator()(const InverseIntensityDesign& d) const {
      return fmt::format("inverse_intensity(a0={},a1={},target={})", d.alpha0, d.alpha1,
                         d.target_size);
    }
    std::string operator()(const StratifiedDesign& d) const {
      std::string s = "stratified(";
      for (std::size_t k = 0; k < d.rows.size(); ++k) {
        s += fmt::format("{}{}:{}", k ? ";" : "", d.rows[k].min_count, d.rows[k].rate);
      }
      return s + ")";
    }
  };
  return std::visit(Visitor{}, spec);
}

namespace {

const std::vector<double>& require(const std::optional<std::vector<double>>& field,
                                   const char* what) {
  if (!field) throw std::invalid_argument(fmt::format("design requires the {} field", what));
  return *field;
}

}  // namespace

InclusionProbabilities evaluate_inclusion(const Population& pop, const DesignSpec& spec) {
  pop.validate();
  const std::size_t n = pop.size();
  InclusionProbabilities out;
  out.probs.resize(n);

  if (const auto* d = std::get_if<SrsDesign>(&spec)) {
    if (!(d->rate > 0.0 && d->rate <= 1.0)) throw std::invalid_argument("SRS rate outside (0, 1]");
    std::fill(out.probs.begin(), out.probs.end(), d->rate);
  } else if (const auto* d = std::get_if<LogitDesign>(&spec)) {
    const auto& w = require(pop.covariate, "covariate");
    for (std::size_t i = 0; i < n; ++i) {
      out.probs[i] = 1.0 / (1.0 + std::exp(-(d->alpha0 + d->alpha1 * w[i])));
    }
  } else if (const auto* d = std::get_if<InverseIntensityDesign>(&spec)) {
    const auto& lambda = require(pop.intensity, "intensity");
    if (!(d->target_size > 0.0)) throw std::invalid_argument("inverse-intensity design needs a target size");
    const std::vector<double>* w = nullptr;
    if (d->alpha1 != 0.0) w = &require(pop.covariate, "covariate");
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!(lambda[i] > 0.0)) throw std::invalid_argument("population intensity must be positive");
      const double eta = d->alpha0 + (w ? d->alpha1 * (*w)[i] : 0.0);
      out.probs[i] = std::exp(eta) / lambda[i];
      total += out.probs[i];
    }
    const double scale = d->target_size / total;
    for (auto& p : out.probs) p *= scale;
  } else if (const auto* d = std::get_if<StratifiedDesign>(&spec)) {
    if (!pop.stratum) throw std::invalid_argument("design requires the stratum field");
    std::map<long long, long long> counts;
    for (auto s : *pop.stratum) ++counts[s];
    for (std::size_t i = 0; i < n; ++i) out.probs[i] = d->rate_for(counts[(*pop.stratum)[i]]);
  }

  constexpr double kMinProb = 1e-12;
  for (auto& p : out.probs) {
    if (!std::isfinite(p)) throw std::invalid_argument("inclusion probability is not finite");
    if (p > 1.0 || p < kMinProb) {
      p = std::clamp(p, kMinProb, 1.0);
      ++out.clamped;
    }
  }
  out.clamp_warning = n > 0 && static_cast<double>(out.clamped) > 0.01 * static_cast<double>(n);
  return out;
}

SampleDraw draw_sample(const Population& pop, const std::vector<double>& probs, std::uint64_t seed) {
  pop.validate();
  if (probs.size() != pop.size()) throw std::invalid_argument("one probability per unit required");
  Engine rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);

  SampleDraw out;
  out.seed = seed;
  std::vector<double> kept_probs;
  for (std::size_t i = 0; i < pop.size(); ++i) {
    // Always consume one variate per unit so the stream does not depend on outcomes.
    const double u = u01(rng);
    if (u < probs[i]) {
      out.indices.push_back(i);
      out.sample.locations.push_back(pop.pattern.points[i]);
      out.sample.values.push_back(pop.values[i]);
      kept_probs.push_back(probs[i]);
    }
  }
  if (out.indices.empty()) {
    throw EmptySampleError("design produced an empty sample; redraw or raise the rates");
  }
  out.sample.inclusion_probs = std::move(kept_probs);
  return out;
}

SampleDraw draw_sample(const Population& pop, const DesignSpec& spec, std::uint64_t seed) {
  return draw_sample(pop, evaluate_inclusion(pop, spec).probs, seed);
}

}  // namespace krigeweight
