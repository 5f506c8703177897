#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "krigeweight/core.hpp"
#include "krigeweight/pointprocess.hpp"

namespace krigeweight {

/// A finite population of located units.
struct Population {
  PointPattern pattern;
  std::vector<double> values;
  /// Covariate W(s_i) driving informative designs.
  std::optional<std::vector<double>> covariate;
  /// Population location intensity lambda(s_i).
  std::optional<std::vector<double>> intensity;
  std::optional<std::vector<long long>> stratum;

  std::size_t size() const { return pattern.size(); }
  void validate() const;
};

/// Constant inclusion rate k.
struct SrsDesign {
  double rate = 0.21;
};

/// p(s) = logit^{-1}(a0 + a1 W(s)).
struct LogitDesign {
  double alpha0 = -1.0;
  double alpha1 = 1.0;
};

/// p(s) proportional to exp(a0 + a1 W(s)) / lambda(s), normalized so the
/// expected sample size equals `target_size` and then clamped to (0, 1].
/// With a1 = 0 the covariate is not required.
struct InverseIntensityDesign {
  double alpha0 = 0.0;
  double alpha1 = 0.0;
  double target_size = 0.0;
};

/// Rate by stratum size: the first row whose `min_count` does not exceed
/// the stratum's population count applies. Rows are kept sorted by
/// descending `min_count`.
struct StratifiedDesign {
  struct Row {
    long long min_count = 0;
    double rate = 0.0;
  };
  std::vector<Row> rows;

  /// 0.10 for N >= 400, 0.15 for [200, 400), 0.20 for [100, 200),
  /// 0.30 for [20, 100), 0.40 below 20.
  static StratifiedDesign wells_default();
  double rate_for(long long stratum_count) const;
};

using DesignSpec = std::variant<SrsDesign, LogitDesign, InverseIntensityDesign, StratifiedDesign>;

std::string describe(const DesignSpec& spec);

struct InclusionProbabilities {
  std::vector<double> probs;
  std::size_t clamped = 0;
  /// More than 1% of the probabilities were altered by clamping.
  bool clamp_warning = false;
};

InclusionProbabilities evaluate_inclusion(const Population& pop, const DesignSpec& spec);

/// Raised when a design draw selects no units.
class EmptySampleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SampleDraw {
  SpatialSample sample;
  std::vector<std::size_t> indices;
  std::uint64_t seed = 0;
};

/// Independent Bernoulli(p_i) inclusion of every population unit.
SampleDraw draw_sample(const Population& pop, const DesignSpec& spec, std::uint64_t seed);

/// Same, with precomputed probabilities.
SampleDraw draw_sample(const Population& pop, const std::vector<double>& probs, std::uint64_t seed);

}  // namespace krigeweight
