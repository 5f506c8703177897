#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "krigeweight/core.hpp"
#include "krigeweight/designs.hpp"
#include "krigeweight/estimation.hpp"
#include "krigeweight/kriging.hpp"
#include "krigeweight/pointprocess.hpp"

namespace krigeweight {

/// Synthetic population: Z = mean + W + eps on an LGCP point pattern.
/// Kind 1 draws locations from exp(beta U) with U independent of W; kind 2
/// draws them from exp(beta W).
struct PopulationSpec {
  int kind = 1;
  double expected_size = 1000.0;
  std::size_t grid = 32;
  VariogramModel field{0.0, 0.4, 0.1};
  double nugget = 0.2;
  double mean = 1.0;
  double beta = 1.0;
  Bounds bounds = Bounds::unit_square();
};

struct SyntheticPopulation {
  Population population;
  GridField log_intensity_field;
  double base_rate = 0.0;
  /// Generating variogram of Z (nugget plus field partial sill and range).
  VariogramModel truth;
};

SyntheticPopulation simulate_population(const PopulationSpec& spec, std::uint64_t seed);

/// Draws W at `points` jointly with the already-simulated grid field,
/// i.e. from the Gaussian conditional given the grid values.
std::vector<double> conditional_field_at(const GridField& grid_field, const VariogramModel& m,
                                         std::span<const Location> points, std::uint64_t seed);

enum class Estimator { kCL, kWCL1, kWCL2 };
const char* to_string(Estimator e);

struct StudyConfig {
  PopulationSpec population{};
  /// Design letters among {a, b, c}: SRS, logit, inverse intensity.
  std::vector<char> designs{'a', 'b', 'c'};
  double srs_rate = 0.3;
  double logit_alpha0 = -1.0;
  double logit_alpha1 = 1.0;
  std::size_t replicates = 30;
  std::vector<Estimator> estimators{Estimator::kCL, Estimator::kWCL1, Estimator::kWCL2};
  std::vector<VarianceScheme> schemes{VarianceScheme::kSampleOnly, VarianceScheme::kScaled,
                                      VarianceScheme::kSimulated};
  std::size_t prediction_points = 50;
  std::uint64_t master_seed = 20240601;
  std::string output_dir = "results";
  std::size_t threads = 1;
  std::size_t kde_grid = 64;
  std::size_t pseudo_replicates = 1;
  PredictionTarget target = PredictionTarget::kNoisyObservation;
  bool timestamp = true;

  void validate() const;
};

/// Long-format result row. `value` is NaN only when `failure` is set.
struct StudyRecord {
  std::size_t replicate = 0;
  std::string design;
  std::string estimator;
  std::string scheme;
  std::string metric;
  double value = 0.0;
  std::string failure;
};

struct StudyResults {
  std::vector<StudyRecord> records;
  VariogramModel population_fit;
  std::size_t population_size = 0;
};

/// Design for a study letter, given the population kind.
DesignSpec lettered_design(char letter, int population_kind, const StudyConfig& config,
                         std::size_t population_size);

StudyResults run_study(const StudyConfig& config);

struct SummaryRow {
  std::string design, estimator, scheme, metric;
  std::size_t count = 0;
  std::size_t failures = 0;
  double mean = 0.0, q05 = 0.0, q25 = 0.0, q50 = 0.0, q75 = 0.0, q95 = 0.0;
};

/// Mean and quantiles per (design, estimator, scheme, metric), replicates >= 1.
std::vector<SummaryRow> summarize(const std::vector<StudyRecord>& records);

/// Worker count: KRIGEWEIGHT_THREADS when set, otherwise `fallback`.
std::size_t resolve_threads(std::size_t fallback);

}  // namespace krigeweight
