#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "krigeweight/core.hpp"
#include "krigeweight/estimation.hpp"
#include "krigeweight/kriging.hpp"
#include "krigeweight/pointprocess.hpp"
#include "krigeweight/study.hpp"

namespace krigeweight::io {

/// Malformed or missing user input. The CLI maps this to exit code 2.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Rows of `id,x,y,value[,inclusion_prob][,stratum][,covariate]`.
struct DataTable {
  std::vector<std::string> ids;
  SpatialSample sample;
  std::optional<std::vector<long long>> stratum;
  std::optional<std::vector<double>> covariate;

  std::size_t size() const { return ids.size(); }
};

struct PointTable {
  std::vector<std::string> ids;
  LocationSet points;
};

DataTable read_data_csv(std::istream& in, const std::string& source = "<stream>");
DataTable read_data_csv(const std::filesystem::path& path);
void write_data_csv(std::ostream& out, const DataTable& table);

/// `id,x,y` followed by any number of extra columns, which are ignored.
PointTable read_points_csv(std::istream& in, const std::string& source = "<stream>");
PointTable read_points_csv(const std::filesystem::path& path);
void write_points_csv(std::ostream& out, const PointTable& table);

struct ParamsRow {
  std::string scheme;
  VariogramModel model;
  double objective = 0.0;
  bool converged = false;
  int iterations = 0;
};

void write_params_csv(std::ostream& out, const std::vector<ParamsRow>& rows);
std::vector<ParamsRow> read_params_csv(std::istream& in, const std::string& source = "<stream>");
std::vector<ParamsRow> read_params_csv(const std::filesystem::path& path);

struct PredictionRow {
  std::string id;
  Location location;
  double mean = 0.0;
  double variance = 0.0;
  std::string scheme;
  std::size_t effective_n = 0;
  std::uint64_t seed = 0;
};

void write_predictions_csv(std::ostream& out, const std::vector<PredictionRow>& rows);
std::vector<PredictionRow> read_predictions_csv(std::istream& in,
                                                const std::string& source = "<stream>");

/// `x,y,intensity` at cell centres, row-major with x varying fastest.
void write_intensity_csv(std::ostream& out, const IntensitySurface& surface);
IntensitySurface read_intensity_csv(std::istream& in, const std::string& source = "<stream>");
IntensitySurface read_intensity_csv(const std::filesystem::path& path);

void write_records_csv(std::ostream& out, const std::vector<StudyRecord>& records);
std::vector<StudyRecord> read_records_csv(std::istream& in, const std::string& source = "<stream>");
void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows);
std::vector<SummaryRow> read_summary_csv(std::istream& in, const std::string& source = "<stream>");

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

}  // namespace krigeweight::io
