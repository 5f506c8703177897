#include "krigeweight/csv_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include <fmt/format.h>

namespace krigeweight::io {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.push_back(trim(std::string_view(line).substr(start, pos - start)));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

/// Line-numbered CSV reader that skips blank lines.
class Reader {
 public:
  Reader(std::istream& in, std::string source) : in_(in), source_(std::move(source)) {}

  std::vector<std::string> header() {
    std::vector<std::string> cells;
    if (!next(cells)) fail(0, "file is empty (missing header)");
    if (!cells.empty() && cells[0].rfind("\xEF\xBB\xBF", 0) == 0) cells[0].erase(0, 3);
    header_line_ = line_no_;
    return cells;
  }

  bool next(std::vector<std::string>& cells) {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      if (trim(line).empty()) continue;
      cells = split(line);
      return true;
    }
    return false;
  }

  [[noreturn]] void fail(std::size_t line, const std::string& msg) const {
    if (line == 0) throw InputError(fmt::format("{}: {}", source_, msg));
    throw InputError(fmt::format("{}:{}: {}", source_, line, msg));
  }
  [[noreturn]] void fail(const std::string& msg) const { fail(line_no_, msg); }

  double number(const std::string& cell, const char* column) const {
    double v = 0.0;
    const char* first = cell.data();
    const char* last = cell.data() + cell.size();
    if (!cell.empty() && *first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (cell.empty() || ec != std::errc() || ptr != last) {
      fail(fmt::format("column '{}': '{}' is not a number", column, cell));
    }
    return v;
  }

  double finite(const std::string& cell, const char* column) const {
    const double v = number(cell, column);
    if (!std::isfinite(v)) fail(fmt::format("column '{}': value must be finite", column));
    return v;
  }

  long long integer(const std::string& cell, const char* column) const {
    long long v = 0;
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size()) {
      fail(fmt::format("column '{}': '{}' is not an integer", column, cell));
    }
    return v;
  }

  void expect_columns(const std::vector<std::string>& cells, std::size_t n) const {
    if (cells.size() != n) {
      fail(fmt::format("expected {} columns, found {}", n, cells.size()));
    }
  }

  std::size_t line() const { return line_no_; }

 private:
  std::istream& in_;
  std::string source_;
  std::size_t line_no_ = 0;
  std::size_t header_line_ = 0;
};

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError(fmt::format("cannot open '{}'", path.string()));
  return in;
}

void require_header(Reader& r, const std::vector<std::string>& got,
                    const std::vector<std::string>& want) {
  if (got != want) {
    std::string w;
    for (std::size_t k = 0; k < want.size(); ++k) w += (k ? "," : "") + want[k];
    r.fail(fmt::format("header must be '{}'", w));
  }
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return fmt::format("{}", v);
}

DataTable read_data_csv(std::istream& in, const std::string& source) {
  Reader r(in, source);
  const auto head = r.header();
  const std::vector<std::string> required{"id", "x", "y", "value"};
  if (head.size() < 4 || !std::equal(required.begin(), required.end(), head.begin())) {
    r.fail("header must start with 'id,x,y,value'");
  }
  int prob_col = -1, stratum_col = -1, covariate_col = -1;
  const std::vector<std::string> optional_order{"inclusion_prob", "stratum", "covariate"};
  std::size_t next_allowed = 0;
  for (std::size_t c = 4; c < head.size(); ++c) {
    auto it = std::find(optional_order.begin() + static_cast<std::ptrdiff_t>(next_allowed),
                        optional_order.end(), head[c]);
    if (it == optional_order.end()) {
      r.fail(fmt::format("unexpected column '{}' (optional columns are inclusion_prob, stratum, "
                         "covariate in that order)",
                         head[c]));
    }
    const auto idx = static_cast<std::size_t>(it - optional_order.begin());
    next_allowed = idx + 1;
    (idx == 0 ? prob_col : idx == 1 ? stratum_col : covariate_col) = static_cast<int>(c);
  }

  DataTable t;
  std::vector<double> probs;
  std::vector<long long> strata;
  std::vector<double> cov;
  std::set<std::string> seen;
  std::vector<std::string> cells;
  while (r.next(cells)) {
    r.expect_columns(cells, head.size());
    if (cells[0].empty()) r.fail("column 'id': empty id");
    if (!seen.insert(cells[0]).second) r.fail(fmt::format("duplicate id '{}'", cells[0]));
    t.ids.push_back(cells[0]);
    t.sample.locations.push_back({r.finite(cells[1], "x"), r.finite(cells[2], "y")});
    t.sample.values.push_back(r.finite(cells[3], "value"));
    if (prob_col >= 0) {
      const double p = r.finite(cells[static_cast<std::size_t>(prob_col)], "inclusion_prob");
      if (!(p > 0.0 && p <= 1.0)) r.fail("column 'inclusion_prob': value must lie in (0, 1]");
      probs.push_back(p);
    }
    if (stratum_col >= 0) strata.push_back(r.integer(cells[static_cast<std::size_t>(stratum_col)], "stratum"));
    if (covariate_col >= 0) cov.push_back(r.finite(cells[static_cast<std::size_t>(covariate_col)], "covariate"));
  }
  if (t.ids.empty()) r.fail(0, "no data rows");
  if (prob_col >= 0) t.sample.inclusion_probs = std::move(probs);
  if (stratum_col >= 0) t.stratum = std::move(strata);
  if (covariate_col >= 0) t.covariate = std::move(cov);
  return t;
}

DataTable read_data_csv(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_data_csv(in, path.string());
}

void write_data_csv(std::ostream& out, const DataTable& t) {
  out << "id,x,y,value";
  if (t.sample.inclusion_probs) out << ",inclusion_prob";
  if (t.stratum) out << ",stratum";
  if (t.covariate) out << ",covariate";
  out << '\n';
  for (std::size_t i = 0; i < t.size(); ++i) {
    out << t.ids[i] << ',' << format_double(t.sample.locations[i].x) << ','
        << format_double(t.sample.locations[i].y) << ',' << format_double(t.sample.values[i]);
    if (t.sample.inclusion_probs) out << ',' << format_double((*t.sample.inclusion_probs)[i]);
    if (t.stratum) out << ',' << (*t.stratum)[i];
    if (t.covariate) out << ',' << format_double((*t.covariate)[i]);
    out << '\n';
  }
}

PointTable read_points_csv(std::istream& in, const std::string& source) {
  Reader r(in, source);
  const auto head = r.header();
  if (head.size() < 3 || head[0] != "id" || head[1] != "x" || head[2] != "y") {
    r.fail("header must start with 'id,x,y'");
  }
  PointTable t;
  std::vector<std::string> cells;
  while (r.next(cells)) {
    r.expect_columns(cells, head.size());
    if (cells[0].empty()) r.fail("column 'id': empty id");
    t.ids.push_back(cells[0]);
    t.points.push_back({r.finite(cells[1], "x"), r.finite(cells[2], "y")});
  }
  if (t.ids.empty()) r.fail(0, "no data rows");
  return t;
}

PointTable read_points_csv(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_points_csv(in, path.string());
}

void write_points_csv(std::ostream& out, const PointTable& t) {
  out << "id,x,y\n";
  for (std::size_t i = 0; i < t.ids.size(); ++i) {
    out << t.ids[i] << ',' << format_double(t.points[i].x) << ',' << format_double(t.points[i].y)
        << '\n';
  }
}

void write_params_csv(std::ostream& out, const std::vector<ParamsRow>& rows) {
  out << "scheme,tau2,sigma2,range,objective,converged,iterations\n";
  for (const auto& p : rows) {
    out << p.scheme << ',' << format_double(p.model.nugget) << ','
        << format_double(p.model.partial_sill) << ',' << format_double(p.model.range) << ','
        << format_double(p.objective) << ',' << (p.converged ? "true" : "false") << ','
        << p.iterations << '\n';
  }
}

std::vector<ParamsRow> read_params_csv(std::istream& in, const std::string& source) {
  Reader r(in, source);
  require_header(r, r.header(), {"scheme", "tau2", "sigma2", "range", "objective", "converged", "iterations"});
  std::vector<ParamsRow> rows;
  std::vector<std::string> cells;
  while (r.next(cells)) {
    r.expect_columns(cells, 7);
    ParamsRow p;
    p.scheme = cells[0];
    p.model = {r.finite(cells[1], "tau2"), r.finite(cells[2], "sigma2"), r.finite(cells[3], "range")};
    p.objective = r.number(cells[4], "objective");
    if (cells[5] != "true" && cells[5] != "false") r.fail("column 'converged': expected true/false");
    p.converged = cells[5] == "true";
    p.iterations = static_cast<int>(r.integer(cells[6], "iterations"));
    try {
      p.model.validate();
    } catch (const std::invalid_argument& e) {
      r.fail(e.what());
    }
    rows.push_back(p);
  }
  if (rows.empty()) r.fail(0, "no parameter rows");
  return rows;
}

std::vector<ParamsRow> read_params_csv(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_params_csv(in, path.string());
}

void write_predictions_csv(std::ostream& out, const std::vector<PredictionRow>& rows) {
  out << "id,x,y,mean,variance,scheme,effective_n,seed\n";
  for (const auto& p : rows) {
    out << p.id << ',' << format_double(p.location.x) << ',' << format_double(p.location.y) << ','
        << format_double(p.mean) << ',' << format_double(p.variance) << ',' << p.scheme << ','
        << p.effective_n << ',' << p.seed << '\n';
  }
}

std::vector<PredictionRow> read_predictions_csv(std::istream& in, const std::string& source) {
  Reader r(in, source);
  require_header(r, r.header(), {"id", "x", "y", "mean", "variance", "scheme", "effective_n", "seed"});
  std::vector<PredictionRow> rows;
  std::vector<std::string> cells;
  while (r.next(cells)) {
    r.expect_columns(cells, 8);
    PredictionRow p;
    p.id = cells[0];
    p.location = {r.finite(cells[1], "x"), r.finite(cells[2], "y")};
    p.mean = r.number(cells[3], "mean");
    p.variance = r.number(cells[4], "variance");
    p.scheme = cells[5];
    p.effective_n = static_cast<std::size_t>(r.integer(cells[6], "effective_n"));
    std::uint64_t seed = 0;
    const auto [ptr, ec] = std::from_chars(cells[7].data(), cells[7].data() + cells[7].size(), seed);
    if (ec != std::errc() || ptr != cells[7].data() + cells[7].size()) r.fail("column 'seed': not an integer");
    p.seed = seed;
    rows.push_back(p);
  }
  return rows;
}

void write_intensity_csv(std::ostream& out, const IntensitySurface& surface) {
  const auto& g = surface.grid;
  out << "x,y,intensity\n";
  for (std::size_t iy = 0; iy < g.ny; ++iy) {
    for (std::size_t ix = 0; ix < g.nx; ++ix) {
      const auto c = g.center(ix, iy);
      out << format_double(c.x) << ',' << format_double(c.y) << ',' << format_double(g.at(ix, iy))
          << '\n';
    }
  }
}

namespace {

// Cell bounds whose centres, computed as lo + (i + 0.5) * (hi - lo) / n,
// reproduce the written centres. Searches a few ulps around the direct
// estimate so that written grids read back bit for bit.
std::pair<double, double> recover_axis(const std::vector<double>& c) {
  const double n = static_cast<double>(c.size());
  const double step = (c.back() - c.front()) / (n - 1.0);
  const double lo0 = c.front() - 0.5 * step;
  const double hi0 = c.back() + 0.5 * step;
  auto matches = [&](double lo, double hi) {
    const double w = (hi - lo) / n;
    for (std::size_t i = 0; i < c.size(); ++i) {
      if (lo + (static_cast<double>(i) + 0.5) * w != c[i]) return false;
    }
    return true;
  };
  constexpr int kUlps = 8;
  double lo = lo0;
  for (int k = 0; k < kUlps; ++k) lo = std::nextafter(lo, -INFINITY);
  for (int a = -kUlps; a <= kUlps; ++a, lo = std::nextafter(lo, INFINITY)) {
    double hi = hi0;
    for (int k = 0; k < kUlps; ++k) hi = std::nextafter(hi, -INFINITY);
    for (int b = -kUlps; b <= kUlps; ++b, hi = std::nextafter(hi, INFINITY)) {
      if (matches(lo, hi)) return {lo, hi};
    }
  }
  return {lo0, hi0};
}

}  // namespace

IntensitySurface read_intensity_csv(std::istream& in, const std::string& source) {
  Reader r(in, source);
  require_header(r, r.header(), {"x", "y", "intensity"});
  std::vector<Location> centers;
  std::vector<double> values;
  std::vector<std::string> cells;
  while (r.next(cells)) {
    r.expect_columns(cells, 3);
    centers.push_back({r.finite(cells[0], "x"), r.finite(cells[1], "y")});
    const double v = r.finite(cells[2], "intensity");
    if (v < 0.0) r.fail("column 'intensity': must be >= 0");
    values.push_back(v);
  }
  if (values.empty()) r.fail(0, "no grid rows");
  // Row-major: x varies fastest, so nx is the length of the first run of equal y.
  std::size_t nx = 1;
  while (nx < centers.size() && centers[nx].y == centers[0].y) ++nx;
  if (centers.size() % nx != 0) r.fail(0, "grid rows are not rectangular");
  const std::size_t ny = centers.size() / nx;
  if (nx < 2 || ny < 2) r.fail(0, "grid needs at least 2 cells per axis");
  const double dx = centers[1].x - centers[0].x;
  const double dy = centers[nx].y - centers[0].y;
  if (!(dx > 0.0) || !(dy > 0.0)) r.fail(0, "grid centres must increase along x then y");
  for (std::size_t iy = 0; iy < ny; ++iy) {
    for (std::size_t ix = 0; ix < nx; ++ix) {
      const auto& c = centers[iy * nx + ix];
      const double ex = centers[0].x + static_cast<double>(ix) * dx;
      const double ey = centers[0].y + static_cast<double>(iy) * dy;
      if (std::abs(c.x - ex) > 1e-6 * dx || std::abs(c.y - ey) > 1e-6 * dy) {
        r.fail(0, fmt::format("grid row {} is off the regular lattice", iy * nx + ix + 2));
      }
    }
  }
  std::vector<double> xs(nx), ys(ny);
  for (std::size_t ix = 0; ix < nx; ++ix) xs[ix] = centers[ix].x;
  for (std::size_t iy = 0; iy < ny; ++iy) ys[iy] = centers[iy * nx].y;
  const auto [xmin, xmax] = recover_axis(xs);
  const auto [ymin, ymax] = recover_axis(ys);
  IntensitySurface s{GridField(Bounds{xmin, xmax, ymin, ymax}, nx, ny)};
  s.grid.values = std::move(values);
  return s;
}

IntensitySurface read_intensity_csv(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_intensity_csv(in, path.string());
}

void write_records_csv(std::ostream& out, const std::vector<StudyRecord>& records) {
  out << "replicate,design,estimator,scheme,metric,value,failure\n";
  for (const auto& r : records) {
    out << r.replicate << ',' << r.design << ',' << r.estimator << ',' << r.scheme << ','
        << r.metric << ',' << format_double(r.value) << ',' << r.failure << '\n';
  }
}

std::vector<StudyRecord> read_records_csv(std::istream& in, const std::string& source) {
  Reader r(in, source);
  require_header(r, r.header(), {"replicate", "design", "estimator", "scheme", "metric", "value", "failure"});
  std::vector<StudyRecord> out;
  std::vector<std::string> cells;
  while (r.next(cells)) {
    r.expect_columns(cells, 7);
    StudyRecord rec;
    rec.replicate = static_cast<std::size_t>(r.integer(cells[0], "replicate"));
    rec.design = cells[1];
    rec.estimator = cells[2];
    rec.scheme = cells[3];
    rec.metric = cells[4];
    rec.value = cells[5] == "nan" ? std::numeric_limits<double>::quiet_NaN() : r.number(cells[5], "value");
    rec.failure = cells[6];
    if (std::isnan(rec.value) && rec.failure.empty()) r.fail("NaN value without a failure reason");
    out.push_back(std::move(rec));
  }
  return out;
}

void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows) {
  out << "design,estimator,scheme,metric,count,failures,mean,q05,q25,q50,q75,q95\n";
  for (const auto& s : rows) {
    out << s.design << ',' << s.estimator << ',' << s.scheme << ',' << s.metric << ',' << s.count
        << ',' << s.failures << ',' << format_double(s.mean) << ',' << format_double(s.q05) << ','
        << format_double(s.q25) << ',' << format_double(s.q50) << ',' << format_double(s.q75) << ','
        << format_double(s.q95) << '\n';
  }
}

std::vector<SummaryRow> read_summary_csv(std::istream& in, const std::string& source) {
  Reader r(in, source);
  require_header(r, r.header(),
                 {"design", "estimator", "scheme", "metric", "count", "failures", "mean", "q05", "q25",
                  "q50", "q75", "q95"});
  auto value = [&](const std::string& cell, const char* column) {
    return cell == "nan" ? std::numeric_limits<double>::quiet_NaN() : r.number(cell, column);
  };
  std::vector<SummaryRow> out;
  std::vector<std::string> cells;
  while (r.next(cells)) {
    r.expect_columns(cells, 12);
    SummaryRow row;
    row.design = cells[0];
    row.estimator = cells[1];
    row.scheme = cells[2];
    row.metric = cells[3];
    row.count = static_cast<std::size_t>(r.integer(cells[4], "count"));
    row.failures = static_cast<std::size_t>(r.integer(cells[5], "failures"));
    row.mean = value(cells[6], "mean");
    row.q05 = value(cells[7], "q05");
    row.q25 = value(cells[8], "q25");
    row.q50 = value(cells[9], "q50");
    row.q75 = value(cells[10], "q75");
    row.q95 = value(cells[11], "q95");
    out.push_back(std::move(row));
  }
  return out;
}

}  // namespace krigeweight::io
