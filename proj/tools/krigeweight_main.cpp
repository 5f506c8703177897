// krigeweight command-line tool.
//
// Exit codes: 0 success (including fits that did not converge), 2 input or
// usage error, 1 internal failure.

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "krigeweight/config.hpp"
#include "krigeweight/csv_io.hpp"
#include "krigeweight/designs.hpp"
#include "krigeweight/estimation.hpp"
#include "krigeweight/kriging.hpp"
#include "krigeweight/pointprocess.hpp"
#include "krigeweight/study.hpp"

namespace kw = krigeweight;
namespace io = krigeweight::io;

namespace {

constexpr int kExitInput = 2;
constexpr int kExitInternal = 1;

/// Writes to the named file, or stdout when the name is empty or "-".
template <typename Fn>
void with_output(const std::string& path, Fn&& fn) {
  if (path.empty() || path == "-") {
    fn(std::cout);
    return;
  }
  std::ofstream out(path);
  if (!out) throw io::InputError(fmt::format("cannot write '{}'", path));
  fn(out);
}

std::vector<double> parse_doubles(const std::string& text, std::size_t expected, const char* what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw io::InputError(fmt::format("{}: '{}' is not a number", what, item));
    }
  }
  if (expected && out.size() != expected) {
    throw io::InputError(fmt::format("{}: expected {} comma-separated numbers", what, expected));
  }
  return out;
}

std::optional<kw::Bounds> parse_bounds(const std::string& text) {
  if (text.empty()) return std::nullopt;
  const auto v = parse_doubles(text, 4, "--bounds");
  kw::Bounds b{v[0], v[1], v[2], v[3]};
  try {
    b.validate();
  } catch (const std::invalid_argument& e) {
    throw io::InputError(fmt::format("--bounds: {}", e.what()));
  }
  return b;
}

kw::Bounds bounds_or_enclosing(const std::optional<kw::Bounds>& given,
                               std::span<const kw::Location> pts) {
  if (given) {
    for (const auto& p : pts) {
      if (!given->contains(p)) {
        throw io::InputError(fmt::format("point ({}, {}) lies outside --bounds", p.x, p.y));
      }
    }
    return *given;
  }
  return kw::Bounds::enclosing(pts);
}

std::vector<double> sample_intensity(const kw::SpatialSample& sample, const std::string& grid_path,
                                     const kw::Bounds& bounds) {
  std::vector<double> lambda(sample.size());
  if (!grid_path.empty()) {
    const auto surface = io::read_intensity_csv(std::filesystem::path(grid_path));
    for (std::size_t i = 0; i < sample.size(); ++i) {
      lambda[i] = surface.evaluate(sample.locations[i]);
      if (!(lambda[i] > 0.0)) {
        throw io::InputError(fmt::format("intensity grid is not positive at data row {}", i + 1));
      }
    }
  } else {
    const kw::PointPattern pattern{sample.locations, bounds};
    for (std::size_t i = 0; i < sample.size(); ++i) {
      lambda[i] = kw::kde_evaluate(pattern, {}, sample.locations[i]);
    }
  }
  return lambda;
}

// ---------------------------------------------------------------- fit

struct FitArgs {
  std::string data;
  std::string scheme = "unit";
  std::string intensity;
  std::string out;
  std::string init;
  std::string bounds;
  double max_lag = 0.0;
  int max_iterations = 2000;
};

int cmd_fit(const FitArgs& a) {
  const auto table = io::read_data_csv(std::filesystem::path(a.data));
  if (table.size() < 3) throw io::InputError("fit needs at least 3 data rows");

  kw::WeightScheme scheme;
  if (a.scheme == "unit") {
    scheme = kw::WeightScheme::unit();
  } else if (a.scheme == "survey") {
    if (!table.sample.inclusion_probs) {
      throw io::InputError("survey scheme requires an inclusion_prob column");
    }
    scheme = kw::WeightScheme::survey();
  } else {
    const auto b = bounds_or_enclosing(parse_bounds(a.bounds), table.sample.locations);
    scheme = kw::WeightScheme::intensity(sample_intensity(table.sample, a.intensity, b));
  }

  kw::FitConfig cfg;
  cfg.max_iterations = a.max_iterations;
  if (a.max_lag > 0.0) cfg.max_lag = a.max_lag;
  std::optional<kw::VariogramModel> init;
  if (!a.init.empty()) {
    const auto v = parse_doubles(a.init, 3, "--init");
    init = kw::VariogramModel{v[0], v[1], v[2]};
  }

  const auto fit = kw::fit_variogram(table.sample, scheme, init, cfg);
  if (fit.excluded_pairs > 0) {
    std::cerr << fmt::format("warning: {} coincident pairs excluded\n", fit.excluded_pairs);
  }
  if (!fit.converged) std::cerr << "warning: optimizer did not converge\n";
  with_output(a.out, [&](std::ostream& os) {
    io::write_params_csv(os, {{a.scheme, fit.model, fit.objective, fit.converged, fit.iterations}});
  });
  return 0;
}

// ---------------------------------------------------------------- krige

struct KrigeArgs {
  std::string data;
  std::string params;
  std::string params_row;
  std::string pred;
  std::string scheme = "sample";
  std::string population;
  std::string bounds;
  std::string out;
  double rate = 0.0;
  double rate_bandwidth = 0.0;
  std::size_t population_size = 0;
  std::uint64_t seed = 1;
  std::size_t pseudo_replicates = 1;
  std::size_t kde_grid = 128;
  bool latent = false;
  bool allow_large = false;
};

int cmd_krige(const KrigeArgs& a) {
  const auto table = io::read_data_csv(std::filesystem::path(a.data));
  const auto params = io::read_params_csv(std::filesystem::path(a.params));
  const io::ParamsRow* row = &params.front();
  if (!a.params_row.empty()) {
    row = nullptr;
    for (const auto& p : params) {
      if (p.scheme == a.params_row) row = &p;
    }
    if (!row) throw io::InputError(fmt::format("no params row with scheme '{}'", a.params_row));
  }
  const auto preds = io::read_points_csv(std::filesystem::path(a.pred));
  const kw::KrigingOptions kopt{a.latent ? kw::PredictionTarget::kLatentSurface
                                         : kw::PredictionTarget::kNoisyObservation};
  const auto& sample = table.sample;
  const auto& model = row->model;

  std::vector<io::PredictionRow> out(preds.points.size());
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k].id = preds.ids[k];
    out[k].location = preds.points[k];
    out[k].scheme = a.scheme;
    out[k].seed = a.seed;
  }

  kw::KrigingSystem sample_system(sample.locations, model, 1.0, kopt);
  auto fill_sample = [&](std::size_t k) {
    const auto r = sample_system.predict(preds.points[k], sample.values);
    out[k].mean = r.mean;
    out[k].variance = r.variance;
    out[k].effective_n = r.effective_n;
  };

  if (a.scheme == "sample") {
    for (std::size_t k = 0; k < out.size(); ++k) fill_sample(k);
  } else if (a.scheme == "population") {
    if (a.population.empty()) throw io::InputError("population scheme requires --population");
    const auto all = io::read_points_csv(std::filesystem::path(a.population));
    kw::KrigingSystem pop_system(all.points, model, 1.0, kopt);
    for (std::size_t k = 0; k < out.size(); ++k) {
      fill_sample(k);
      out[k].variance = pop_system.variance(preds.points[k]).first;
      out[k].effective_n = all.points.size();
    }
  } else if (a.scheme == "scaled") {
    std::vector<double> rates(out.size(), a.rate);
    if (!(a.rate > 0.0)) {
      if (!sample.inclusion_probs) {
        throw io::InputError("scaled scheme requires --rate or an inclusion_prob column");
      }
      const double bw = a.rate_bandwidth > 0.0 ? a.rate_bandwidth
                                               : kw::default_rate_bandwidth(sample.locations);
      for (std::size_t k = 0; k < out.size(); ++k) {
        rates[k] = kw::smooth_inclusion_rate(sample.locations, *sample.inclusion_probs,
                                             preds.points[k], bw)
                       .rate;
      }
    } else if (a.rate > 1.0) {
      throw io::InputError("--rate must lie in (0, 1]");
    }
    const auto res = kw::scaled_kriging_variances(preds.points, sample, model, rates, kopt);
    for (std::size_t k = 0; k < out.size(); ++k) {
      out[k].mean = res[k].mean;
      out[k].variance = res[k].variance;
      out[k].effective_n = res[k].effective_n;
    }
  } else {
    if (a.population_size == 0) throw io::InputError("simulated scheme requires --population-size");
    if (a.population_size < sample.size()) {
      throw io::InputError("--population-size is smaller than the sample");
    }
    const auto bounds = bounds_or_enclosing(parse_bounds(a.bounds), sample.locations);
    const kw::PointPattern pattern{sample.locations, bounds};
    std::optional<std::vector<double>> rates;
    if (sample.inclusion_probs) {
      const auto& p = *sample.inclusion_probs;
      if (std::any_of(p.begin(), p.end(), [&](double v) { return v != p.front(); })) rates = p;
    }
    kw::PseudoDrawConfig pcfg;
    pcfg.grid = a.kde_grid;
    pcfg.rate_bandwidth = a.rate_bandwidth;
    const auto surface = kw::pseudo_target_surface(pattern, rates, pcfg);
    kw::SimulatedOptions sopt;
    sopt.kriging = kopt;
    sopt.allow_large = a.allow_large;
    for (std::size_t k = 0; k < out.size(); ++k) {
      fill_sample(k);
      out[k].variance = 0.0;
    }
    for (std::size_t r = 0; r < a.pseudo_replicates; ++r) {
      const auto pseudo = kw::draw_from_surface(surface, a.population_size - sample.size(),
                                                a.seed + r, pcfg);
      const auto res = kw::simulated_kriging_variances(preds.points, sample, model, pseudo, sopt);
      for (std::size_t k = 0; k < out.size(); ++k) {
        out[k].variance += res[k].variance / static_cast<double>(a.pseudo_replicates);
        out[k].effective_n = res[k].effective_n;
      }
    }
  }
  if (a.scheme == "scaled") std::cerr << "note: scaled-scheme means use distance-scaled covariances\n";
  with_output(a.out, [&](std::ostream& os) { io::write_predictions_csv(os, out); });
  return 0;
}

// ---------------------------------------------------------------- sample

struct SampleArgs {
  std::string population;
  std::string design = "srs";
  std::string strata;
  std::string intensity;
  std::string bounds;
  std::string out;
  double rate = 0.21;
  double alpha0 = -1.0;
  double alpha1 = 1.0;
  double target = 0.0;
  std::uint64_t seed = 1;
};

kw::StratifiedDesign parse_strata(const std::string& text) {
  if (text.empty()) return kw::StratifiedDesign::wells_default();
  kw::StratifiedDesign d;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw io::InputError("--strata entries must be min_count:rate");
    const auto v = parse_doubles(item.substr(0, colon) + "," + item.substr(colon + 1), 2, "--strata");
    if (!(v[1] > 0.0 && v[1] <= 1.0)) throw io::InputError("--strata rates must lie in (0, 1]");
    d.rows.push_back({static_cast<long long>(v[0]), v[1]});
  }
  std::sort(d.rows.begin(), d.rows.end(), [](auto& x, auto& y) { return x.min_count > y.min_count; });
  return d;
}

int cmd_sample(const SampleArgs& a) {
  auto table = io::read_data_csv(std::filesystem::path(a.population));
  kw::Population pop;
  pop.pattern = {table.sample.locations,
                 bounds_or_enclosing(parse_bounds(a.bounds), table.sample.locations)};
  pop.values = table.sample.values;
  pop.covariate = table.covariate;
  pop.stratum = table.stratum;

  kw::DesignSpec spec;
  if (a.design == "srs") {
    if (!(a.rate > 0.0 && a.rate <= 1.0)) throw io::InputError("--rate must lie in (0, 1]");
    spec = kw::SrsDesign{a.rate};
  } else if (a.design == "logit") {
    if (!pop.covariate) throw io::InputError("logit design requires a covariate column");
    spec = kw::LogitDesign{a.alpha0, a.alpha1};
  } else if (a.design == "inverse-intensity") {
    if (a.alpha1 != 0.0 && !pop.covariate) {
      throw io::InputError("inverse-intensity design with --alpha1 != 0 requires a covariate column");
    }
    pop.intensity = sample_intensity(table.sample, a.intensity, pop.pattern.bounds);
    const double target = a.target > 0.0 ? a.target : a.rate * static_cast<double>(pop.size());
    spec = kw::InverseIntensityDesign{a.alpha0, a.alpha1, target};
  } else {
    if (!pop.stratum) throw io::InputError("stratified design requires a stratum column");
    spec = parse_strata(a.strata);
  }

  const auto incl = kw::evaluate_inclusion(pop, spec);
  if (incl.clamp_warning) {
    std::cerr << fmt::format("warning: clamping changed {} of {} inclusion probabilities\n",
                             incl.clamped, pop.size());
  }
  kw::SampleDraw draw;
  try {
    draw = kw::draw_sample(pop, incl.probs, a.seed);
  } catch (const kw::EmptySampleError& e) {
    throw io::InputError(e.what());
  }

  io::DataTable out;
  for (std::size_t i : draw.indices) out.ids.push_back(table.ids[i]);
  out.sample = draw.sample;
  if (table.stratum) {
    out.stratum.emplace();
    for (std::size_t i : draw.indices) out.stratum->push_back((*table.stratum)[i]);
  }
  if (table.covariate) {
    out.covariate.emplace();
    for (std::size_t i : draw.indices) out.covariate->push_back((*table.covariate)[i]);
  }
  with_output(a.out, [&](std::ostream& os) { io::write_data_csv(os, out); });
  return 0;
}

// ---------------------------------------------------------------- intensity

struct IntensityArgs {
  std::string points;
  std::string bandwidth;
  std::string grid = "128";
  std::string bounds;
  std::string out;
};

int cmd_intensity(const IntensityArgs& a) {
  const auto pts = io::read_points_csv(std::filesystem::path(a.points));
  const kw::PointPattern pattern{pts.points, bounds_or_enclosing(parse_bounds(a.bounds), pts.points)};
  kw::KdeBandwidth bw;
  if (!a.bandwidth.empty()) {
    const auto v = parse_doubles(a.bandwidth, 0, "--bandwidth");
    if (v.empty() || v.size() > 2 || v[0] <= 0.0 || v.back() <= 0.0) {
      throw io::InputError("--bandwidth must be one or two positive numbers");
    }
    bw = {v[0], v.back()};
  }
  const auto g = parse_doubles(a.grid, 0, "--grid");
  if (g.empty() || g.size() > 2 || g[0] < 2 || g.back() < 2) {
    throw io::InputError("--grid must be one or two integers >= 2");
  }
  const auto surface = kw::kde_intensity(pattern, bw, static_cast<std::size_t>(g[0]),
                                         static_cast<std::size_t>(g.back()));
  with_output(a.out, [&](std::ostream& os) { io::write_intensity_csv(os, surface); });
  return 0;
}

// ---------------------------------------------------------------- simulate-study

struct StudyArgs {
  std::string config;
  std::string output_dir;
  bool no_timestamp = false;
  std::size_t threads = 0;
};

int cmd_simulate_study(const StudyArgs& a) {
  auto cfg = io::read_study_config(std::filesystem::path(a.config));
  if (!a.output_dir.empty()) cfg.output_dir = a.output_dir;
  if (a.no_timestamp) cfg.timestamp = false;
  if (a.threads > 0) cfg.threads = a.threads;

  const std::filesystem::path dir(cfg.output_dir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw io::InputError(fmt::format("cannot create '{}': {}", dir.string(), ec.message()));

  const auto results = kw::run_study(cfg);
  const auto summary = kw::summarize(results.records);

  with_output((dir / "records.csv").string(),
              [&](std::ostream& os) { io::write_records_csv(os, results.records); });
  with_output((dir / "summary.csv").string(),
              [&](std::ostream& os) { io::write_summary_csv(os, summary); });
  with_output((dir / "config.txt").string(), [&](std::ostream& os) {
    auto written = cfg;
    written.output_dir = ".";
    io::write_study_config(os, written);
  });
  with_output((dir / "metadata.txt").string(), [&](std::ostream& os) {
    if (cfg.timestamp) {
      const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
      char buf[32];
      std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
      os << "created = " << buf << '\n';
    }
    os << "population_size = " << results.population_size << '\n'
       << "population_tau2 = " << io::format_double(results.population_fit.nugget) << '\n'
       << "population_sigma2 = " << io::format_double(results.population_fit.partial_sill) << '\n'
       << "population_range = " << io::format_double(results.population_fit.range) << '\n'
       << "defaults_note = design rates and alpha values are configuration defaults\n";
  });
  std::size_t failures = 0;
  for (const auto& r : results.records) failures += !r.failure.empty();
  std::cerr << fmt::format("wrote {} records ({} failures) to {}\n", results.records.size(),
                           failures, dir.string());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Weighted composite likelihood variogram fitting and population-corrected kriging"};
  app.require_subcommand(1);

  FitArgs fit;
  auto* fit_cmd = app.add_subcommand("fit", "Fit exponential-with-nugget variogram parameters");
  fit_cmd->add_option("--data", fit.data, "data.csv (id,x,y,value[,inclusion_prob][,stratum][,covariate])")->required();
  fit_cmd->add_option("--scheme", fit.scheme, "unit (CL), survey (WCL1) or intensity (WCL2)")
      ->check(CLI::IsMember({"unit", "survey", "intensity"}));
  fit_cmd->add_option("--intensity", fit.intensity, "sampling-intensity grid for the intensity scheme (default: KDE of the data)");
  fit_cmd->add_option("--bounds", fit.bounds, "domain xmin,xmax,ymin,ymax for the default KDE");
  fit_cmd->add_option("--max-lag", fit.max_lag, "drop pairs farther apart than this");
  fit_cmd->add_option("--init", fit.init, "starting tau2,sigma2,range");
  fit_cmd->add_option("--max-iterations", fit.max_iterations, "simplex iteration limit")->check(CLI::PositiveNumber);
  fit_cmd->add_option("--out", fit.out, "params.csv (default stdout)");

  KrigeArgs kr;
  auto* krige_cmd = app.add_subcommand("krige", "Ordinary kriging with a population-corrected variance scheme");
  krige_cmd->add_option("--data", kr.data, "data.csv")->required();
  krige_cmd->add_option("--params", kr.params, "params.csv from `fit`")->required();
  krige_cmd->add_option("--params-row", kr.params_row, "scheme name of the params row to use (default: first)");
  krige_cmd->add_option("--pred", kr.pred, "pred.csv (id,x,y)")->required();
  krige_cmd->add_option("--scheme", kr.scheme, "sample, population, scaled or simulated")
      ->check(CLI::IsMember({"sample", "population", "scaled", "simulated"}));
  krige_cmd->add_option("--population", kr.population, "all population locations (id,x,y) for the population scheme");
  krige_cmd->add_option("--rate", kr.rate, "known sampling rate for the scaled scheme");
  krige_cmd->add_option("--rate-bandwidth", kr.rate_bandwidth, "kernel bandwidth for smoothing inclusion rates");
  krige_cmd->add_option("--population-size", kr.population_size, "population size n for the simulated scheme");
  krige_cmd->add_option("--bounds", kr.bounds, "domain xmin,xmax,ymin,ymax for pseudo-observations");
  krige_cmd->add_option("--seed", kr.seed, "seed for pseudo-observation draws");
  krige_cmd->add_option("--pseudo-replicates", kr.pseudo_replicates, "pseudo sets averaged")->check(CLI::PositiveNumber);
  krige_cmd->add_option("--kde-grid", kr.kde_grid, "grid cells per axis for the pseudo surface")->check(CLI::Range(2, 4096));
  krige_cmd->add_flag("--latent", kr.latent, "predict the latent surface (variance excludes the nugget)");
  krige_cmd->add_flag("--allow-large", kr.allow_large, "allow simulated systems above 20000 locations");
  krige_cmd->add_option("--out", kr.out, "predictions.csv (default stdout)");

  SampleArgs sa;
  auto* sample_cmd = app.add_subcommand("sample", "Draw a design-based sample from a population file");
  sample_cmd->add_option("--population", sa.population, "population.csv (data schema)")->required();
  sample_cmd->add_option("--design", sa.design, "srs, logit, inverse-intensity or stratified")
      ->check(CLI::IsMember({"srs", "logit", "inverse-intensity", "stratified"}));
  sample_cmd->add_option("--rate", sa.rate, "SRS rate");
  sample_cmd->add_option("--alpha0", sa.alpha0, "design intercept");
  sample_cmd->add_option("--alpha1", sa.alpha1, "design covariate slope");
  sample_cmd->add_option("--target", sa.target, "expected sample size for inverse-intensity (default rate * N)");
  sample_cmd->add_option("--strata", sa.strata, "stratum-size rates min_count:rate,... (default wells table)");
  sample_cmd->add_option("--intensity", sa.intensity, "population intensity grid (default: KDE of the population)");
  sample_cmd->add_option("--bounds", sa.bounds, "domain xmin,xmax,ymin,ymax");
  sample_cmd->add_option("--seed", sa.seed, "random seed");
  sample_cmd->add_option("--out", sa.out, "sample.csv (default stdout)");

  IntensityArgs ia;
  auto* int_cmd = app.add_subcommand("intensity", "Kernel intensity surface of a point file");
  int_cmd->add_option("--points", ia.points, "points.csv (id,x,y,...)")->required();
  int_cmd->add_option("--bandwidth", ia.bandwidth, "b or bx,by (default Scott rule)");
  int_cmd->add_option("--grid", ia.grid, "n or nx,ny grid cells");
  int_cmd->add_option("--bounds", ia.bounds, "domain xmin,xmax,ymin,ymax (default: enclosing box)");
  int_cmd->add_option("--out", ia.out, "grid CSV (default stdout)");

  StudyArgs st;
  auto* study_cmd = app.add_subcommand("simulate-study", "Run the Monte-Carlo design study");
  study_cmd->add_option("--config", st.config, "study configuration (key = value)")->required();
  study_cmd->add_option("--output-dir", st.output_dir, "override output_dir");
  study_cmd->add_flag("--no-timestamp", st.no_timestamp, "omit the creation timestamp");
  study_cmd->add_option("--threads", st.threads, "replicate workers");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitInput;
  }

  try {
    if (fit_cmd->parsed()) return cmd_fit(fit);
    if (krige_cmd->parsed()) return cmd_krige(kr);
    if (sample_cmd->parsed()) return cmd_sample(sa);
    if (int_cmd->parsed()) return cmd_intensity(ia);
    if (study_cmd->parsed()) return cmd_simulate_study(st);
  } catch (const io::InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
  return kExitInternal;
}
