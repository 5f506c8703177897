#include "krigeweight/config.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "krigeweight/csv_io.hpp"

namespace krigeweight::io {

const std::vector<ConfigKey>& study_config_keys() {
  static const std::vector<ConfigKey> keys{
      {"population_kind", "1", "1: locations independent of W; 2: locations driven by W"},
      {"expected_population", "1000", "expected population size of the LGCP draw"},
      {"grid", "32", "grid cells per axis for the log-intensity field"},
      {"partial_sill", "0.4", "partial sill of W"},
      {"range", "0.1", "exponential range of W"},
      {"nugget", "0.2", "measurement-error variance"},
      {"mean", "1.0", "process mean"},
      {"beta", "1.0", "log-intensity coefficient"},
      {"designs", "a,b,c", "designs to run: a SRS, b logit, c inverse intensity"},
      {"srs_rate", "0.3", "rate k of design (a); also sets the expected size of design (c)"},
      {"logit_alpha0", "-1.0", "intercept of designs (b) and (c)"},
      {"logit_alpha1", "1.0", "slope of designs (b) and (c)"},
      {"replicates", "30", "sample draws per design"},
      {"estimators", "CL,WCL1,WCL2", "variogram estimators"},
      {"schemes", "sample,scaled,simulated", "kriging variance schemes"},
      {"prediction_points", "50", "uniform prediction locations"},
      {"master_seed", "20240601", "seed for every random stream"},
      {"output_dir", "results", "directory for result files"},
      {"threads", "1", "replicate workers (KRIGEWEIGHT_THREADS overrides)"},
      {"kde_grid", "64", "grid cells per axis for sampling-intensity surfaces"},
      {"pseudo_replicates", "1", "pseudo-observation sets averaged per simulated variance"},
      {"prediction_target", "noisy", "noisy: var(Z*) = nugget + sill; latent: partial sill only"},
      {"timestamp", "true", "write a creation timestamp into metadata.txt"},
  };
  return keys;
}

std::map<std::string, std::string> parse_key_values(std::istream& in, const std::string& source,
                                                    const std::vector<ConfigKey>& known) {
  std::map<std::string, std::string> out;
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& msg) {
    throw InputError(fmt::format("{}:{}: {}", source, line_no, msg));
  };
  auto trim = [](std::string s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return std::string{};
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail("expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    bool ok = false;
    for (const auto& k : known) ok = ok || k.name == key;
    if (!ok) fail(fmt::format("unknown key '{}'", key));
    if (value.empty()) fail(fmt::format("key '{}' has no value", key));
    if (!out.emplace(key, value).second) fail(fmt::format("duplicate key '{}'", key));
  }
  return out;
}

namespace {

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto a = item.find_first_not_of(" \t");
    const auto b = item.find_last_not_of(" \t");
    if (a != std::string::npos) out.push_back(item.substr(a, b - a + 1));
  }
  return out;
}

template <typename T>
T parse_number(const std::string& key, const std::string& v) {
  T out{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw InputError(fmt::format("config key '{}': '{}' is not a valid number", key, v));
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw InputError(fmt::format("config key '{}': expected true or false", key));
}

}  // namespace

StudyConfig study_config_from(const std::map<std::string, std::string>& given) {
  std::map<std::string, std::string> v;
  for (const auto& k : study_config_keys()) v[k.name] = k.default_value;
  for (const auto& [key, value] : given) {
    if (!v.contains(key)) throw InputError(fmt::format("unknown key '{}'", key));
    v[key] = value;
  }

  StudyConfig c;
  c.population.kind = parse_number<int>("population_kind", v["population_kind"]);
  c.population.expected_size = parse_number<double>("expected_population", v["expected_population"]);
  c.population.grid = parse_number<std::size_t>("grid", v["grid"]);
  c.population.field.partial_sill = parse_number<double>("partial_sill", v["partial_sill"]);
  c.population.field.range = parse_number<double>("range", v["range"]);
  c.population.nugget = parse_number<double>("nugget", v["nugget"]);
  c.population.mean = parse_number<double>("mean", v["mean"]);
  c.population.beta = parse_number<double>("beta", v["beta"]);

  c.designs.clear();
  for (const auto& d : split_list(v["designs"])) {
    if (d.size() != 1) throw InputError(fmt::format("config key 'designs': unknown design '{}'", d));
    c.designs.push_back(d[0]);
  }
  c.srs_rate = parse_number<double>("srs_rate", v["srs_rate"]);
  c.logit_alpha0 = parse_number<double>("logit_alpha0", v["logit_alpha0"]);
  c.logit_alpha1 = parse_number<double>("logit_alpha1", v["logit_alpha1"]);
  c.replicates = parse_number<std::size_t>("replicates", v["replicates"]);

  c.estimators.clear();
  for (const auto& e : split_list(v["estimators"])) {
    if (e == "CL") c.estimators.push_back(Estimator::kCL);
    else if (e == "WCL1") c.estimators.push_back(Estimator::kWCL1);
    else if (e == "WCL2") c.estimators.push_back(Estimator::kWCL2);
    else throw InputError(fmt::format("config key 'estimators': unknown estimator '{}'", e));
  }
  c.schemes.clear();
  for (const auto& s : split_list(v["schemes"])) {
    if (s == "sample") c.schemes.push_back(VarianceScheme::kSampleOnly);
    else if (s == "scaled") c.schemes.push_back(VarianceScheme::kScaled);
    else if (s == "simulated") c.schemes.push_back(VarianceScheme::kSimulated);
    else throw InputError(fmt::format("config key 'schemes': unknown scheme '{}'", s));
  }
  c.prediction_points = parse_number<std::size_t>("prediction_points", v["prediction_points"]);
  c.master_seed = parse_number<std::uint64_t>("master_seed", v["master_seed"]);
  c.output_dir = v["output_dir"];
  c.threads = parse_number<std::size_t>("threads", v["threads"]);
  c.kde_grid = parse_number<std::size_t>("kde_grid", v["kde_grid"]);
  c.pseudo_replicates = parse_number<std::size_t>("pseudo_replicates", v["pseudo_replicates"]);
  if (v["prediction_target"] == "noisy") c.target = PredictionTarget::kNoisyObservation;
  else if (v["prediction_target"] == "latent") c.target = PredictionTarget::kLatentSurface;
  else throw InputError("config key 'prediction_target': expected noisy or latent");
  c.timestamp = parse_bool("timestamp", v["timestamp"]);

  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw InputError(fmt::format("invalid configuration: {}", e.what()));
  }
  return c;
}

StudyConfig read_study_config(std::istream& in, const std::string& source) {
  return study_config_from(parse_key_values(in, source, study_config_keys()));
}

StudyConfig read_study_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError(fmt::format("cannot open '{}'", path.string()));
  return read_study_config(in, path.string());
}

void write_study_config(std::ostream& out, const StudyConfig& c) {
  auto join = [](const auto& items, auto name) {
    std::string s;
    for (const auto& it : items) s += (s.empty() ? "" : ",") + std::string(name(it));
    return s;
  };
  out << "population_kind = " << c.population.kind << '\n'
      << "expected_population = " << format_double(c.population.expected_size) << '\n'
      << "grid = " << c.population.grid << '\n'
      << "partial_sill = " << format_double(c.population.field.partial_sill) << '\n'
      << "range = " << format_double(c.population.field.range) << '\n'
      << "nugget = " << format_double(c.population.nugget) << '\n'
      << "mean = " << format_double(c.population.mean) << '\n'
      << "beta = " << format_double(c.population.beta) << '\n'
      << "designs = " << join(c.designs, [](char d) { return std::string(1, d); }) << '\n'
      << "srs_rate = " << format_double(c.srs_rate) << '\n'
      << "logit_alpha0 = " << format_double(c.logit_alpha0) << '\n'
      << "logit_alpha1 = " << format_double(c.logit_alpha1) << '\n'
      << "replicates = " << c.replicates << '\n'
      << "estimators = " << join(c.estimators, [](Estimator e) { return to_string(e); }) << '\n'
      << "schemes = " << join(c.schemes, [](VarianceScheme s) { return to_string(s); }) << '\n'
      << "prediction_points = " << c.prediction_points << '\n'
      << "master_seed = " << c.master_seed << '\n'
      << "output_dir = " << c.output_dir << '\n'
      << "threads = " << c.threads << '\n'
      << "kde_grid = " << c.kde_grid << '\n'
      << "pseudo_replicates = " << c.pseudo_replicates << '\n'
      << "prediction_target = "
      << (c.target == PredictionTarget::kLatentSurface ? "latent" : "noisy") << '\n'
      << "timestamp = " << (c.timestamp ? "true" : "false") << '\n';
}

}  // namespace krigeweight::io
