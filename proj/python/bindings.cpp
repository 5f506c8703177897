#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "krigeweight/config.hpp"
#include "krigeweight/csv_io.hpp"
#include "krigeweight/designs.hpp"
#include "krigeweight/estimation.hpp"
#include "krigeweight/kriging.hpp"
#include "krigeweight/pointprocess.hpp"
#include "krigeweight/study.hpp"

namespace py = pybind11;
using namespace krigeweight;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

LocationSet to_locations(const Array& a) {
  if (a.ndim() != 2 || a.shape(1) != 2) throw py::value_error("points must have shape (n, 2)");
  auto r = a.unchecked<2>();
  LocationSet out(static_cast<std::size_t>(a.shape(0)));
  for (py::ssize_t i = 0; i < a.shape(0); ++i) out[static_cast<std::size_t>(i)] = {r(i, 0), r(i, 1)};
  return out;
}

std::vector<double> to_vector(const Array& a) {
  if (a.ndim() != 1) throw py::value_error("expected a one-dimensional array");
  return {a.data(), a.data() + a.size()};
}

Array from_locations(const LocationSet& pts) {
  Array out({static_cast<py::ssize_t>(pts.size()), py::ssize_t{2}});
  auto w = out.mutable_unchecked<2>();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    w(static_cast<py::ssize_t>(i), 0) = pts[i].x;
    w(static_cast<py::ssize_t>(i), 1) = pts[i].y;
  }
  return out;
}

Array from_vector(const std::vector<double>& v) {
  Array out(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

Bounds to_bounds(const std::optional<std::vector<double>>& b, const LocationSet& pts) {
  if (!b) return pts.empty() ? Bounds::unit_square() : Bounds::enclosing(pts);
  if (b->size() != 4) throw py::value_error("bounds must be (xmin, xmax, ymin, ymax)");
  Bounds out{(*b)[0], (*b)[1], (*b)[2], (*b)[3]};
  out.validate();
  return out;
}

SpatialSample make_sample(const Array& points, const Array& values,
                          const std::optional<Array>& probs) {
  SpatialSample s{to_locations(points), to_vector(values), std::nullopt};
  if (probs) s.inclusion_probs = to_vector(*probs);
  s.validate();
  return s;
}

WeightScheme make_scheme(const std::string& name, const std::optional<Array>& weights) {
  if (name == "unit") return WeightScheme::unit();
  if (name == "survey") return WeightScheme::survey(weights ? to_vector(*weights) : std::vector<double>{});
  if (name == "intensity") {
    if (!weights) throw py::value_error("the intensity scheme needs per-point intensities");
    return WeightScheme::intensity(to_vector(*weights));
  }
  throw py::value_error("scheme must be 'unit', 'survey' or 'intensity'");
}

KrigingOptions make_options(bool latent) {
  return {latent ? PredictionTarget::kLatentSurface : PredictionTarget::kNoisyObservation};
}

py::tuple results_to_arrays(const std::vector<KrigingResult>& res) {
  std::vector<double> mean, var;
  for (const auto& r : res) {
    mean.push_back(r.mean);
    var.push_back(r.variance);
  }
  return py::make_tuple(from_vector(mean), from_vector(var));
}

py::dict surface_to_dict(const IntensitySurface& s) {
  Array grid({static_cast<py::ssize_t>(s.grid.ny), static_cast<py::ssize_t>(s.grid.nx)});
  std::copy(s.grid.values.begin(), s.grid.values.end(), grid.mutable_data());
  py::dict d;
  d["values"] = grid;
  d["bounds"] = py::make_tuple(s.grid.bounds.xmin, s.grid.bounds.xmax, s.grid.bounds.ymin, s.grid.bounds.ymax);
  return d;
}

}  // namespace

PYBIND11_MODULE(_krigeweight, m) {
  m.doc() = "Composite-likelihood variogram fitting and population-corrected kriging variances";

  py::register_exception<io::InputError>(m, "InputError", PyExc_ValueError);
  py::register_exception<IllConditionedError>(m, "IllConditionedError", PyExc_ArithmeticError);
  py::register_exception<EmptySampleError>(m, "EmptySampleError", PyExc_RuntimeError);

  py::class_<VariogramModel>(m, "VariogramModel")
      .def(py::init([](double nugget, double partial_sill, double range) {
             VariogramModel v{nugget, partial_sill, range};
             v.validate();
             return v;
           }),
           py::arg("nugget"), py::arg("partial_sill"), py::arg("range"))
      .def_readwrite("nugget", &VariogramModel::nugget)
      .def_readwrite("partial_sill", &VariogramModel::partial_sill)
      .def_readwrite("range", &VariogramModel::range)
      .def_property_readonly("sill", &VariogramModel::sill)
      .def("semivariogram", [](const VariogramModel& v, double d) { return semivariogram(d, v); })
      .def("covariance", [](const VariogramModel& v, double d) { return covariance(d, v); })
      .def("__repr__", [](const VariogramModel& v) {
        std::ostringstream s;
        s << "VariogramModel(nugget=" << io::format_double(v.nugget)
          << ", partial_sill=" << io::format_double(v.partial_sill)
          << ", range=" << io::format_double(v.range) << ")";
        return s.str();
      });

  py::class_<FitResult>(m, "FitResult")
      .def_readonly("model", &FitResult::model)
      .def_readonly("objective", &FitResult::objective)
      .def_readonly("iterations", &FitResult::iterations)
      .def_readonly("converged", &FitResult::converged)
      .def_readonly("pairs", &FitResult::pairs)
      .def_readonly("excluded_pairs", &FitResult::excluded_pairs);

  m.def("simulate_gp",
        [](const Array& points, const VariogramModel& model, double mean, std::uint64_t seed) {
          return from_vector(simulate_gp(to_locations(points), model, mean, seed).values);
        },
        py::arg("points"), py::arg("model"), py::arg("mean") = 0.0, py::arg("seed") = 0);

  m.def("neg_log_wcl",
        [](const VariogramModel& model, const Array& points, const Array& values,
           const std::string& scheme, const std::optional<Array>& weights,
           const std::optional<Array>& probs, std::optional<double> max_lag) {
          const auto sample = make_sample(points, values, probs);
          return neg_log_wcl(model, build_contrasts(sample, make_scheme(scheme, weights), max_lag));
        },
        py::arg("model"), py::arg("points"), py::arg("values"), py::arg("scheme") = "unit",
        py::arg("weights") = py::none(), py::arg("inclusion_probs") = py::none(),
        py::arg("max_lag") = py::none());

  m.def("fit_variogram",
        [](const Array& points, const Array& values, const std::string& scheme,
           const std::optional<Array>& weights, const std::optional<Array>& probs,
           std::optional<VariogramModel> init, std::optional<double> max_lag, int max_iterations) {
          const auto sample = make_sample(points, values, probs);
          FitConfig cfg;
          cfg.max_lag = max_lag;
          cfg.max_iterations = max_iterations;
          const auto ws = make_scheme(scheme, weights);
          py::gil_scoped_release release;
          return fit_variogram(sample, ws, init, cfg);
        },
        py::arg("points"), py::arg("values"), py::arg("scheme") = "unit",
        py::arg("weights") = py::none(), py::arg("inclusion_probs") = py::none(),
        py::arg("init") = py::none(), py::arg("max_lag") = py::none(),
        py::arg("max_iterations") = 2000);

  m.def("ordinary_kriging",
        [](const Array& points, const Array& values, const Array& preds, const VariogramModel& model,
           bool latent) {
          KrigingSystem sys(to_locations(points), model, 1.0, make_options(latent));
          const auto z = to_vector(values);
          std::vector<KrigingResult> res;
          for (const auto& s : to_locations(preds)) res.push_back(sys.predict(s, z));
          return results_to_arrays(res);
        },
        py::arg("points"), py::arg("values"), py::arg("preds"), py::arg("model"),
        py::arg("latent") = false, "Returns (mean, variance) arrays at the prediction points.");

  m.def("population_variance",
        [](const Array& all_points, const Array& preds, const VariogramModel& model, bool latent) {
          KrigingSystem sys(to_locations(all_points), model, 1.0, make_options(latent));
          std::vector<double> out;
          for (const auto& s : to_locations(preds)) out.push_back(sys.variance(s).first);
          return from_vector(out);
        },
        py::arg("all_points"), py::arg("preds"), py::arg("model"), py::arg("latent") = false);

  m.def("scaled_kriging_variance",
        [](const Array& points, const Array& values, const Array& preds, const VariogramModel& model,
           const Array& rates, bool latent) {
          const auto sample = make_sample(points, values, std::nullopt);
          const auto p = to_locations(preds);
          const auto r = to_vector(rates);
          return results_to_arrays(scaled_kriging_variances(p, sample, model, r, make_options(latent)));
        },
        py::arg("points"), py::arg("values"), py::arg("preds"), py::arg("model"), py::arg("rates"),
        py::arg("latent") = false);

  m.def("simulated_kriging_variance",
        [](const Array& points, const Array& values, const Array& preds, const VariogramModel& model,
           const Array& pseudo_points, bool latent) {
          const auto sample = make_sample(points, values, std::nullopt);
          PseudoObservationSet pseudo;
          pseudo.locations = to_locations(pseudo_points);
          SimulatedOptions opt;
          opt.kriging = make_options(latent);
          return results_to_arrays(
              simulated_kriging_variances(to_locations(preds), sample, model, pseudo, opt));
        },
        py::arg("points"), py::arg("values"), py::arg("preds"), py::arg("model"),
        py::arg("pseudo_points"), py::arg("latent") = false);

  m.def("smooth_inclusion_rate",
        [](const Array& points, const Array& rates, const Array& targets, double bandwidth) {
          const auto locs = to_locations(points);
          const auto r = to_vector(rates);
          if (bandwidth <= 0.0) bandwidth = default_rate_bandwidth(locs);
          std::vector<double> out;
          for (const auto& t : to_locations(targets)) out.push_back(smooth_inclusion_rate(locs, r, t, bandwidth).rate);
          return from_vector(out);
        },
        py::arg("points"), py::arg("rates"), py::arg("targets"), py::arg("bandwidth") = 0.0);

  m.def("kde_intensity",
        [](const Array& points, std::optional<std::vector<double>> bounds,
           std::optional<std::pair<double, double>> bandwidth, std::size_t nx, std::size_t ny) {
          const auto pts = to_locations(points);
          const PointPattern pattern{pts, to_bounds(bounds, pts)};
          KdeBandwidth bw{};
          if (bandwidth) bw = {bandwidth->first, bandwidth->second};
          return surface_to_dict(kde_intensity(pattern, bw, nx, ny));
        },
        py::arg("points"), py::arg("bounds") = py::none(), py::arg("bandwidth") = py::none(),
        py::arg("nx") = 128, py::arg("ny") = 128,
        "Returns {'values': (ny, nx) array, 'bounds': (xmin, xmax, ymin, ymax)}.");

  m.def("simulate_lgcp",
        [](const Array& field, std::vector<double> bounds, double beta, double base_rate, std::uint64_t seed) {
          if (field.ndim() != 2) throw py::value_error("field must be a (ny, nx) array");
          GridField g(to_bounds(bounds, {}), static_cast<std::size_t>(field.shape(1)),
                      static_cast<std::size_t>(field.shape(0)));
          std::copy(field.data(), field.data() + field.size(), g.values.begin());
          return from_locations(simulate_lgcp(g, beta, base_rate, g.bounds, seed).points);
        },
        py::arg("field"), py::arg("bounds"), py::arg("beta"), py::arg("base_rate"), py::arg("seed") = 0);

  m.def("g_function",
        [](const Array& points, const Array& radii, std::optional<std::vector<double>> bounds) {
          const auto pts = to_locations(points);
          const auto r = to_vector(radii);
          std::vector<double> g;
          for (const auto& p : g_function(PointPattern{pts, to_bounds(bounds, pts)}, r)) g.push_back(p.g);
          return from_vector(g);
        },
        py::arg("points"), py::arg("radii"), py::arg("bounds") = py::none());

  m.def("draw_pseudo_locations",
        [](const Array& points, std::size_t count, std::uint64_t seed,
           const std::optional<Array>& rates, std::optional<std::vector<double>> bounds) {
          const auto pts = to_locations(points);
          std::optional<std::vector<double>> r;
          if (rates) r = to_vector(*rates);
          return from_locations(
              draw_pseudo_locations(PointPattern{pts, to_bounds(bounds, pts)}, r, count, seed).locations);
        },
        py::arg("points"), py::arg("count"), py::arg("seed") = 0, py::arg("rates") = py::none(),
        py::arg("bounds") = py::none());

  m.def("draw_sample",
        [](const Array& points, const Array& values, const std::string& design, double rate,
           double alpha0, double alpha1, const std::optional<Array>& covariate, std::uint64_t seed) {
          Population pop;
          pop.pattern.points = to_locations(points);
          pop.pattern.bounds = to_bounds(std::nullopt, pop.pattern.points);
          pop.values = to_vector(values);
          if (covariate) pop.covariate = to_vector(*covariate);
          DesignSpec spec;
          if (design == "srs") spec = SrsDesign{rate};
          else if (design == "logit") spec = LogitDesign{alpha0, alpha1};
          else throw py::value_error("design must be 'srs' or 'logit'");
          const auto draw = draw_sample(pop, spec, seed);
          std::vector<py::ssize_t> idx(draw.indices.begin(), draw.indices.end());
          return py::make_tuple(py::array_t<py::ssize_t>(static_cast<py::ssize_t>(idx.size()), idx.data()),
                                from_vector(*draw.sample.inclusion_probs));
        },
        py::arg("points"), py::arg("values"), py::arg("design") = "srs", py::arg("rate") = 0.21,
        py::arg("alpha0") = -1.0, py::arg("alpha1") = 1.0, py::arg("covariate") = py::none(),
        py::arg("seed") = 0, "Returns (indices, inclusion_probs) of the drawn units.");

  m.def("run_study",
        [](const std::string& config_text) {
          std::istringstream in(config_text);
          const auto cfg = io::read_study_config(in, "<config>");
          StudyResults res;
          {
            py::gil_scoped_release release;
            res = run_study(cfg);
          }
          py::list rows;
          for (const auto& r : res.records) {
            rows.append(py::make_tuple(r.replicate, r.design, r.estimator, r.scheme, r.metric, r.value,
                                       r.failure));
          }
          return rows;
        },
        py::arg("config_text"),
        "Runs a simulation study from key = value configuration text and returns the long-format "
        "records as (replicate, design, estimator, scheme, metric, value, failure) tuples.");
}
