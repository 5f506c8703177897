#include "krigeweight/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace krigeweight {

namespace {

using Point = std::vector<double>;

double diameter(const std::vector<Point>& simplex) {
  double diam = 0.0;
  for (std::size_t k = 1; k < simplex.size(); ++k) {
    double sq = 0.0;
    for (std::size_t i = 0; i < simplex[0].size(); ++i) {
      const double d = simplex[k][i] - simplex[0][i];
      sq += d * d;
    }
    diam = std::max(diam, std::sqrt(sq));
  }
  return diam;
}

}  // namespace

NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                             std::vector<double> start, const NelderMeadOptions& opts) {
  const std::size_t n = start.size();
  if (n == 0) throw std::invalid_argument("nelder_mead needs at least one coordinate");

  NelderMeadResult res;
  auto clamp = [&](Point& p) {
    for (auto& v : p) v = std::clamp(v, opts.lower, opts.upper);
  };
  auto eval = [&](const Point& p) {
    ++res.evaluations;
    const double v = f(p);
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  };

  clamp(start);
  std::vector<Point> simplex(n + 1, start);
  for (std::size_t i = 0; i < n; ++i) {
    simplex[i + 1][i] += opts.initial_step;
    // Step inward when the start sits on the upper bound.
    if (simplex[i + 1][i] > opts.upper) simplex[i + 1][i] = start[i] - opts.initial_step;
    clamp(simplex[i + 1]);
  }
  std::vector<double> fx(n + 1);
  for (std::size_t k = 0; k <= n; ++k) fx[k] = eval(simplex[k]);

  std::vector<std::size_t> order(n + 1);
  auto sort_simplex = [&] {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return fx[a] < fx[b]; });
    std::vector<Point> s2(n + 1);
    std::vector<double> f2(n + 1);
    for (std::size_t k = 0; k <= n; ++k) {
      s2[k] = std::move(simplex[order[k]]);
      f2[k] = fx[order[k]];
    }
    simplex.swap(s2);
    fx.swap(f2);
  };

  Point centroid(n), trial(n), trial2(n);
  auto along = [&](double t, Point& out) {
    // centroid + t * (centroid - worst)
    for (std::size_t i = 0; i < n; ++i) out[i] = centroid[i] + t * (centroid[i] - simplex[n][i]);
    clamp(out);
  };

  sort_simplex();
  int iter = 0;
  for (; iter < opts.max_iterations; ++iter) {
    if (diameter(simplex) < opts.diameter_tol) {
      res.converged = true;
      break;
    }
    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t k = 0; k < n; ++k) {
      for (std::size_t i = 0; i < n; ++i) centroid[i] += simplex[k][i];
    }
    for (auto& c : centroid) c /= static_cast<double>(n);

    along(1.0, trial);
    const double fr = eval(trial);
    if (fr < fx[0]) {
      along(2.0, trial2);
      const double fe = eval(trial2);
      if (fe < fr) {
        simplex[n] = trial2;
        fx[n] = fe;
      } else {
        simplex[n] = trial;
        fx[n] = fr;
      }
    } else if (fr < fx[n - 1]) {
      simplex[n] = trial;
      fx[n] = fr;
    } else {
      const bool outside = fr < fx[n];
      along(outside ? 0.5 : -0.5, trial2);
      const double fc = eval(trial2);
      if (fc < (outside ? fr : fx[n])) {
        simplex[n] = trial2;
        fx[n] = fc;
      } else {
        for (std::size_t k = 1; k <= n; ++k) {
          for (std::size_t i = 0; i < n; ++i) {
            simplex[k][i] = simplex[0][i] + 0.5 * (simplex[k][i] - simplex[0][i]);
          }
          fx[k] = eval(simplex[k]);
        }
      }
    }
    sort_simplex();
  }
  if (!res.converged && diameter(simplex) < opts.diameter_tol) res.converged = true;

  res.x = simplex[0];
  res.value = fx[0];
  res.iterations = iter;
  return res;
}

}  // namespace krigeweight
