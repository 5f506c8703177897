#include "krigeweight/pointprocess.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include <fmt/format.h>

#include "krigeweight/kriging.hpp"
#include "krigeweight/random.hpp"

namespace krigeweight {

double Bounds::diameter() const { return std::hypot(width(), height()); }

void Bounds::validate() const {
  if (!std::isfinite(xmin) || !std::isfinite(xmax) || !std::isfinite(ymin) ||
      !std::isfinite(ymax) || !(xmax > xmin) || !(ymax > ymin)) {
    throw std::invalid_argument("bounds must be finite with positive width and height");
  }
}

Bounds Bounds::enclosing(std::span<const Location> points) {
  if (points.empty()) throw std::invalid_argument("cannot bound an empty point set");
  Bounds b{points[0].x, points[0].x, points[0].y, points[0].y};
  for (const auto& p : points) {
    b.xmin = std::min(b.xmin, p.x);
    b.xmax = std::max(b.xmax, p.x);
    b.ymin = std::min(b.ymin, p.y);
    b.ymax = std::max(b.ymax, p.y);
  }
  // Degenerate extents get a unit pad so the grid stays well defined.
  if (b.xmax == b.xmin) {
    b.xmin -= 0.5;
    b.xmax += 0.5;
  }
  if (b.ymax == b.ymin) {
    b.ymin -= 0.5;
    b.ymax += 0.5;
  }
  return b;
}

GridField::GridField(Bounds b, std::size_t nx_, std::size_t ny_, double fill)
    : bounds(b), nx(nx_), ny(ny_), values(nx_ * ny_, fill) {
  bounds.validate();
  if (nx == 0 || ny == 0) throw std::invalid_argument("grid needs at least one cell per axis");
}

Location GridField::center(std::size_t ix, std::size_t iy) const {
  return {bounds.xmin + (static_cast<double>(ix) + 0.5) * cell_width(),
          bounds.ymin + (static_cast<double>(iy) + 0.5) * cell_height()};
}

LocationSet GridField::centers() const {
  LocationSet out;
  out.reserve(nx * ny);
  for (std::size_t iy = 0; iy < ny; ++iy) {
    for (std::size_t ix = 0; ix < nx; ++ix) out.push_back(center(ix, iy));
  }
  return out;
}

double GridField::evaluate(const Location& s) const {
  auto axis = [](double v, double lo, double step, std::size_t n, std::size_t& i0, double& t) {
    const double u = (v - lo) / step - 0.5;
    if (n == 1 || u <= 0.0) {
      i0 = 0;
      t = 0.0;
    } else if (u >= static_cast<double>(n - 1)) {
      i0 = n - 2;
      t = 1.0;
    } else {
      i0 = static_cast<std::size_t>(u);
      t = u - static_cast<double>(i0);
    }
  };
  std::size_t ix = 0, iy = 0;
  double tx = 0.0, ty = 0.0;
  axis(s.x, bounds.xmin, cell_width(), nx, ix, tx);
  axis(s.y, bounds.ymin, cell_height(), ny, iy, ty);
  const std::size_t ix1 = nx == 1 ? 0 : ix + 1;
  const std::size_t iy1 = ny == 1 ? 0 : iy + 1;
  const double v0 = (1.0 - tx) * at(ix, iy) + tx * at(ix1, iy);
  const double v1 = (1.0 - tx) * at(ix, iy1) + tx * at(ix1, iy1);
  return (1.0 - ty) * v0 + ty * v1;
}

double GridField::integral() const {
  return std::accumulate(values.begin(), values.end(), 0.0) * cell_area();
}

double IntensitySurface::max_value() const {
  if (grid.values.empty()) return 0.0;
  return *std::max_element(grid.values.begin(), grid.values.end());
}

void IntensitySurface::validate() const {
  for (double v : grid.values) {
    if (!std::isfinite(v) || v < 0.0) throw std::invalid_argument("intensity must be finite and >= 0");
  }
  if (!(integral() > 0.0)) throw std::invalid_argument("intensity integrates to zero");
}

void PointPattern::validate() const {
  bounds.validate();
  for (const auto& p : points) {
    if (!bounds.contains(p)) {
      throw std::invalid_argument(fmt::format("point ({}, {}) outside pattern bounds", p.x, p.y));
    }
  }
}

KdeBandwidth scott_bandwidth(const PointPattern& pattern) {
  const std::size_t n = pattern.size();
  auto sd = [&](auto coord) {
    if (n < 2) return 0.0;
    double mean = 0.0;
    for (const auto& p : pattern.points) mean += coord(p);
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (const auto& p : pattern.points) ss += (coord(p) - mean) * (coord(p) - mean);
    return std::sqrt(ss / static_cast<double>(n - 1));
  };
  const double factor = std::pow(static_cast<double>(std::max<std::size_t>(n, 1)), -1.0 / 6.0);
  KdeBandwidth bw{factor * sd([](const Location& p) { return p.x; }),
                  factor * sd([](const Location& p) { return p.y; })};
  if (!(bw.x > 0.0)) bw.x = 0.1 * pattern.bounds.width();
  if (!(bw.y > 0.0)) bw.y = 0.1 * pattern.bounds.height();
  return bw;
}

namespace {

constexpr double kInvSqrt2Pi = 0.3989422804014327;

// Gaussian kernel along one axis plus its mirror images across both edges.
double reflected_kernel(double at, double point, double lo, double hi, double bw) {
  auto k = [&](double c) {
    const double u = (at - c) / bw;
    return std::exp(-0.5 * u * u);
  };
  return (k(point) + k(2.0 * lo - point) + k(2.0 * hi - point)) * kInvSqrt2Pi / bw;
}

KdeBandwidth resolve_bandwidth(const PointPattern& pattern, KdeBandwidth bw) {
  const auto scott = scott_bandwidth(pattern);
  if (!(bw.x > 0.0)) bw.x = scott.x;
  if (!(bw.y > 0.0)) bw.y = scott.y;
  return bw;
}

}  // namespace

IntensitySurface kde_intensity(const PointPattern& pattern, KdeBandwidth bandwidth, std::size_t nx,
                               std::size_t ny) {
  if (pattern.points.empty()) throw std::invalid_argument("kde needs a nonempty pattern");
  pattern.validate();
  const auto bw = resolve_bandwidth(pattern, bandwidth);
  const auto& b = pattern.bounds;
  GridField grid(b, nx, ny);

  const auto n = static_cast<Eigen::Index>(pattern.size());
  Eigen::MatrixXd kx(static_cast<Eigen::Index>(nx), n);
  Eigen::MatrixXd ky(static_cast<Eigen::Index>(ny), n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& p = pattern.points[static_cast<std::size_t>(i)];
    for (std::size_t ix = 0; ix < nx; ++ix) {
      kx(static_cast<Eigen::Index>(ix), i) =
          reflected_kernel(grid.center(ix, 0).x, p.x, b.xmin, b.xmax, bw.x);
    }
    for (std::size_t iy = 0; iy < ny; ++iy) {
      ky(static_cast<Eigen::Index>(iy), i) =
          reflected_kernel(grid.center(0, iy).y, p.y, b.ymin, b.ymax, bw.y);
    }
  }
  const Eigen::MatrixXd surface = ky * kx.transpose();  // ny x nx
  for (std::size_t iy = 0; iy < ny; ++iy) {
    for (std::size_t ix = 0; ix < nx; ++ix) {
      grid.at(ix, iy) = surface(static_cast<Eigen::Index>(iy), static_cast<Eigen::Index>(ix));
    }
  }
  return IntensitySurface{std::move(grid)};
}

double kde_evaluate(const PointPattern& pattern, KdeBandwidth bandwidth, const Location& s) {
  if (pattern.points.empty()) throw std::invalid_argument("kde needs a nonempty pattern");
  const auto bw = resolve_bandwidth(pattern, bandwidth);
  const auto& b = pattern.bounds;
  double total = 0.0;
  for (const auto& p : pattern.points) {
    total += reflected_kernel(s.x, p.x, b.xmin, b.xmax, bw.x) *
             reflected_kernel(s.y, p.y, b.ymin, b.ymax, bw.y);
  }
  return total;
}

GridField simulate_gp_grid(const Bounds& bounds, std::size_t nx, std::size_t ny,
                           const VariogramModel& m, double mean, std::uint64_t seed) {
  GridField field(bounds, nx, ny);
  const auto gp = simulate_gp(field.centers(), m, mean, seed);
  field.values = gp.values;
  return field;
}

double calibrate_base_rate(const GridField& field, double beta, double expected_count) {
  if (!(expected_count > 0.0)) throw std::invalid_argument("expected count must be positive");
  double mass = 0.0;
  for (double w : field.values) mass += std::exp(beta * w);
  mass *= field.cell_area();
  if (!(mass > 0.0) || !std::isfinite(mass)) {
    throw std::overflow_error("exp(beta * field) does not integrate to a finite positive value");
  }
  return expected_count / mass;
}

PointPattern simulate_lgcp(const GridField& field, double beta, double base_rate,
                           const Bounds& bounds, std::uint64_t seed) {
  bounds.validate();
  if (!(base_rate > 0.0)) throw std::invalid_argument("base rate must be positive");
  if (field.values.empty()) throw std::invalid_argument("field has no values");
  if (field.bounds.xmin > bounds.xmin || field.bounds.xmax < bounds.xmax ||
      field.bounds.ymin > bounds.ymin || field.bounds.ymax < bounds.ymax) {
    throw std::invalid_argument("field does not cover the simulation bounds");
  }
  const auto [lo, hi] = std::minmax_element(field.values.begin(), field.values.end());
  const double peak = beta >= 0.0 ? *hi : *lo;
  const double envelope = base_rate * std::exp(beta * peak);
  const double expected = envelope * bounds.area();
  if (!std::isfinite(envelope) || expected > 1e9) {
    throw std::overflow_error(fmt::format("intensity upper bound {} overflows", envelope));
  }

  Engine rng(seed);
  std::poisson_distribution<long long> count_dist(expected);
  std::uniform_real_distribution<double> ux(bounds.xmin, bounds.xmax);
  std::uniform_real_distribution<double> uy(bounds.ymin, bounds.ymax);
  std::uniform_real_distribution<double> u01(0.0, 1.0);

  PointPattern out;
  out.bounds = bounds;
  const long long proposals = count_dist(rng);
  for (long long k = 0; k < proposals; ++k) {
    const Location s{ux(rng), uy(rng)};
    const double lambda = base_rate * std::exp(beta * field.evaluate(s));
    if (u01(rng) * envelope < lambda) out.points.push_back(s);
  }
  return out;
}

std::vector<double> nearest_neighbor_distances(std::span<const Location> points) {
  const std::size_t n = points.size();
  std::vector<double> nn(n, std::numeric_limits<double>::infinity());
  if (n < 2) return nn;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return points[a].x < points[b].x; });
  // Sweep outward along x until the x-gap alone exceeds the best distance.
  for (std::size_t k = 0; k < n; ++k) {
    const auto& p = points[order[k]];
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = k + 1; j < n; ++j) {
      const auto& q = points[order[j]];
      if (q.x - p.x >= best) break;
      best = std::min(best, distance(p, q));
    }
    for (std::size_t j = k; j-- > 0;) {
      const auto& q = points[order[j]];
      if (p.x - q.x >= best) break;
      best = std::min(best, distance(p, q));
    }
    nn[order[k]] = best;
  }
  return nn;
}

std::vector<GPoint> g_function(const PointPattern& pattern, std::span<const double> radii) {
  if (pattern.size() < 2) throw std::invalid_argument("G-function needs at least two points");
  const auto nn = nearest_neighbor_distances(pattern.points);
  const auto& b = pattern.bounds;
  std::vector<double> border(pattern.size());
  for (std::size_t i = 0; i < pattern.size(); ++i) {
    const auto& p = pattern.points[i];
    border[i] = std::min({p.x - b.xmin, b.xmax - p.x, p.y - b.ymin, b.ymax - p.y});
  }

  std::vector<GPoint> out;
  out.reserve(radii.size());
  for (double h : radii) {
    std::size_t hits = 0, eligible = 0, hits_all = 0;
    for (std::size_t i = 0; i < nn.size(); ++i) {
      const bool hit = nn[i] <= h;
      hits_all += hit;
      if (border[i] >= h) {
        ++eligible;
        hits += hit;
      }
    }
    const double g = eligible > 0 ? static_cast<double>(hits) / static_cast<double>(eligible)
                                  : static_cast<double>(hits_all) / static_cast<double>(nn.size());
    out.push_back({h, g});
  }
  return out;
}

double g_function_csr(double h, double intensity) {
  return 1.0 - std::exp(-intensity * std::numbers::pi * h * h);
}

IntensitySurface pseudo_target_surface(const PointPattern& sample_pattern,
                                       const std::optional<std::vector<double>>& rates,
                                       const PseudoDrawConfig& config) {
  auto surface = kde_intensity(sample_pattern, config.bandwidth, config.grid, config.grid);
  if (!rates) return surface;
  if (rates->size() != sample_pattern.size()) {
    throw std::invalid_argument("one inclusion rate per sample point required");
  }
  const double bw = config.rate_bandwidth > 0.0 ? config.rate_bandwidth
                                                : default_rate_bandwidth(sample_pattern.points);
  auto& g = surface.grid;
  for (std::size_t iy = 0; iy < g.ny; ++iy) {
    for (std::size_t ix = 0; ix < g.nx; ++ix) {
      const auto p = smooth_inclusion_rate(sample_pattern.points, *rates, g.center(ix, iy), bw);
      g.at(ix, iy) /= p.rate;
    }
  }
  return surface;
}

PseudoObservationSet draw_from_surface(const IntensitySurface& surface, std::size_t count,
                                       std::uint64_t seed, const PseudoDrawConfig& config) {
  PseudoObservationSet out;
  out.seed = seed;
  if (count == 0) return out;
  surface.validate();
  const double envelope = surface.max_value() * 1.001;
  const auto& b = surface.grid.bounds;

  Engine rng(seed);
  std::uniform_real_distribution<double> ux(b.xmin, b.xmax);
  std::uniform_real_distribution<double> uy(b.ymin, b.ymax);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  out.locations.reserve(count);
  while (out.accepted < count) {
    const Location s{ux(rng), uy(rng)};
    ++out.proposals;
    if (u01(rng) * envelope < surface.evaluate(s)) {
      out.locations.push_back(s);
      ++out.accepted;
    }
    if (out.proposals == config.max_proposals_check && out.acceptance_rate() < config.min_acceptance) {
      throw std::runtime_error(fmt::format(
          "pseudo-observation sampler stalled: {} accepted of {} proposals (envelope {})",
          out.accepted, out.proposals, envelope));
    }
  }
  return out;
}

PseudoObservationSet draw_pseudo_locations(const PointPattern& sample_pattern,
                                           const std::optional<std::vector<double>>& rates,
                                           std::size_t count, std::uint64_t seed,
                                           const PseudoDrawConfig& config) {
  PseudoObservationSet out;
  out.seed = seed;
  if (count == 0) return out;
  return draw_from_surface(pseudo_target_surface(sample_pattern, rates, config), count, seed,
                           config);
}

}  // namespace krigeweight
