#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "krigeweight/core.hpp"

namespace krigeweight {

struct Bounds {
  double xmin = 0.0;
  double xmax = 1.0;
  double ymin = 0.0;
  double ymax = 1.0;

  double width() const { return xmax - xmin; }
  double height() const { return ymax - ymin; }
  double area() const { return width() * height(); }
  double diameter() const;
  bool contains(const Location& s) const {
    return s.x >= xmin && s.x <= xmax && s.y >= ymin && s.y <= ymax;
  }
  void validate() const;

  static Bounds unit_square() { return {}; }
  /// Smallest rectangle holding every point.
  static Bounds enclosing(std::span<const Location> points);
};

/// Scalar field on a regular nx-by-ny grid of cell centres, row-major with x
/// varying fastest. Evaluation is bilinear between centres and constant
/// beyond the outermost centres.
struct GridField {
  Bounds bounds;
  std::size_t nx = 0;
  std::size_t ny = 0;
  std::vector<double> values;

  GridField() = default;
  GridField(Bounds b, std::size_t nx, std::size_t ny, double fill = 0.0);

  double cell_width() const { return bounds.width() / static_cast<double>(nx); }
  double cell_height() const { return bounds.height() / static_cast<double>(ny); }
  double cell_area() const { return cell_width() * cell_height(); }
  Location center(std::size_t ix, std::size_t iy) const;
  LocationSet centers() const;
  double& at(std::size_t ix, std::size_t iy) { return values[iy * nx + ix]; }
  double at(std::size_t ix, std::size_t iy) const { return values[iy * nx + ix]; }
  double evaluate(const Location& s) const;
  /// Midpoint-rule integral over the bounds.
  double integral() const;
};

/// Nonnegative intensity (events per unit area) on a grid.
struct IntensitySurface {
  GridField grid;

  double evaluate(const Location& s) const { return grid.evaluate(s); }
  double integral() const { return grid.integral(); }
  double max_value() const;
  void validate() const;
};

struct PointPattern {
  LocationSet points;
  Bounds bounds;

  std::size_t size() const { return points.size(); }
  void validate() const;
};

struct KdeBandwidth {
  double x = 0.0;
  double y = 0.0;
};

/// Scott-style per-axis rule n^{-1/6} * sd. Degenerate axes fall back to a
/// tenth of the domain extent.
KdeBandwidth scott_bandwidth(const PointPattern& pattern);

/// Gaussian kernel intensity estimate (density times count) on an nx-by-ny
/// grid with reflection at the rectangular boundary. Bandwidth components
/// that are <= 0 are replaced with the Scott rule.
IntensitySurface kde_intensity(const PointPattern& pattern, KdeBandwidth bandwidth = {},
                               std::size_t nx = 128, std::size_t ny = 128);

/// Evaluates the same reflected-kernel estimate directly at `s`.
double kde_evaluate(const PointPattern& pattern, KdeBandwidth bandwidth, const Location& s);

/// Gaussian field on the centres of an nx-by-ny grid.
GridField simulate_gp_grid(const Bounds& bounds, std::size_t nx, std::size_t ny,
                           const VariogramModel& m, double mean, std::uint64_t seed);

/// Base rate that makes base * integral(exp(beta * field)) equal `expected_count`.
double calibrate_base_rate(const GridField& field, double beta, double expected_count);

/// Log-Gaussian Cox process draw with intensity base_rate * exp(beta * field(s)),
/// by homogeneous Poisson proposals at the bounding rate followed by thinning.
PointPattern simulate_lgcp(const GridField& field, double beta, double base_rate,
                           const Bounds& bounds, std::uint64_t seed);

struct GPoint {
  double h = 0.0;
  double g = 0.0;
};

/// Border-corrected empirical nearest-neighbour distance CDF. Only events at
/// least h from the boundary enter the estimate at h; when none qualify the
/// uncorrected estimate over all events is used.
std::vector<GPoint> g_function(const PointPattern& pattern, std::span<const double> radii);

/// Nearest-neighbour distance of every point.
std::vector<double> nearest_neighbor_distances(std::span<const Location> points);

/// CSR reference 1 - exp(-lambda * pi * h^2).
double g_function_csr(double h, double intensity);

struct PseudoObservationSet {
  LocationSet locations;
  std::uint64_t seed = 0;
  std::size_t proposals = 0;
  std::size_t accepted = 0;

  double acceptance_rate() const {
    return proposals == 0 ? 0.0 : static_cast<double>(accepted) / static_cast<double>(proposals);
  }
};

struct PseudoDrawConfig {
  KdeBandwidth bandwidth{};
  std::size_t grid = 128;
  /// Bandwidth for smoothing inclusion rates (informative branch); <= 0
  /// selects twice the median nearest-neighbour distance.
  double rate_bandwidth = 0.0;
  std::size_t max_proposals_check = 1'000'000;
  double min_acceptance = 1e-4;
};

/// Surface the pseudo-observation sampler draws from: the sample KDE, or
/// KDE / smoothed inclusion rate when `rates` is given.
IntensitySurface pseudo_target_surface(const PointPattern& sample_pattern,
                                       const std::optional<std::vector<double>>& rates,
                                       const PseudoDrawConfig& config = {});

/// Rejection-samples exactly `count` locations from pseudo_target_surface
/// with uniform proposals over the bounds and envelope max * 1.001.
PseudoObservationSet draw_pseudo_locations(const PointPattern& sample_pattern,
                                           const std::optional<std::vector<double>>& rates,
                                           std::size_t count, std::uint64_t seed,
                                           const PseudoDrawConfig& config = {});

PseudoObservationSet draw_from_surface(const IntensitySurface& surface, std::size_t count,
                                       std::uint64_t seed, const PseudoDrawConfig& config = {});

}  // namespace krigeweight
