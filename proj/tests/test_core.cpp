#include <cmath>
#include <limits>
#include <random>

#include <doctest.h>

#include "krigeweight/core.hpp"
#include "krigeweight/random.hpp"

using namespace krigeweight;

namespace {

LocationSet random_locations(std::size_t n, std::uint64_t seed, double scale = 1.0) {
  Engine rng(seed);
  std::uniform_real_distribution<double> u(0.0, scale);
  LocationSet out(n);
  for (auto& p : out) p = {u(rng), u(rng)};
  return out;
}

}  // namespace

TEST_CASE("distance matrix examples") {
  const LocationSet two{{0, 0}, {3, 4}};
  CHECK(distance_matrix(two)(0, 1) == doctest::Approx(5.0));
  CHECK(distance_matrix(two)(1, 0) == doctest::Approx(5.0));

  const LocationSet one{{0.3, 0.7}};
  const auto d1 = distance_matrix(one);
  CHECK(d1.rows() == 1);
  CHECK(d1(0, 0) == 0.0);

  const LocationSet line{{0, 0}, {1, 0}, {2, 0}};
  const auto d = distance_matrix(line);
  CHECK(d(0, 2) == doctest::Approx(d(0, 1) + d(1, 2)));
  CHECK(d(0, 2) == doctest::Approx(2.0));
}

TEST_CASE("distance matrix structure and rigid-motion invariance") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto locs = random_locations(12, seed, 10.0);
    const auto d = distance_matrix(locs);
    Engine rng(seed + 1000);
    std::uniform_real_distribution<double> u(-50.0, 50.0);
    const double angle = u(rng);
    const double tx = u(rng), ty = u(rng);
    LocationSet moved;
    for (const auto& p : locs) {
      moved.push_back({std::cos(angle) * p.x - std::sin(angle) * p.y + tx,
                       std::sin(angle) * p.x + std::cos(angle) * p.y + ty});
    }
    const auto dm = distance_matrix(moved);
    for (Eigen::Index i = 0; i < d.rows(); ++i) {
      CHECK(d(i, i) == 0.0);
      for (Eigen::Index j = 0; j < d.cols(); ++j) {
        CHECK(d(i, j) == d(j, i));
        CHECK(d(i, j) >= 0.0);
        CHECK(std::abs(d(i, j) - dm(i, j)) < 1e-12);
        for (Eigen::Index k = 0; k < d.cols(); ++k) CHECK(d(i, k) <= d(i, j) + d(j, k) + 1e-12);
      }
    }
  }
}

TEST_CASE("semivariogram and covariance values") {
  const VariogramModel m{0.2, 0.4, 0.1};
  CHECK(semivariogram(0.0, m) == 0.0);
  CHECK(semivariogram(1e6, m) == doctest::Approx(0.6));
  // 0.2 + 0.4 * (1 - e^-1), evaluated independently
  CHECK(semivariogram(0.1, m) == doctest::Approx(0.452848).epsilon(1e-6));
  CHECK(covariance(0.0, m) == doctest::Approx(0.6));
  const VariogramModel no_nugget{0.0, 0.4, 0.1};
  CHECK(covariance(0.1, no_nugget) == doctest::Approx(0.147152).epsilon(1e-6));

  CHECK_THROWS_AS((semivariogram(-1.0, m)), std::invalid_argument);
  CHECK_THROWS_AS((covariance(-1.0, m)), std::invalid_argument);
}

TEST_CASE("model validation") {
  CHECK_NOTHROW(VariogramModel{0.0, 0.4, 0.1}.validate());
  CHECK_THROWS_AS((VariogramModel{-0.1, 0.4, 0.1}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((VariogramModel{0.1, 0.0, 0.1}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((VariogramModel{0.1, 0.4, 0.0}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((VariogramModel{0.1, std::numeric_limits<double>::infinity(), 0.1}.validate()),
                  std::invalid_argument);

  SpatialSample s{{{0, 0}, {1, 1}}, {1.0}, std::nullopt};
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s.values = {1.0, 2.0};
  CHECK_NOTHROW(s.validate());
  s.inclusion_probs = std::vector<double>{0.5, 0.0};
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s.inclusion_probs = std::vector<double>{0.5, 1.5};
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
}

TEST_CASE("semivariogram is bounded, monotone and complements the covariance") {
  Engine rng(7);
  std::uniform_real_distribution<double> u(0.01, 3.0);
  for (int trial = 0; trial < 200; ++trial) {
    const VariogramModel m{trial % 5 == 0 ? 0.0 : u(rng), u(rng), u(rng)};
    double prev = 0.0;
    for (double d = 0.0; d < 20.0; d += 0.05) {
      const double g = semivariogram(d, m);
      CHECK(g >= 0.0);
      CHECK(g <= m.sill());
      CHECK(g >= prev);
      prev = g;
      CHECK(covariance(d, m) + g == m.sill());
    }
  }
}

TEST_CASE("covariance matrix applies the distance scale") {
  const LocationSet locs{{0, 0}, {0.2, 0}, {0, 0.4}};
  const VariogramModel m{0.1, 0.5, 0.3};
  const auto c = covariance_matrix(locs, m, 0.5);
  CHECK(c(0, 0) == doctest::Approx(0.6));
  CHECK(c(0, 1) == doctest::Approx(0.5 * std::exp(-0.1 / 0.3)));
  CHECK(c(0, 2) == doctest::Approx(0.5 * std::exp(-0.2 / 0.3)));
}

TEST_CASE("jittered factorization") {
  const VariogramModel m{0.0, 1.0, 0.5};
  const LocationSet distinct{{0, 0}, {1, 0}, {0, 1}};
  const auto plain = factorize_with_jitter(covariance_matrix(distinct, m), m.sill());
  CHECK(plain.jitter == 0.0);

  // duplicated location without a nugget is singular; jitter rescues it
  const LocationSet dup{{0, 0}, {0, 0}, {1, 1}};
  const auto rescued = factorize_with_jitter(covariance_matrix(dup, m), m.sill());
  CHECK(rescued.jitter > 0.0);
  CHECK(rescued.jitter <= 1e-6 * m.sill() * (1 + 1e-12));

  Eigen::MatrixXd indefinite(2, 2);
  indefinite << 1.0, 2.0, 2.0, 1.0;
  CHECK_THROWS_AS((factorize_with_jitter(indefinite, 1.0)), IllConditionedError);
}

TEST_CASE("simulate_gp determinism") {
  const auto locs = random_locations(30, 3);
  const VariogramModel m{0.1, 0.4, 0.2};
  const auto a = simulate_gp(locs, m, 1.0, 99);
  const auto b = simulate_gp(locs, m, 1.0, 99);
  const auto c = simulate_gp(locs, m, 1.0, 100);
  CHECK(a.values == b.values);
  CHECK(a.values != c.values);
  CHECK(a.values.size() == locs.size());
  CHECK(a.mean == 1.0);
}

TEST_CASE("simulate_gp single point moments") {
  const LocationSet one{{0.5, 0.5}};
  const VariogramModel m{0.0, 0.4, 0.1};
  constexpr int kSeeds = 10000;
  double sum = 0.0;
  for (int s = 0; s < kSeeds; ++s) sum += simulate_gp(one, m, 1.0, derive_seed(11, {std::uint64_t(s)})).values[0];
  CHECK(std::abs(sum / kSeeds - 1.0) < 3.0 * std::sqrt(0.4 / kSeeds));
}

TEST_CASE("simulate_gp distant points are uncorrelated") {
  const LocationSet far{{0, 0}, {100, 0}};
  const VariogramModel m{0.0, 0.4, 0.1};
  constexpr int kReps = 10000;
  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  for (int r = 0; r < kReps; ++r) {
    const auto v = simulate_gp(far, m, 0.0, derive_seed(12, {std::uint64_t(r)})).values;
    sx += v[0];
    sy += v[1];
    sxx += v[0] * v[0];
    syy += v[1] * v[1];
    sxy += v[0] * v[1];
  }
  const double n = kReps;
  const double cov = sxy / n - sx * sy / (n * n);
  const double corr = cov / std::sqrt((sxx / n - sx * sx / (n * n)) * (syy / n - sy * sy / (n * n)));
  CHECK(std::abs(corr) < 0.05);
}

TEST_CASE("simulate_gp empirical covariance converges to the model") {
  const LocationSet five{{0.1, 0.1}, {0.2, 0.15}, {0.5, 0.5}, {0.55, 0.4}, {0.9, 0.2}};
  const VariogramModel m{0.1, 0.4, 0.2};
  const auto model_cov = covariance_matrix(five, m);
  constexpr int kReps = 100000;
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(5, 5);
  Eigen::VectorXd mean_acc = Eigen::VectorXd::Zero(5);
  for (int r = 0; r < kReps; ++r) {
    const auto v = simulate_gp(five, m, 0.0, derive_seed(13, {std::uint64_t(r)})).values;
    const Eigen::Map<const Eigen::VectorXd> x(v.data(), 5);
    acc += x * x.transpose();
    mean_acc += x;
  }
  mean_acc /= kReps;
  const Eigen::MatrixXd emp = acc / kReps - mean_acc * mean_acc.transpose();
  CHECK((emp - model_cov).cwiseAbs().maxCoeff() < 0.05);
}

TEST_CASE("seed derivation") {
  CHECK(derive_seed(1, {2, 3}) == derive_seed(1, {2, 3}));
  CHECK(derive_seed(1, {2, 3}) != derive_seed(1, {3, 2}));
  CHECK(derive_seed(1, {2}) != derive_seed(2, {2}));
  CHECK(standard_normals(4, 5) == standard_normals(4, 5));
}
