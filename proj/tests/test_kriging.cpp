#include <cmath>
#include <random>

#include <doctest.h>

#include "krigeweight/kriging.hpp"
#include "krigeweight/random.hpp"
#include "oracle.hpp"

using namespace krigeweight;

namespace {

LocationSet uniform_points(std::size_t n, Engine& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  LocationSet out(n);
  for (auto& p : out) p = {u(rng), u(rng)};
  return out;
}

std::vector<oracle::Pt> to_pts(const LocationSet& l) {
  std::vector<oracle::Pt> out;
  for (const auto& p : l) out.push_back({p.x, p.y});
  return out;
}

oracle::Model to_model(const VariogramModel& m) { return {m.nugget, m.partial_sill, m.range}; }

}  // namespace

TEST_CASE("gls mean") {
  SpatialSample one{{{0.2, 0.3}}, {4.2}, std::nullopt};
  CHECK(gls_mean(one, {0.1, 0.3, 0.2}) == doctest::Approx(4.2));

  SpatialSample s{{{0, 0}, {0.1, 0}, {0.5, 0.5}, {0.9, 0.1}}, {1.0, 2.0, 3.0, 6.0}, std::nullopt};
  // pure nugget: C is proportional to the identity
  CHECK(gls_mean(s, {0.5, 1e-14, 0.1}) == doctest::Approx(3.0).epsilon(1e-9));

  // hand-built 3x3 system through the explicit inverse
  SpatialSample three{{{0, 0}, {0.2, 0}, {0, 0.3}}, {1.0, -0.5, 2.0}, std::nullopt};
  const VariogramModel m{0.2, 0.4, 0.1};
  oracle::Matrix c(3, std::vector<double>(3));
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) c[i][j] = covariance(distance(three.locations[i], three.locations[j]), m);
  }
  const auto ci = oracle::inverse(c);
  double num = 0.0, den = 0.0;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      num += ci[i][j] * three.values[j];
      den += ci[i][j];
    }
  }
  CHECK(std::abs(gls_mean(three, m) - num / den) < 1e-10);
}

TEST_CASE("ordinary kriging examples") {
  const VariogramModel no_nugget{0.0, 0.4, 0.1};
  SpatialSample s{{{0, 0}, {0.3, 0.1}, {0.7, 0.8}}, {1.0, 2.5, -1.0}, std::nullopt};
  const auto at = ordinary_kriging({0.3, 0.1}, s, no_nugget);
  CHECK(std::abs(at.mean - 2.5) < 1e-10);
  CHECK(std::abs(at.variance) < 1e-10);
  CHECK(at.effective_n == 3);
  CHECK(at.scheme == VarianceScheme::kSampleOnly);

  // one observation at distance phi: (s - c^2/s) + (1 - c/s)^2 s with s = 0.6, c = 0.4/e
  SpatialSample one{{{0, 0}}, {1.0}, std::nullopt};
  const auto r = ordinary_kriging({0.1, 0}, one, {0.2, 0.4, 0.1});
  CHECK(r.variance == doctest::Approx(0.905696447062846).epsilon(1e-12));
  CHECK(r.mean == doctest::Approx(1.0));
}

TEST_CASE("ordinary kriging matches the brute-force oracle") {
  Engine rng(21);
  std::uniform_real_distribution<double> u(0.05, 1.0);
  std::normal_distribution<double> z(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const auto locs = uniform_points(4, rng);
    std::vector<double> values(4);
    for (auto& v : values) v = z(rng);
    const VariogramModel m{trial % 3 == 0 ? 0.0 : u(rng), u(rng), u(rng)};
    const Location pred{u(rng), u(rng)};
    for (auto target : {PredictionTarget::kNoisyObservation, PredictionTarget::kLatentSurface}) {
      const auto got = ordinary_kriging(pred, {locs, values, std::nullopt}, m, {target});
      const auto want = oracle::krige(to_pts(locs), values, {pred.x, pred.y}, to_model(m), 1.0,
                                      target == PredictionTarget::kLatentSurface);
      CHECK(std::abs(got.mean - want.mean) < 1e-9);
      CHECK(std::abs(got.variance - std::max(want.variance, 0.0)) < 1e-9);
    }
  }
}

TEST_CASE("kriging variance stays nonnegative") {
  Engine rng(22);
  std::uniform_real_distribution<double> u(0.01, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const auto locs = uniform_points(2 + trial % 20, rng);
    const VariogramModel m{trial % 2 ? 0.0 : u(rng), u(rng), u(rng)};
    const KrigingSystem sys(locs, m);
    for (int k = 0; k < 10; ++k) {
      const Location pred = k == 0 ? locs[0] : Location{u(rng), u(rng)};
      const auto [v, raw] = sys.variance(pred);
      CHECK(v >= 0.0);
      CHECK(raw >= -1e-10 * m.sill());
    }
  }
}

TEST_CASE("population variance") {
  const VariogramModel m{0.2, 0.4, 0.1};
  SpatialSample s{{{0.1, 0.1}, {0.4, 0.2}, {0.8, 0.7}}, {1.0, 2.0, 0.5}, std::nullopt};
  const Location pred{0.3, 0.3};
  CHECK(std::abs(population_variance(pred, s.locations, m) - ordinary_kriging(pred, s, m).variance) < 1e-12);

  // symmetric pair about the prediction point: weights are 1/2 each
  const LocationSet pair{{-0.1, 0}, {0.1, 0}};
  CHECK(std::abs(population_variance({0, 0}, pair, m) - 0.6327635037101687) < 1e-10);
}

TEST_CASE("population variance on nested location sets") {
  Engine rng(23);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const VariogramModel m{0.2, 0.4, 0.1};
  int decreased = 0;
  constexpr int kTrials = 400;
  for (int trial = 0; trial < kTrials; ++trial) {
    auto locs = uniform_points(5 + trial % 10, rng);
    const Location pred{u(rng), u(rng)};
    const KrigingSystem before(locs, m);
    const auto c0 = before.cross_covariance(pred);
    const double sk_before = c0.dot(covariance_matrix(locs, m).ldlt().solve(c0));
    const double v_before = before.variance(pred).first;
    locs.push_back({u(rng), u(rng)});
    const KrigingSystem after(locs, m);
    const auto c1 = after.cross_covariance(pred);
    const double sk_after = c1.dot(covariance_matrix(locs, m).ldlt().solve(c1));
    CHECK(sk_after >= sk_before - 1e-12);
    if (after.variance(pred).first <= v_before + 1e-12) ++decreased;
  }
  CHECK(decreased >= 0.95 * kTrials);
}

TEST_CASE("inclusion rate smoothing") {
  const LocationSet locs{{0, 0}, {1, 0}, {0, 1}};
  const std::vector<double> flat{0.3, 0.3, 0.3};
  CHECK(smooth_inclusion_rate(locs, flat, {0.4, 0.7}, 0.2).rate == doctest::Approx(0.3));

  const std::vector<double> varied{0.1, 0.6, 0.9};
  CHECK(smooth_inclusion_rate(locs, varied, {1, 0}, 1e-3).rate == doctest::Approx(0.6));

  const LocationSet two{{0, 0}, {1, 0}};
  const std::vector<double> r2{0.1, 0.3};
  CHECK(smooth_inclusion_rate(two, r2, {0.5, 0.3}, 0.4).rate == doctest::Approx(0.2));

  const auto far = smooth_inclusion_rate(two, r2, {100, 100}, 0.1);
  CHECK(far.fell_back);
  CHECK(far.rate == doctest::Approx(0.2));

  const std::vector<double> bad{0.0, 0.3};
  CHECK_THROWS_AS((smooth_inclusion_rate(two, bad, {0, 0}, 0.1)), std::invalid_argument);
  CHECK_THROWS_AS((smooth_inclusion_rate(two, r2, {0, 0}, 0.0)), std::invalid_argument);
  CHECK(default_rate_bandwidth(two) == doctest::Approx(2.0));
}

TEST_CASE("scaled kriging variance") {
  Engine rng(24);
  const VariogramModel m{0.1, 0.4, 0.15};
  const auto locs = uniform_points(8, rng);
  std::vector<double> values{1, 2, 3, 4, 5, 6, 7, 8};
  const SpatialSample s{locs, values, std::nullopt};
  const Location pred{0.5, 0.5};

  const auto ok = ordinary_kriging(pred, s, m);
  const auto one = scaled_kriging_variance(pred, s, m, 1.0);
  CHECK(std::abs(one.variance - ok.variance) < 1e-12);
  CHECK(std::abs(one.mean - ok.mean) < 1e-12);
  CHECK(one.nonstandard_mean);
  CHECK(one.scheme == VarianceScheme::kScaled);

  // rate 0.25 halves every distance, the same as shrinking the coordinates
  LocationSet half;
  for (const auto& p : locs) half.push_back({0.5 * p.x, 0.5 * p.y});
  const auto quarter = scaled_kriging_variance(pred, s, m, 0.25);
  const auto shrunk = ordinary_kriging({0.25, 0.25}, {half, values, std::nullopt}, m);
  CHECK(std::abs(quarter.variance - shrunk.variance) < 1e-12);

  CHECK_THROWS_AS((scaled_kriging_variance(pred, s, m, 0.0)), std::invalid_argument);
  CHECK_THROWS_AS((scaled_kriging_variance(pred, s, m, 1.5)), std::invalid_argument);

  const std::vector<Location> preds{pred, {0.1, 0.9}, pred};
  const std::vector<double> rates{0.25, 1.0, 0.25};
  const auto many = scaled_kriging_variances(preds, s, m, rates);
  CHECK(many[0].variance == quarter.variance);
  CHECK(many[2].variance == quarter.variance);
  CHECK(std::abs(many[1].variance - ordinary_kriging(preds[1], s, m).variance) < 1e-12);
}

TEST_CASE("scaled variance never exceeds the unscaled one without a nugget") {
  const VariogramModel m{0.0, 0.4, 0.1};
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Engine rng(derive_seed(25, {seed}));
    const auto locs = uniform_points(50, rng);
    const SpatialSample s{locs, std::vector<double>(50, 0.0), std::nullopt};
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const Location pred{u(rng), u(rng)};
    CHECK(scaled_kriging_variance(pred, s, m, 0.2).variance <=
          ordinary_kriging(pred, s, m).variance + 1e-12);
  }
}

TEST_CASE("simulated kriging variance") {
  Engine rng(26);
  const VariogramModel m{0.2, 0.4, 0.1};
  const auto all = uniform_points(30, rng);
  const LocationSet sampled(all.begin(), all.begin() + 10);
  std::vector<double> values(10);
  for (std::size_t i = 0; i < 10; ++i) values[i] = static_cast<double>(i);
  const SpatialSample s{sampled, values, std::nullopt};
  const Location pred{0.4, 0.6};

  PseudoObservationSet empty;
  const auto e = simulated_kriging_variance(pred, s, m, empty);
  const auto ok = ordinary_kriging(pred, s, m);
  CHECK(std::abs(e.variance - ok.variance) < 1e-12);
  CHECK(std::abs(e.mean - ok.mean) < 1e-12);
  CHECK(e.effective_n == 10);

  PseudoObservationSet truth;
  truth.locations.assign(all.begin() + 10, all.end());
  CHECK(simulated_kriging_variance(pred, s, m, truth).variance == population_variance(pred, all, m));
  CHECK(simulated_kriging_variance(pred, s, m, truth).effective_n == 30);

  PseudoObservationSet huge;
  huge.locations.assign(20'000, Location{0.5, 0.5});
  CHECK_THROWS_AS((simulated_kriging_variance(pred, s, m, huge)), std::length_error);
}

TEST_CASE("simulated variance matches the population variance on average under SRS") {
  Engine rng(27);
  const VariogramModel m{0.2, 0.4, 0.1};
  const auto population = uniform_points(200, rng);
  std::bernoulli_distribution take(0.5);
  LocationSet sampled;
  for (const auto& p : population) {
    if (take(rng)) sampled.push_back(p);
  }
  const SpatialSample s{sampled, std::vector<double>(sampled.size(), 0.0), std::nullopt};
  const PointPattern pattern{sampled, Bounds::unit_square()};
  const auto preds = uniform_points(25, rng);
  const auto surface = pseudo_target_surface(pattern, std::nullopt);

  std::vector<double> mean_sim(preds.size(), 0.0);
  constexpr int kDraws = 20;
  for (int d = 0; d < kDraws; ++d) {
    const auto pseudo = draw_from_surface(surface, population.size() - sampled.size(),
                                          derive_seed(28, {std::uint64_t(d)}));
    const auto v = simulated_kriging_variances(preds, s, m, pseudo);
    for (std::size_t k = 0; k < preds.size(); ++k) mean_sim[k] += v[k].variance / kDraws;
  }
  const KrigingSystem pop(population, m);
  double ratio = 0.0;
  for (std::size_t k = 0; k < preds.size(); ++k) ratio += mean_sim[k] / pop.variance(preds[k]).first;
  ratio /= static_cast<double>(preds.size());
  CHECK(ratio > 0.9);
  CHECK(ratio < 1.1);
}

TEST_CASE("kriging input validation") {
  const VariogramModel m{0.2, 0.4, 0.1};
  CHECK_THROWS_AS((KrigingSystem({}, m)), std::invalid_argument);
  CHECK_THROWS_AS((KrigingSystem({{0, 0}}, VariogramModel{0.2, 0.4, -1.0})), std::invalid_argument);
  const KrigingSystem sys({{0, 0}, {1, 1}}, m);
  const std::vector<double> wrong{1.0};
  CHECK_THROWS_AS(sys.gls_mean(wrong), std::invalid_argument);
}
