#include "spotvol/simulator.hpp"

#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <vector>

using namespace spotvol;

TEST_CASE("volatility curves evaluate their defining shapes") {
  const VolCurve c = VolCurve::constant(3e-8);
  CHECK(c(0.0) == 3e-8);
  CHECK(c(0.5) == 3e-8);

  const VolCurve pw = VolCurve::piecewise_linear({{0.0, 1.0}, {0.5, 3.0}, {1.0, 2.0}});
  CHECK(pw(0.0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(pw(0.25) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(pw(0.5) == doctest::Approx(3.0).epsilon(1e-14));
  CHECK(pw(0.75) == doctest::Approx(2.5).epsilon(1e-14));
  CHECK(pw(-0.5) == doctest::Approx(1.0).epsilon(1e-14));  // clamped
  CHECK(pw(1.5) == doctest::Approx(2.0).epsilon(1e-14));

  const VolCurve sin_curve = VolCurve::sinusoid(2.0, 1.0, 1.0);
  CHECK(sin_curve(0.0) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(sin_curve(0.25) == doctest::Approx(3.0).epsilon(1e-13));
  CHECK(sin_curve(0.75) == doctest::Approx(1.0).epsilon(1e-13));

  const VolCurve u = VolCurve::ushape(4.0, 1.0, 3.0);
  CHECK(u(0.0) == doctest::Approx(4.0).epsilon(1e-13));
  CHECK(u(0.5) == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(u(1.0) == doctest::Approx(3.0).epsilon(1e-13));
  // Quadratic through the three anchors dips between open and mid.
  CHECK(u(0.25) < u(0.0));
  CHECK(u(0.25) > u(0.5));

  CHECK_THROWS(VolCurve::constant(0.0));
  CHECK_THROWS(VolCurve::sinusoid(1.0, 1.0, 1.0));   // touches zero
  CHECK_THROWS(VolCurve::ushape(1.0, -1.0, 1.0));    // negative in the middle
  CHECK_THROWS(VolCurve::piecewise_linear({{0.0, 1.0}}));
  CHECK_THROWS(VolCurve::piecewise_linear({{0.5, 1.0}, {0.2, 2.0}}));
}

TEST_CASE("arrival models produce ordered times from t0") {
  Rng rng(111u);
  const ArrivalModel eq = ArrivalModel::equispaced(0.5);
  const std::vector<double> te = eq.times(5, 34200.0, rng);
  REQUIRE(te.size() == 5);
  CHECK(te[0] == doctest::Approx(34200.0));
  CHECK(te[4] == doctest::Approx(34202.0));

  const ArrivalModel po = ArrivalModel::poisson(2.0);
  const std::vector<double> tp = po.times(4000, 34200.0, rng);
  REQUIRE(tp.size() == 4000);
  CHECK(tp.front() == doctest::Approx(34200.0));
  double mean_gap = 0.0;
  for (std::size_t i = 1; i < tp.size(); ++i) {
    CHECK(tp[i] > tp[i - 1]);
    mean_gap += tp[i] - tp[i - 1];
  }
  mean_gap /= static_cast<double>(tp.size() - 1);
  CHECK(mean_gap == doctest::Approx(0.5).epsilon(0.1));

  const ArrivalModel ih =
      ArrivalModel::inhom_poisson(VolCurve::ushape(3.0, 0.5, 3.0), 23400.0);
  const std::vector<double> ti = ih.times(3000, 34200.0, rng);
  for (std::size_t i = 1; i < ti.size(); ++i) CHECK(ti[i] > ti[i - 1]);
  // The u-shaped rate concentrates early arrivals: the first thousand gaps
  // should be shorter on average than the middle thousand.
  double early = 0.0, middle = 0.0;
  for (int i = 1; i <= 1000; ++i) early += ti[i] - ti[i - 1];
  for (int i = 1501; i <= 2500; ++i) middle += ti[i] - ti[i - 1];
  CHECK(early < middle);
}

TEST_CASE("latent paths start in the configured window and scale with the curve") {
  PathConfig cfg;
  cfg.T = 50000;
  cfg.p0 = 50.0;
  cfg.p0_halfwidth = 0.005;
  cfg.vol = VolCurve::constant(1e-8);
  const LatentPath path = gen_path(cfg, 222u);
  REQUIRE(path.x.size() == 50000);
  REQUIRE(path.times.size() == 50000);
  const double p1 = std::exp(path.x[0]);
  CHECK(p1 >= 49.995);
  CHECK(p1 < 50.005);

  double var = 0.0;
  for (std::size_t i = 1; i < path.x.size(); ++i) {
    const double dx = path.x[i] - path.x[i - 1];
    var += dx * dx;
  }
  var /= static_cast<double>(path.x.size() - 1);
  CHECK(var == doctest::Approx(1e-8).epsilon(0.05));

  PathConfig pinned = cfg;
  pinned.p0_halfwidth = 0.0;
  const LatentPath fixed_start = gen_path(pinned, 223u);
  CHECK(std::exp(fixed_start.x[0]) == doctest::Approx(50.0).epsilon(1e-12));

  CHECK_THROWS(gen_path(PathConfig{.T = 1}, 1u));
  CHECK_THROWS(gen_path(PathConfig{.p0 = 0.004, .p0_halfwidth = 0.005}, 1u));
}

TEST_CASE("clock-time paths scale increment variance with duration") {
  PathConfig cfg;
  cfg.T = 40000;
  cfg.mode = TimeMode::ClockTime;
  cfg.vol = VolCurve::constant(1e-9);  // per second
  cfg.arrivals = ArrivalModel::equispaced(4.0);
  const LatentPath path = gen_path(cfg, 333u);
  double var = 0.0;
  for (std::size_t i = 1; i < path.x.size(); ++i) {
    const double dx = path.x[i] - path.x[i - 1];
    var += dx * dx;
  }
  var /= static_cast<double>(path.x.size() - 1);
  CHECK(var == doctest::Approx(4e-9).epsilon(0.05));
}

TEST_CASE("path generation is deterministic in the seed") {
  PathConfig cfg;
  cfg.T = 100;
  const LatentPath a = gen_path(cfg, 42u);
  const LatentPath b = gen_path(cfg, 42u);
  const LatentPath c = gen_path(cfg, 43u);
  CHECK(a.x == b.x);
  CHECK(a.times == b.times);
  CHECK(a.x != c.x);
}

TEST_CASE("deterministic rounding snaps to the grid within half a tick") {
  PathConfig cfg;
  cfg.T = 2000;
  const LatentPath path = gen_path(cfg, 444u);
  SimNoise noise;
  noise.kind = NoiseConfig::Kind::SimpleDeterministic;
  noise.tick = 0.01;
  const std::vector<TickObservation> ticks = apply_noise(path, noise, 445u);
  REQUIRE(ticks.size() == path.x.size());
  for (std::size_t i = 0; i < ticks.size(); ++i) {
    const double p = ticks[i].price;
    const double grid_units = p / 0.01;
    CHECK(std::abs(grid_units - std::round(grid_units)) < 1e-6);
    CHECK(std::abs(p - std::exp(path.x[i])) <= 0.005 + 1e-12);
    CHECK(ticks[i].time == path.times[i]);
  }
}

TEST_CASE("stochastic rounding picks an adjacent grid neighbor") {
  PathConfig cfg;
  cfg.T = 2000;
  const LatentPath path = gen_path(cfg, 555u);
  SimNoise noise;
  noise.kind = NoiseConfig::Kind::SimpleStochastic;
  noise.tick = 0.01;
  const std::vector<TickObservation> ticks = apply_noise(path, noise, 556u);
  bool above = false, below = false;
  for (std::size_t i = 0; i < ticks.size(); ++i) {
    const double p = ticks[i].price;
    const double efficient = std::exp(path.x[i]);
    CHECK(std::abs(p - efficient) < 0.01 + 1e-12);
    above = above || p > efficient;
    below = below || p < efficient;
  }
  CHECK(above);
  CHECK(below);
}

TEST_CASE("order book noise trades a level of the recorded book") {
  PathConfig cfg;
  cfg.T = 500;
  const LatentPath path = gen_path(cfg, 666u);
  SimNoise noise;
  noise.kind = NoiseConfig::Kind::OrderBook;
  noise.tick = 0.01;
  noise.book_depth = 5;
  const std::vector<TickObservation> ticks = apply_noise(path, noise, 667u);
  for (const auto& t : ticks) {
    REQUIRE(t.book_levels.size() == 11);
    for (std::size_t l = 1; l < t.book_levels.size(); ++l)
      CHECK(t.book_levels[l] > t.book_levels[l - 1]);
    CHECK(std::find(t.book_levels.begin(), t.book_levels.end(), t.price) !=
          t.book_levels.end());
  }
}

TEST_CASE("market maker noise quotes the straddling ticks and trades one side") {
  PathConfig cfg;
  cfg.T = 500;
  const LatentPath path = gen_path(cfg, 777u);
  SimNoise noise;
  noise.kind = NoiseConfig::Kind::MarketMakerQuotes;
  noise.tick = 0.01;
  const std::vector<TickObservation> ticks = apply_noise(path, noise, 778u);
  for (std::size_t i = 0; i < ticks.size(); ++i) {
    REQUIRE(ticks[i].bid.has_value());
    REQUIRE(ticks[i].ask.has_value());
    const double bid = *ticks[i].bid, ask = *ticks[i].ask;
    CHECK(ask - bid == doctest::Approx(0.01).epsilon(1e-9));
    CHECK((ticks[i].price == bid || ticks[i].price == ask));
    const double efficient = std::exp(path.x[i]);
    CHECK(bid <= efficient + 1e-12);
    CHECK(ask >= efficient - 1e-12);
  }
}

TEST_CASE("rounding noise leaves the bid-ask bounce signature in returns") {
  // Nearly frozen latent path: observed returns are pure rounding noise, an
  // MA(1) with first-lag autocorrelation near -1/2 under stochastic rounding.
  PathConfig cfg;
  cfg.T = 20000;
  cfg.vol = VolCurve::constant(1e-12);
  cfg.p0_halfwidth = 0.004;
  const LatentPath path = gen_path(cfg, 888u);
  SimNoise noise;
  noise.kind = NoiseConfig::Kind::SimpleStochastic;
  noise.tick = 0.01;
  const std::vector<TickObservation> ticks = apply_noise(path, noise, 889u);
  std::vector<double> prices;
  for (const auto& t : ticks) prices.push_back(t.price);

  const std::vector<double> acf = return_acf(prices, 3);
  CHECK(acf[0] == doctest::Approx(-0.5).epsilon(0.1));
  CHECK(std::abs(acf[1]) < 0.05);
  const std::vector<double> pacf = return_pacf(prices, 3);
  CHECK(pacf[0] == doctest::Approx(acf[0]).epsilon(1e-12));

  // Deterministic rounding of the same frozen path barely ever moves.
  SimNoise det;
  det.kind = NoiseConfig::Kind::SimpleDeterministic;
  det.tick = 0.01;
  const std::vector<TickObservation> dticks = apply_noise(path, det, 890u);
  std::vector<double> dprices;
  for (const auto& t : dticks) dprices.push_back(t.price);
  CHECK(zero_return_fraction(dprices) > zero_return_fraction(prices));
}

TEST_CASE("zero return fraction counts equal consecutive prices") {
  const std::vector<double> p = {50.0, 50.0, 50.01, 50.01, 50.01};
  CHECK(zero_return_fraction(p) == doctest::Approx(0.75).epsilon(1e-14));
  CHECK_THROWS(zero_return_fraction(std::vector<double>{50.0}));
  CHECK_THROWS(return_acf(p, 0));
  CHECK_THROWS(return_acf(std::vector<double>{50.0, 50.0, 50.0}, 5));
  const std::vector<double> flat(100, 50.0);
  CHECK_THROWS_AS(return_acf(flat, 1), std::domain_error);
}

TEST_CASE("additive noise at zero amplitude is the identity") {
  PathConfig cfg;
  cfg.T = 50;
  const LatentPath path = gen_path(cfg, 999u);
  const std::vector<double> clean = apply_additive_noise(path, 0.0, 1000u);
  REQUIRE(clean.size() == path.x.size());
  for (std::size_t i = 0; i < clean.size(); ++i)
    CHECK(clean[i] == doctest::Approx(std::exp(path.x[i])).epsilon(1e-14));

  const std::vector<double> noisy = apply_additive_noise(path, 1e-4, 1001u);
  bool moved = false;
  for (std::size_t i = 0; i < noisy.size(); ++i) moved = moved || noisy[i] != clean[i];
  CHECK(moved);
}
