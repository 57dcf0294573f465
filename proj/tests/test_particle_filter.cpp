#include "spotvol/particle_filter.hpp"

#include "doctest.h"

#include <cmath>
#include <limits>
#include <vector>

using namespace spotvol;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Interval log_box(double log_lo, double log_hi) {
  Interval iv;
  iv.lo = std::isinf(log_lo) ? 0.0 : std::exp(log_lo);
  iv.hi = std::isinf(log_hi) ? kInf : std::exp(log_hi);
  return iv;
}

ParticleCloud scalar_cloud(const std::vector<double>& log_prices,
                           const std::vector<double>& weights, std::uint64_t seed,
                           double ess_c = 1e-6) {
  std::vector<std::vector<Vec>> histories;
  for (double m : log_prices) {
    Vec v(1);
    v << m;
    histories.push_back({v});
  }
  return ParticleCloud::from_state(histories, weights, seed, ess_c);
}

Mat var1(double v) {
  Mat m(1, 1);
  m << v;
  return m;
}

const StateModel kTxn{};

}  // namespace

TEST_CASE("effective sample size is the inverse sum of squared weights") {
  ParticleCloud c = scalar_cloud({0.0, 0.1, 0.2}, {0.5, 0.25, 0.25}, 1u);
  CHECK(c.ess() == doctest::Approx(8.0 / 3.0).epsilon(1e-14));

  ParticleCloud u = scalar_cloud({0.0, 0.1, 0.2, 0.3}, {1.0, 1.0, 1.0, 1.0}, 1u);
  CHECK(u.ess() == doctest::Approx(4.0).epsilon(1e-14));
}

TEST_CASE("from_state normalizes weights and validates shapes") {
  ParticleCloud c = scalar_cloud({0.0, 0.1}, {3.0, 1.0}, 1u);
  CHECK(c.weight(0) == doctest::Approx(0.75).epsilon(1e-14));
  CHECK(c.weight(1) == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(c.size() == 2);
  CHECK(c.dim() == 1);
  CHECK(c.history_depth() == 1);
  CHECK(c.x(0, 0)[0] == 0.0);
  CHECK_THROWS(c.x(0, 1));  // beyond recorded history
  CHECK_THROWS(c.x(5, 0));

  CHECK_THROWS(scalar_cloud({}, {}, 1u));
  CHECK_THROWS(scalar_cloud({0.0}, {0.0}, 1u));           // weights sum to zero
  CHECK_THROWS(scalar_cloud({0.0, 0.1}, {1.0, -1.0}, 1u));  // negative weight
}

TEST_CASE("init draws particles uniformly on the first box") {
  const SupportBox box(support_simple_deterministic(50.01, 0.01));
  ParticleCloud c = ParticleCloud::init(box, 300, 7u);
  CHECK(c.size() == 300);
  CHECK(c.history_depth() == 1);
  double lo = kInf, hi = -kInf;
  for (int i = 0; i < c.size(); ++i) {
    CHECK(c.weight(i) == doctest::Approx(1.0 / 300).epsilon(1e-14));
    const double p = std::exp(c.x(i, 0)[0]);
    CHECK(p >= 50.005);
    CHECK(p < 50.015);
    lo = std::min(lo, p);
    hi = std::max(hi, p);
  }
  // The cloud spreads over the box rather than collapsing to a point.
  CHECK(hi - lo > 0.005);

  CHECK_THROWS(ParticleCloud::init(box, 1, 7u));
  CHECK_THROWS(ParticleCloud::init(box, 10, 7u, 0));
  CHECK_THROWS(ParticleCloud::init(box, 10, 7u, 1, 0.0));
  const SupportBox unbounded(log_box(0.0, kInf));
  CHECK_THROWS(ParticleCloud::init(unbounded, 10, 7u));
}

TEST_CASE("init is deterministic in the seed") {
  const SupportBox box(support_simple_deterministic(50.01, 0.01));
  ParticleCloud a = ParticleCloud::init(box, 50, 123u);
  ParticleCloud b = ParticleCloud::init(box, 50, 123u);
  ParticleCloud c = ParticleCloud::init(box, 50, 124u);
  bool same = true, diff = false;
  for (int i = 0; i < 50; ++i) {
    same = same && a.x(i, 0)[0] == b.x(i, 0)[0];
    diff = diff || a.x(i, 0)[0] != c.x(i, 0)[0];
  }
  CHECK(same);
  CHECK(diff);
}

TEST_CASE("step weights particles by the Gaussian mass of the box") {
  ParticleCloud c = scalar_cloud({0.0, 0.01}, {0.5, 0.5}, 99u);
  const SupportBox box(log_box(0.005, 0.015));
  const double var = 1e-4;

  const FilterStepOutput out = c.step(var1(var), box, 1.0, kTxn);
  CHECK_FALSE(out.diverged);

  const double m0 = normal_interval_prob(0.0, 0.01, 0.005, 0.015);
  const double m1 = normal_interval_prob(0.01, 0.01, 0.005, 0.015);
  CHECK(out.predictive_likelihood == doctest::Approx(0.5 * m0 + 0.5 * m1).epsilon(1e-12));
  CHECK(c.weight(0) == doctest::Approx(m0 / (m0 + m1)).epsilon(1e-12));
  CHECK(c.weight(1) == doctest::Approx(m1 / (m0 + m1)).epsilon(1e-12));
  CHECK(c.weight(0) + c.weight(1) == doctest::Approx(1.0).epsilon(1e-14));

  // New states land strictly inside the box; the previous states shift to lag 1.
  CHECK(c.history_depth() == 2);
  for (int i = 0; i < 2; ++i) {
    CHECK(c.x(i, 0)[0] > 0.005);
    CHECK(c.x(i, 0)[0] < 0.015);
  }
  CHECK(c.x(0, 1)[0] == 0.0);
  CHECK(c.x(1, 1)[0] == 0.01);
}

TEST_CASE("lag history travels through steps as a ring") {
  ParticleCloud c = scalar_cloud({0.0}, {0.5}, 5u);
  std::vector<std::vector<Vec>> h;
  Vec a(1), b(1), d(1);
  a << 0.3;
  b << 0.2;
  d << 0.1;
  h.push_back({a, b, d});  // newest first
  ParticleCloud deep = ParticleCloud::from_state(h, {1.0}, 5u);
  CHECK(deep.lag_capacity() == 2);
  CHECK(deep.history_depth() == 3);
  CHECK(deep.x(0, 0)[0] == doctest::Approx(0.3));
  CHECK(deep.x(0, 1)[0] == doctest::Approx(0.2));
  CHECK(deep.x(0, 2)[0] == doctest::Approx(0.1));

  const SupportBox box(log_box(0.3, 0.35));
  deep.step(var1(1e-2), box, 1.0, kTxn);
  CHECK(deep.x(0, 1)[0] == doctest::Approx(0.3));
  CHECK(deep.x(0, 2)[0] == doctest::Approx(0.2));
  CHECK(deep.x(0, 0)[0] > 0.3);
  CHECK(deep.x(0, 0)[0] < 0.35);
}

TEST_CASE("residual resampling keeps guaranteed copies and flattens weights") {
  ParticleCloud c = scalar_cloud({1.0, 2.0, 3.0, 4.0}, {0.7, 0.1, 0.1, 0.1}, 11u);
  Rng rng(1234u);
  c.residual_resample(rng);
  CHECK(c.resample_count() == 1);
  int copies_of_first = 0;
  for (int i = 0; i < 4; ++i) {
    CHECK(c.weight(i) == doctest::Approx(0.25).epsilon(1e-14));
    if (c.x(i, 0)[0] == 1.0) ++copies_of_first;
  }
  // floor(4 * 0.7) = 2 copies are deterministic.
  CHECK(copies_of_first >= 2);
}

TEST_CASE("step resamples when the effective size falls under the threshold") {
  // ess_c = 1 forces a resample whenever weights are unequal.
  ParticleCloud c = scalar_cloud({0.0, 0.02}, {0.5, 0.5}, 21u, 1.0);
  const SupportBox box(log_box(0.0005, 0.0015));
  const FilterStepOutput out = c.step(var1(1e-4), box, 1.0, kTxn);
  CHECK(out.resampled);
  CHECK(out.ess < 2.0);  // the pre-resample value is reported
  CHECK(c.weight(0) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(c.resample_count() == 1);
}

TEST_CASE("weight underflow triggers divergence recovery on the box") {
  ParticleCloud c = scalar_cloud({std::log(50.0), std::log(50.0)}, {0.5, 0.5}, 31u);
  const SupportBox far_box(support_simple_deterministic(100.0, 0.01));
  const FilterStepOutput out = c.step(var1(1e-8), far_box, 1.0, kTxn);
  CHECK(out.diverged);
  CHECK_FALSE(out.resampled);
  CHECK(out.predictive_likelihood == 0.0);
  CHECK(out.ess == doctest::Approx(2.0));
  for (int i = 0; i < 2; ++i) {
    CHECK(c.weight(i) == doctest::Approx(0.5).epsilon(1e-14));
    const double p = std::exp(c.x(i, 0)[0]);
    CHECK(p >= 99.995);
    CHECK(p < 100.005);
  }
}

TEST_CASE("divergence recovery clips unbounded sides near the cloud") {
  ParticleCloud c = scalar_cloud({std::log(50.0), std::log(50.0)}, {0.5, 0.5}, 41u);
  Interval iv;
  iv.lo = 100.0;
  iv.hi = kInf;
  const SupportBox half_open{iv};
  const double sd = 1e-4;
  const FilterStepOutput out = c.step(var1(sd * sd), half_open, 1.0, kTxn);
  CHECK(out.diverged);
  const double llo = std::log(100.0);
  const double cushion = 20.0 * sd;
  for (int i = 0; i < 2; ++i) {
    CHECK(c.x(i, 0)[0] >= llo);
    CHECK(c.x(i, 0)[0] <= llo + cushion + 1e-12);
  }
}

TEST_CASE("steps are bit-identical across thread counts") {
  const SupportBox box0(support_simple_deterministic(50.01, 0.01));
  ParticleCloud a = ParticleCloud::init(box0, 200, 777u);
  ParticleCloud b = ParticleCloud::init(box0, 200, 777u);

  const SupportBox box1(support_simple_deterministic(50.02, 0.01));
  const SupportBox box2(support_simple_deterministic(50.01, 0.01));
  for (const SupportBox* box : {&box1, &box2, &box1}) {
    const FilterStepOutput oa = a.step(var1(1e-7), *box, 1.0, kTxn, 1);
    const FilterStepOutput ob = b.step(var1(1e-7), *box, 1.0, kTxn, 2);
    CHECK(oa.predictive_likelihood == ob.predictive_likelihood);
    CHECK(oa.resampled == ob.resampled);
  }
  for (int i = 0; i < a.size(); ++i) {
    CHECK(a.x(i, 0)[0] == b.x(i, 0)[0]);
    CHECK(a.weight(i) == b.weight(i));
  }
}

TEST_CASE("step validates dimensions and the transition variance") {
  ParticleCloud c = scalar_cloud({0.0, 0.1}, {0.5, 0.5}, 51u);
  std::vector<Interval> ivs = {log_box(0.0, 0.1), log_box(0.0, 0.1)};
  const SupportBox box2{std::span<const Interval>(ivs)};
  CHECK_THROWS(c.step(var1(1e-4), box2, 1.0, kTxn));  // dim mismatch
  const SupportBox box1(log_box(0.0, 0.1));
  CHECK_THROWS(c.step(var1(0.0), box1, 1.0, kTxn));
  CHECK_THROWS(c.step(var1(-1e-4), box1, 1.0, kTxn));
}

TEST_CASE("clock time scales the proposal with the duration") {
  // With dt = 4 and per-second variance v, the proposal sd doubles; verify
  // via the reported mass of a one-sided box around the particle.
  ParticleCloud c1 = scalar_cloud({0.0}, {1.0}, 61u);
  ParticleCloud c4 = scalar_cloud({0.0}, {1.0}, 61u);
  StateModel clock;
  clock.mode = TimeMode::ClockTime;
  const SupportBox box(log_box(0.01, kInf));
  const double v = 1e-4;
  const FilterStepOutput o1 = c1.step(var1(v), box, 1.0, clock);
  const FilterStepOutput o4 = c4.step(var1(v), box, 4.0, clock);
  CHECK(o1.predictive_likelihood ==
        doctest::Approx(normal_interval_prob(0.0, 0.01, 0.01, kInf)).epsilon(1e-12));
  CHECK(o4.predictive_likelihood ==
        doctest::Approx(normal_interval_prob(0.0, 0.02, 0.01, kInf)).epsilon(1e-12));
  CHECK(o4.predictive_likelihood > o1.predictive_likelihood);
}
