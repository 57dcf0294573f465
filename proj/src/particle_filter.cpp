#include "spotvol/particle_filter.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <thread>

namespace spotvol {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kUnderflowTotal = 1e-300;
constexpr int kMaxThreads = 8;

double clamp_interior(double z, double lo, double hi) {
  if (z <= lo) z = std::nextafter(lo, kInf);
  if (z >= hi) z = std::nextafter(hi, -kInf);
  return z;
}
}  // namespace

double* ParticleCloud::slot_ptr(int i, int slot) {
  return states_.data() + (static_cast<std::size_t>(i) * slots_ + slot) * s_;
}

const double* ParticleCloud::slot_ptr(int i, int slot) const {
  return states_.data() + (static_cast<std::size_t>(i) * slots_ + slot) * s_;
}

int ParticleCloud::ring_slot(int lag_back) const {
  return (ring_head_ - lag_back % slots_ + slots_) % slots_;
}

Vec ParticleCloud::x(int i, int lag_back) const {
  if (i < 0 || i >= n_) throw std::out_of_range("ParticleCloud::x: particle index");
  if (lag_back < 0 || lag_back >= history_depth_)
    throw std::out_of_range("ParticleCloud::x: lag exceeds recorded history");
  Vec v(s_);
  const double* p = slot_ptr(i, ring_slot(lag_back));
  for (int d = 0; d < s_; ++d) v[d] = p[d];
  return v;
}

ParticleCloud ParticleCloud::init(const SupportBox& first_box, int n, std::uint64_t seed,
                                  int lag_capacity, double ess_threshold_c) {
  if (n < 2) throw std::invalid_argument("ParticleCloud::init: need at least 2 particles");
  if (lag_capacity < 1) throw std::invalid_argument("ParticleCloud::init: lag capacity must be >= 1");
  if (!(ess_threshold_c > 0.0 && ess_threshold_c <= 1.0))
    throw std::invalid_argument("ParticleCloud::init: resampling threshold must be in (0,1]");
  if (!first_box.bounded())
    throw std::invalid_argument("ParticleCloud::init: first box must be bounded");

  ParticleCloud c;
  c.n_ = n;
  c.s_ = first_box.dim();
  c.lag_cap_ = lag_capacity;
  c.slots_ = lag_capacity + 1;
  c.seed_ = seed;
  c.ess_c_ = ess_threshold_c;
  c.states_.assign(static_cast<std::size_t>(n) * c.slots_ * c.s_, 0.0);
  c.weights_.assign(static_cast<std::size_t>(n), 1.0 / n);

  Rng rng = derive_rng(seed, "pf.init");
  for (int i = 0; i < n; ++i) {
    double* p = c.slot_ptr(i, 0);
    for (int d = 0; d < c.s_; ++d) {
      const Interval& iv = first_box.axis(d);
      p[d] = std::log(rng.uniform(iv.lo, iv.hi));
    }
    for (int slot = 1; slot < c.slots_; ++slot)
      std::copy(p, p + c.s_, c.slot_ptr(i, slot));
  }
  return c;
}

ParticleCloud ParticleCloud::from_state(const std::vector<std::vector<Vec>>& histories,
                                        const std::vector<double>& weights, std::uint64_t seed,
                                        double ess_threshold_c) {
  if (histories.empty() || histories.size() != weights.size())
    throw std::invalid_argument("ParticleCloud::from_state: histories/weights size mismatch");
  const std::size_t depth = histories.front().size();
  if (depth == 0) throw std::invalid_argument("ParticleCloud::from_state: empty history");
  const int s = static_cast<int>(histories.front().front().size());
  if (s < 1 || s > kMaxDim) throw std::invalid_argument("ParticleCloud::from_state: bad dimension");

  ParticleCloud c;
  c.n_ = static_cast<int>(histories.size());
  c.s_ = s;
  c.lag_cap_ = std::max(1, static_cast<int>(depth) - 1);
  c.slots_ = c.lag_cap_ + 1;
  c.seed_ = seed;
  c.ess_c_ = ess_threshold_c;
  c.history_depth_ = static_cast<int>(depth);
  c.step_index_ = static_cast<long>(depth);
  c.ring_head_ = 0;
  c.states_.assign(static_cast<std::size_t>(c.n_) * c.slots_ * c.s_, 0.0);
  c.weights_.resize(static_cast<std::size_t>(c.n_));

  double wsum = 0.0;
  for (int i = 0; i < c.n_; ++i) {
    if (histories[static_cast<std::size_t>(i)].size() != depth)
      throw std::invalid_argument("ParticleCloud::from_state: ragged histories");
    if (!(weights[static_cast<std::size_t>(i)] >= 0.0))
      throw std::invalid_argument("ParticleCloud::from_state: negative weight");
    wsum += weights[static_cast<std::size_t>(i)];
    for (std::size_t lag = 0; lag < depth; ++lag) {
      const Vec& v = histories[static_cast<std::size_t>(i)][lag];
      if (v.size() != s) throw std::invalid_argument("ParticleCloud::from_state: ragged dimensions");
      double* p = c.slot_ptr(i, c.ring_slot(static_cast<int>(lag)));
      for (int d = 0; d < s; ++d) p[d] = v[d];
    }
  }
  if (!(wsum > 0.0)) throw std::invalid_argument("ParticleCloud::from_state: weights sum to zero");
  for (int i = 0; i < c.n_; ++i)
    c.weights_[static_cast<std::size_t>(i)] = weights[static_cast<std::size_t>(i)] / wsum;
  return c;
}

void ParticleCloud::push_states(const std::vector<double>& next) {
  ring_head_ = (ring_head_ + 1) % slots_;
  for (int i = 0; i < n_; ++i) {
    const double* src = next.data() + static_cast<std::size_t>(i) * s_;
    std::copy(src, src + s_, states_.data() + (static_cast<std::size_t>(i) * slots_ + ring_head_) * s_);
  }
  history_depth_ = std::min(history_depth_ + 1, slots_);
}

double ParticleCloud::ess() const {
  double sq = 0.0;
  for (double w : weights_) sq += w * w;
  return 1.0 / sq;
}

void ParticleCloud::residual_resample(Rng& rng) {
  const int n = n_;
  std::vector<int> picks;
  picks.reserve(static_cast<std::size_t>(n));
  std::vector<double> residual(static_cast<std::size_t>(n));
  double residual_total = 0.0;
  for (int i = 0; i < n; ++i) {
    const double scaled = weights_[static_cast<std::size_t>(i)] * n;
    const int copies = static_cast<int>(std::floor(scaled));
    for (int c = 0; c < copies; ++c) picks.push_back(i);
    residual[static_cast<std::size_t>(i)] = scaled - copies;
    residual_total += residual[static_cast<std::size_t>(i)];
  }
  while (static_cast<int>(picks.size()) < n) {
    double u = rng.u01() * residual_total;
    int chosen = n - 1;
    for (int i = 0; i < n; ++i) {
      u -= residual[static_cast<std::size_t>(i)];
      if (u <= 0.0) {
        chosen = i;
        break;
      }
    }
    picks.push_back(chosen);
  }

  std::vector<double> old_states = states_;
  const std::size_t row = static_cast<std::size_t>(slots_) * s_;
  for (int i = 0; i < n; ++i) {
    const double* src = old_states.data() + static_cast<std::size_t>(picks[static_cast<std::size_t>(i)]) * row;
    std::copy(src, src + row, states_.data() + static_cast<std::size_t>(i) * row);
  }
  std::fill(weights_.begin(), weights_.end(), 1.0 / n);
  ++resample_count_;
}

void ParticleCloud::reseed_uniform(const SupportBox& box, Rng& rng, const double* sd) {
  // Prices are redrawn uniformly on the box; an unbounded side is first
  // clipped 20 proposal standard deviations beyond the previous cloud's
  // center of mass so the draw stays proper.
  std::vector<double> next(static_cast<std::size_t>(n_) * s_);
  for (int d = 0; d < s_; ++d) {
    double ref = 0.0;
    for (int i = 0; i < n_; ++i) ref += slot_ptr(i, ring_slot(0))[d];
    ref /= n_;
    double llo = box.log_lo(d), lhi = box.log_hi(d);
    const double cushion = 20.0 * std::max(sd[d], 1e-8);
    if (std::isinf(llo)) llo = (std::isinf(lhi) ? ref : std::min(ref, lhi)) - cushion;
    if (std::isinf(lhi)) lhi = std::max(ref, llo) + cushion;
    if (!(llo < lhi)) lhi = llo + cushion;
    const double plo = std::exp(llo), phi = std::exp(lhi);
    for (int i = 0; i < n_; ++i)
      next[static_cast<std::size_t>(i) * s_ + d] = std::log(rng.uniform(plo, phi));
  }
  push_states(next);
  std::fill(weights_.begin(), weights_.end(), 1.0 / n_);
}

namespace {
// Runs fn over [0, n) split across `threads` workers; equivalent to a plain
// loop for threads == 1. The chunking never affects results because all
// per-index randomness is counter derived.
template <class Fn>
void parallel_for(int n, int threads, Fn&& fn) {
  if (threads <= 1 || n < 64) {
    fn(0, n);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errs(static_cast<std::size_t>(threads));
  const int chunk = (n + threads - 1) / threads;
  for (int t = 0; t < threads; ++t) {
    const int b = t * chunk, e = std::min(n, b + chunk);
    if (b >= e) break;
    pool.emplace_back([&fn, &errs, t, b, e] {
      try {
        fn(b, e);
      } catch (...) {
        errs[static_cast<std::size_t>(t)] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& err : errs)
    if (err) std::rethrow_exception(err);
}
}  // namespace

FilterStepOutput ParticleCloud::step(const Mat& sigma_pf, const SupportBox& box, double dt,
                                     const StateModel& model, int threads) {
  if (box.dim() != s_) throw std::invalid_argument("ParticleCloud::step: box dimension mismatch");
  const Mat cov = transition_variance(model, sigma_pf, dt);
  double sd[kMaxDim];
  for (int d = 0; d < s_; ++d) {
    if (!(cov(d, d) > 0.0))
      throw std::invalid_argument("ParticleCloud::step: transition variance must be positive");
    sd[d] = std::sqrt(cov(d, d));
  }

  const long j = ++step_index_;
  FilterStepOutput out;
  std::vector<double> next(static_cast<std::size_t>(n_) * s_);
  std::vector<double> unnorm(static_cast<std::size_t>(n_));

  const int nthreads = std::clamp(threads, 1, kMaxThreads);
  const int head = ring_slot(0);

  if (s_ == 1) {
    const double sd0 = sd[0];
    const double llo = box.log_lo(0), lhi = box.log_hi(0);
    parallel_for(n_, nthreads, [&](int begin, int end) {
      for (int i = begin; i < end; ++i) {
        const double m = slot_ptr(i, head)[0];
        const double za = std::isinf(llo) ? -kInf : (llo - m) / sd0;
        const double zb = std::isinf(lhi) ? kInf : (lhi - m) / sd0;
        StdTruncated tn(za, zb);
        unnorm[static_cast<std::size_t>(i)] = weights_[static_cast<std::size_t>(i)] * tn.prob();
        Rng prng = derive_rng(seed_, "pf.step", static_cast<std::uint64_t>(j),
                              static_cast<std::uint64_t>(i));
        double z;
        try {
          z = tn.sample(prng);
        } catch (const ZeroProbabilityBox&) {
          // Weight is zero anyway; park the particle inside the box.
          const double a = std::isinf(za) ? zb - 1.0 : za;
          const double b = std::isinf(zb) ? za + 1.0 : zb;
          z = clamp_interior(0.5 * (a + b), za, zb);
        }
        next[static_cast<std::size_t>(i)] = m + sd0 * z;
      }
    });
  } else {
    parallel_for(n_, nthreads, [&](int begin, int end) {
      for (int i = begin; i < end; ++i) {
        TruncatedNormalSpec spec;
        spec.mean = Vec(s_);
        const double* p = slot_ptr(i, head);
        for (int d = 0; d < s_; ++d) spec.mean[d] = p[d];
        spec.cov = cov;
        spec.box = box;
        unnorm[static_cast<std::size_t>(i)] =
            weights_[static_cast<std::size_t>(i)] * rect_prob(spec);
        Rng prng = derive_rng(seed_, "pf.step", static_cast<std::uint64_t>(j),
                              static_cast<std::uint64_t>(i));
        Vec drawn;
        try {
          drawn = sample(spec, prng);
        } catch (const ZeroProbabilityBox&) {
          drawn = Vec(s_);
          for (int d = 0; d < s_; ++d) {
            const double a = box.log_lo(d), b = box.log_hi(d);
            const double fa = std::isinf(a) ? (std::isinf(b) ? spec.mean[d] : b) - 1.0 : a;
            const double fb = std::isinf(b) ? fa + 2.0 : b;
            drawn[d] = 0.5 * (fa + fb);
          }
        }
        for (int d = 0; d < s_; ++d) next[static_cast<std::size_t>(i) * s_ + d] = drawn[d];
      }
    });
  }

  double total = 0.0;
  for (double w : unnorm) total += w;
  out.predictive_likelihood = total;

  if (!(total >= kUnderflowTotal)) {
    out.diverged = true;
    Rng rng = derive_rng(seed_, "pf.recover", static_cast<std::uint64_t>(j));
    reseed_uniform(box, rng, sd);
    out.ess = static_cast<double>(n_);
    return out;
  }

  for (int i = 0; i < n_; ++i)
    weights_[static_cast<std::size_t>(i)] = unnorm[static_cast<std::size_t>(i)] / total;
  push_states(next);
  out.ess = ess();

  if (out.ess < ess_c_ * n_) {
    Rng rng = derive_rng(seed_, "pf.resample", static_cast<std::uint64_t>(j));
    residual_resample(rng);
    out.resampled = true;
  }
  return out;
}

}  // namespace spotvol
