#pragma once

#include "spotvol/support.hpp"
#include "spotvol/truncnorm.hpp"

#include <cstdint>
#include <vector>

namespace spotvol {

struct FilterStepOutput {
  double predictive_likelihood = 0.0;  // sum of unnormalized weights
  double ess = 0.0;                    // effective sample size before any resampling
  bool resampled = false;
  bool diverged = false;
};

// Particle cloud for the optimal-proposal filter. Each particle keeps a ring
// of its last (lag_capacity + 1) states so lagged increment statistics can be
// formed without a separate smoother; rings travel with particles through
// resampling.
//
// Proposal and weight per step: with previous state x and transition
// covariance C, the new state is drawn from N(x, C) truncated to the log of
// the observation's support box, and the unnormalized weight is the previous
// weight times the Gaussian mass of the box. When the total mass underflows
// (a price jump no particle can explain), the cloud is reseeded uniformly on
// the current box with flat weights and the step is flagged as diverged.
//
// Every draw comes from a stream derived from (seed, purpose, step, particle),
// so results are bit-identical for any `threads` value.
class ParticleCloud {
 public:
  static ParticleCloud init(const SupportBox& first_box, int n, std::uint64_t seed,
                            int lag_capacity = 1, double ess_threshold_c = 0.2);

  // Test-support constructor from explicit states: histories[i] lists particle
  // i's states newest first, all of equal length <= lag_capacity + 1.
  static ParticleCloud from_state(const std::vector<std::vector<Vec>>& histories,
                                  const std::vector<double>& weights, std::uint64_t seed,
                                  double ess_threshold_c = 0.2);

  FilterStepOutput step(const Mat& sigma_pf, const SupportBox& box, double dt,
                        const StateModel& model, int threads = 1);

  double ess() const;
  void residual_resample(Rng& rng);

  int size() const { return n_; }
  int dim() const { return s_; }
  int lag_capacity() const { return lag_cap_; }
  // Number of distinct states available per particle (capped at lag_capacity+1).
  int history_depth() const { return history_depth_; }
  long step_index() const { return step_index_; }
  int resample_count() const { return resample_count_; }
  double ess_threshold_c() const { return ess_c_; }

  double weight(int i) const { return weights_[static_cast<std::size_t>(i)]; }
  // State of particle i, `lag_back` pushes ago (0 = current).
  Vec x(int i, int lag_back = 0) const;

 private:
  ParticleCloud() = default;
  double* slot_ptr(int i, int slot);
  const double* slot_ptr(int i, int slot) const;
  int ring_slot(int lag_back) const;
  void push_states(const std::vector<double>& next);  // n_*s_ packed values
  void reseed_uniform(const SupportBox& box, Rng& rng, const double* sd);

  int n_ = 0, s_ = 0, lag_cap_ = 1;
  std::uint64_t seed_ = 0;
  double ess_c_ = 0.2;
  long step_index_ = 1;
  int history_depth_ = 1;
  int ring_head_ = 0;
  int slots_ = 2;
  std::vector<double> states_;  // [particle][slot][dim]
  std::vector<double> weights_;
  int resample_count_ = 0;
};

}  // namespace spotvol
