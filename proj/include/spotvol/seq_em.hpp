#pragma once

#include "spotvol/particle_filter.hpp"

#include <variant>

namespace spotvol {

// Weighted lag-k increment moment of the cloud, the per-step volatility
// pseudo-observation: sum_i w_i (x_i - x_i^(k))(x_i - x_i^(k))' / k.
Mat breve_sigma(const ParticleCloud& cloud, int k_lag = 1);

// Clock-time variant: the outer product is divided by the elapsed time dt_k
// between the tick and its k-th predecessor instead of by k.
Mat breve_sigma_clock(const ParticleCloud& cloud, int k_lag, double dt_k);

// Step-size schedules for the stochastic-approximation volatility update.
// ConstantTarget decays as lambda0 * (j-1)^(-gamma) and converges on a
// constant volatility; FixedStep tracks a time-varying one.
struct ConstantTarget {
  double gamma = 0.9;
  double lambda0 = 1.0;
};
struct FixedStep {
  double lambda = 0.01;
};
using StepPolicy = std::variant<ConstantTarget, FixedStep>;

// Running volatility estimate driven by a stream of breve matrices. The first
// update adopts its input as the base case; update j then blends with weight
// lambda_j, which must land in (0,1]. Positive semidefiniteness holds by
// convexity and is checked, not repaired.
class VolEstimatorState {
 public:
  VolEstimatorState(int dim, StepPolicy policy);

  // Installs a prior estimate before any update. The next update then blends
  // it with weight lambda_2 instead of adopting the input outright.
  void seed(const Mat& sigma2);

  void update(const Mat& breve);

  bool initialized() const { return initialized_; }
  // Index of the last absorbed pseudo-observation; 1 before any update, 2
  // after the base case.
  long step() const { return j_; }
  const Mat& sigma() const;
  const StepPolicy& policy() const { return policy_; }

 private:
  int dim_;
  StepPolicy policy_;
  Mat sigma_;
  long j_ = 1;
  bool initialized_ = false;
};

// Exponentially weighted mean transaction duration; its reciprocal estimates
// the transaction intensity. The first update adopts the duration as is.
class DurationState {
 public:
  explicit DurationState(double lambda);

  void update(double dt);

  bool initialized() const { return initialized_; }
  double mean_duration() const;
  double intensity() const { return 1.0 / mean_duration(); }

 private:
  double lambda_;
  double mean_ = 0.0;
  bool initialized_ = false;
};

// Clock-time volatility as transaction-time volatility times transaction
// intensity.
Mat alt_clock_estimate(const Mat& sigma_txn, double mean_duration);

}  // namespace spotvol
