#pragma once

#include "spotvol/seq_em.hpp"

#include <optional>
#include <span>
#include <vector>

namespace spotvol {

// Recursive benchmark estimator under additive i.i.d. log-price noise. Each
// squared return overstates the latent variance by 2*eta^2, estimated from
// the first-order return autocovariance and subtracted with a nonnegativity
// clamp on the correction; the estimate itself is reported unclamped and a
// diagnostic counter tracks excursions below zero.
class BenchState {
 public:
  explicit BenchState(StepPolicy policy, std::optional<double> sigma_init = std::nullopt);

  void push(double log_price);

  long count() const { return count_; }
  double sigma_b() const;      // needs count >= 2
  double eta2() const;         // 0 until the third observation
  double correction() const;   // max(0, 2 * eta2)
  long negative_updates() const { return negative_updates_; }

 private:
  double step_size(long j) const;

  StepPolicy policy_;
  std::optional<double> sigma_init_;
  long count_ = 0;
  double prev_log_ = 0.0;
  double prev_return_ = 0.0;
  double sigma_b_ = 0.0;
  double eta2_ = 0.0;
  long negative_updates_ = 0;
};

// Step-size selection for the time-varying benchmark: minimizes the
// prediction criterion against the squared return two ticks ahead; ties go to
// the smaller step size.
struct BenchCvResult {
  double lambda = 0.0;
  std::vector<std::pair<double, double>> trace;  // (lambda, criterion)
};
BenchCvResult bench_cv(std::span<const double> prices, std::span<const double> grid);

// Infeasible reference estimator fed with the true latent log prices;
// available in simulation only.
class OracleState {
 public:
  explicit OracleState(double gamma);

  void update(double x_j, double x_prev);

  long count() const { return j_; }
  double sigma_opt() const;

 private:
  double gamma_;
  long j_ = 1;
  double sigma_ = 0.0;
};

}  // namespace spotvol
