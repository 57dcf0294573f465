#include "spotvol/benchmark.hpp"

#include <cmath>
#include <stdexcept>

namespace spotvol {

BenchState::BenchState(StepPolicy policy, std::optional<double> sigma_init)
    : policy_(policy), sigma_init_(sigma_init) {
  if (const auto* c = std::get_if<ConstantTarget>(&policy_)) {
    if (!(c->gamma > 0.0 && c->gamma <= 1.0) || !(c->lambda0 > 0.0))
      throw std::invalid_argument("BenchState: bad decay policy");
  } else if (const auto& f = std::get<FixedStep>(policy_); !(f.lambda > 0.0 && f.lambda < 1.0)) {
    throw std::invalid_argument("BenchState: lambda must be in (0,1)");
  }
}

double BenchState::step_size(long j) const {
  if (const auto* c = std::get_if<ConstantTarget>(&policy_))
    return c->lambda0 * std::pow(static_cast<double>(j - 1), -c->gamma);
  return std::get<FixedStep>(policy_).lambda;
}

void BenchState::push(double log_price) {
  if (!std::isfinite(log_price)) throw std::invalid_argument("BenchState::push: non-finite price");
  ++count_;
  if (count_ == 1) {
    prev_log_ = log_price;
    return;
  }
  const double r = log_price - prev_log_;
  prev_log_ = log_price;
  if (count_ == 2) {
    eta2_ = 0.0;
    const double lam = step_size(2);
    sigma_b_ = sigma_init_ ? (1.0 - lam) * *sigma_init_ + lam * r * r : r * r;
    prev_return_ = r;
    return;
  }
  // The noise recursion starts one observation later than the volatility
  // recursion, hence the 1/(j-2) step.
  const long j = count_;
  const double eta_step = 1.0 / static_cast<double>(j - 2);
  const double eta_prev = eta2_;
  eta2_ = (1.0 - eta_step) * eta2_ - eta_step * r * prev_return_;
  const double lam = step_size(j);
  sigma_b_ = (1.0 - lam) * (sigma_b_ + std::max(0.0, 2.0 * eta_prev)) + lam * r * r -
             std::max(0.0, 2.0 * eta2_);
  if (sigma_b_ < 0.0) ++negative_updates_;
  prev_return_ = r;
}

double BenchState::sigma_b() const {
  if (count_ < 2) throw std::logic_error("BenchState: needs at least two observations");
  return sigma_b_;
}

double BenchState::eta2() const {
  if (count_ < 2) throw std::logic_error("BenchState: needs at least two observations");
  return eta2_;
}

double BenchState::correction() const { return std::max(0.0, 2.0 * eta2()); }

BenchCvResult bench_cv(std::span<const double> prices, std::span<const double> grid) {
  if (prices.size() < 100) throw std::invalid_argument("bench_cv: need at least 100 ticks");
  if (grid.empty()) throw std::invalid_argument("bench_cv: empty step-size grid");
  const std::size_t T = prices.size();
  std::vector<double> log_p(T);
  for (std::size_t i = 0; i < T; ++i) {
    if (!(prices[i] > 0.0)) throw std::invalid_argument("bench_cv: prices must be > 0");
    log_p[i] = std::log(prices[i]);
  }

  BenchCvResult result;
  bool have_best = false;
  double best_crit = 0.0;
  for (double lam : grid) {
    BenchState state(FixedStep{lam});
    // predicted[j] is sigma_b + correction after tick j (1-based j from 2).
    std::vector<double> predicted;
    predicted.reserve(T);
    for (std::size_t i = 0; i < T; ++i) {
      state.push(log_p[i]);
      if (state.count() >= 2) predicted.push_back(state.sigma_b() + state.correction());
    }
    // The target for step j is the squared return two ticks ahead, so the last
    // usable j is T-2.
    double crit = 0.0;
    for (std::size_t j = 2; j + 2 <= T; ++j) {
      const double ahead = log_p[j + 1] - log_p[j];  // log y_{j+2} - log y_{j+1}, 0-based
      const double diff = predicted[j - 2] - ahead * ahead;
      crit += diff * diff;
    }
    result.trace.emplace_back(lam, crit);
    if (!have_best || crit < best_crit || (crit == best_crit && lam < result.lambda)) {
      have_best = true;
      best_crit = crit;
      result.lambda = lam;
    }
  }
  return result;
}

OracleState::OracleState(double gamma) : gamma_(gamma) {
  if (!(gamma > 0.0 && gamma <= 1.0))
    throw std::invalid_argument("OracleState: gamma must be in (0,1]");
}

void OracleState::update(double x_j, double x_prev) {
  ++j_;
  const double lam = std::pow(static_cast<double>(j_ - 1), -gamma_);
  const double dx = x_j - x_prev;
  sigma_ = (1.0 - lam) * sigma_ + lam * dx * dx;
}

double OracleState::sigma_opt() const {
  if (j_ < 2) throw std::logic_error("OracleState: no increment absorbed yet");
  return sigma_;
}

}  // namespace spotvol
