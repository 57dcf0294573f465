#include "spotvol/seq_em.hpp"

#include <cmath>
#include <stdexcept>

namespace spotvol {

namespace {
Mat weighted_increment_moment(const ParticleCloud& cloud, int k_lag) {
  if (k_lag < 1) throw std::invalid_argument("breve_sigma: lag must be >= 1");
  if (cloud.history_depth() < k_lag + 1)
    throw std::invalid_argument("breve_sigma: cloud history is shorter than the requested lag");
  const int s = cloud.dim();
  Mat m = Mat::Zero(s, s);
  for (int i = 0; i < cloud.size(); ++i) {
    const Vec d = cloud.x(i, 0) - cloud.x(i, k_lag);
    m.noalias() += cloud.weight(i) * (d * d.transpose());
  }
  return m;
}
}  // namespace

Mat breve_sigma(const ParticleCloud& cloud, int k_lag) {
  Mat m = weighted_increment_moment(cloud, k_lag);
  return Mat(m / static_cast<double>(k_lag));
}

Mat breve_sigma_clock(const ParticleCloud& cloud, int k_lag, double dt_k) {
  if (!(dt_k > 0.0))
    throw std::invalid_argument("breve_sigma_clock: elapsed time must be > 0");
  Mat m = weighted_increment_moment(cloud, k_lag);
  return Mat(m / dt_k);
}

VolEstimatorState::VolEstimatorState(int dim, StepPolicy policy)
    : dim_(dim), policy_(policy) {
  if (dim < 1 || dim > kMaxDim)
    throw std::invalid_argument("VolEstimatorState: dim must be in [1,4]");
  if (const auto* c = std::get_if<ConstantTarget>(&policy_)) {
    if (!(c->gamma > 0.0 && c->gamma <= 1.0))
      throw std::invalid_argument("VolEstimatorState: gamma must be in (0,1]");
    if (!(c->lambda0 > 0.0))
      throw std::invalid_argument("VolEstimatorState: lambda0 must be > 0");
  } else {
    const auto& f = std::get<FixedStep>(policy_);
    if (!(f.lambda > 0.0 && f.lambda <= 1.0))
      throw std::invalid_argument("VolEstimatorState: lambda must be in (0,1]");
  }
}

void VolEstimatorState::seed(const Mat& sigma2) {
  if (initialized_) throw std::logic_error("VolEstimatorState::seed: already initialized");
  if (sigma2.rows() != dim_ || sigma2.cols() != dim_)
    throw std::invalid_argument("VolEstimatorState::seed: dimension mismatch");
  for (int i = 0; i < dim_; ++i)
    if (!(sigma2(i, i) >= 0.0))
      throw std::invalid_argument("VolEstimatorState::seed: negative diagonal");
  sigma_ = sigma2;
  initialized_ = true;
}

const Mat& VolEstimatorState::sigma() const {
  if (!initialized_) throw std::logic_error("VolEstimatorState: no update absorbed yet");
  return sigma_;
}

void VolEstimatorState::update(const Mat& breve) {
  if (breve.rows() != dim_ || breve.cols() != dim_)
    throw std::invalid_argument("VolEstimatorState::update: dimension mismatch");
  for (int i = 0; i < dim_; ++i) {
    if (!(breve(i, i) >= 0.0))
      throw std::invalid_argument("VolEstimatorState::update: negative diagonal");
    for (int j = i + 1; j < dim_; ++j)
      if (breve(i, j) != breve(j, i))
        throw std::invalid_argument("VolEstimatorState::update: asymmetric input");
  }
  if (!initialized_) {
    sigma_ = breve;
    initialized_ = true;
    j_ = 2;
    return;
  }
  ++j_;
  double lambda;
  if (const auto* c = std::get_if<ConstantTarget>(&policy_)) {
    lambda = c->lambda0 * std::pow(static_cast<double>(j_ - 1), -c->gamma);
  } else {
    lambda = std::get<FixedStep>(policy_).lambda;
  }
  if (!(lambda > 0.0 && lambda <= 1.0))
    throw std::domain_error("VolEstimatorState::update: step size left (0,1]");
  sigma_ = (1.0 - lambda) * sigma_ + lambda * breve;
}

DurationState::DurationState(double lambda) : lambda_(lambda) {
  if (!(lambda > 0.0 && lambda < 1.0))
    throw std::invalid_argument("DurationState: lambda must be in (0,1)");
}

void DurationState::update(double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("DurationState::update: duration must be > 0");
  if (!initialized_) {
    mean_ = dt;
    initialized_ = true;
    return;
  }
  mean_ = (1.0 - lambda_) * mean_ + lambda_ * dt;
}

double DurationState::mean_duration() const {
  if (!initialized_) throw std::logic_error("DurationState: no duration absorbed yet");
  return mean_;
}

Mat alt_clock_estimate(const Mat& sigma_txn, double mean_duration) {
  if (!(mean_duration > 0.0))
    throw std::invalid_argument("alt_clock_estimate: mean duration must be > 0");
  return Mat(sigma_txn / mean_duration);
}

}  // namespace spotvol
