#pragma once

#include "spotvol/seq_em.hpp"

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace spotvol {

// Stagewise aggregation of K univariate fixed-step estimators with strictly
// decreasing step sizes. Faster estimators vet slower ones: stage k keeps the
// slower aggregate only while its divergence from estimator k stays below the
// calibrated critical value kappa_{k-1} * lambda_k.

// Aggregation weight kernel: 1 on [0, 1/6], linear to 0 at 7/6, 0 beyond.
double sages_kernel(double u);

// Kullback-Leibler-type divergence between two positive variances.
double sages_divergence(double s2, double s2_tilde);

struct SagesConfig {
  std::vector<double> lambdas;  // strictly decreasing, in (0,1)
  std::vector<double> kappas;   // size lambdas.size() - 1, strictly positive

  int K() const { return static_cast<int>(lambdas.size()); }
  void validate() const;
  // Hash over the tuple that must match between calibration and use.
  std::uint64_t config_hash(double sigma_null, int n_particles) const;
};

// One aggregation pass over the current per-estimator variances (fastest
// first). Returns the stage-K aggregate.
double sages_combine(std::span<const double> sigma2_by_scale, const SagesConfig& cfg);

// Running SAGES state: K fixed-step estimators advanced in lockstep from the
// shared per-step pseudo-observation, plus the current aggregate.
class SagesState {
 public:
  explicit SagesState(const SagesConfig& cfg);

  // Installs a common prior on every scale before any update.
  void seed(double sigma2);

  void update(double breve);

  bool initialized() const;
  double aggregate() const;
  double scale_estimate(int k) const;  // k in [0, K)
  const SagesConfig& config() const { return cfg_; }

 private:
  SagesConfig cfg_;
  std::vector<VolEstimatorState> estimators_;
  double aggregate_ = 0.0;
};

// Critical-value sidecar: a header line carrying the config hash followed by
// K-1 values, one per line.
void write_kappa_file(std::ostream& os, const SagesConfig& cfg, std::uint64_t config_hash);
std::vector<double> read_kappa_file(std::istream& is, std::uint64_t expected_hash);

// Evenly spaced step-size grid from hi down to lo (inclusive), fastest first.
std::vector<double> sages_default_grid(int K, double hi, double lo);

}  // namespace spotvol
