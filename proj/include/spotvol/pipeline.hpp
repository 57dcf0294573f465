#pragma once

#include "spotvol/benchmark.hpp"
#include "spotvol/sages.hpp"
#include "spotvol/seq_em.hpp"
#include "spotvol/support.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace spotvol {

enum class EstimatorMode {
  ConstGamma,
  TvLambda,
  TvSages,
  Clock,
  ClockAlt,
  BenchmarkConst,
  BenchmarkTv,
  Oracle,
};

const char* estimator_mode_name(EstimatorMode mode);
std::optional<EstimatorMode> parse_estimator_mode(const std::string& name);

struct FilterConfig {
  int n_particles = 500;
  double ess_c = 0.2;
  int k_lag = 1;
  int threads = 1;
  std::uint64_t seed = 0;
};

struct EstimatorConfig {
  EstimatorMode mode = EstimatorMode::ConstGamma;
  double gamma = 0.9;
  double lambda0 = 1.0;
  // Fixed step size; required by tv-lambda and benchmark-tv, and switches the
  // clock modes from the decaying schedule to a fixed one when present.
  std::optional<double> lambda;
  double lambda_dur = 0.1025;
  // Prior variance fed to the filter before the first update; per transaction,
  // or per second in clock mode. Required by every filter-driven mode.
  std::optional<double> sigma2_init;
  std::vector<double> sages_lambdas;  // empty: default transaction-time grid
  std::vector<double> sages_kappas;   // exactly K-1 values for tv-sages
};

struct StepRecord {
  double time = 0.0;
  long j = 0;  // tick index, 1-based; the first emitted record has j = 2
  double price = 0.0;
  double sigma2_hat = 0.0;
  double sigma2_breve = 0.0;  // raw per-step pseudo-observation
  std::optional<double> sigma2_c_hat;  // clock-alt only, per second
  double ess = 0.0;
  bool resampled = false;
  bool diverged = false;
};

struct RunStats {
  long ticks_in = 0;
  long updates = 0;
  long resamples = 0;
  long divergences = 0;
  // Wall time per emitted record when timing is on. The sample buffer is a
  // bounded ring over the most recent updates so memory stays independent of
  // the stream length; totals cover every update.
  std::vector<double> update_ns;
  double update_ns_total = 0.0;
  long timed_updates = 0;
};

// One instrument's streaming estimation loop: support construction, the
// particle filter, and the selected estimator advanced tick by tick. Memory
// use is independent of the stream length. Univariate; multivariate clouds
// are driven through the filter interface directly.
class Pipeline {
 public:
  Pipeline(const NoiseConfig& noise, const FilterConfig& fc, const EstimatorConfig& ec,
           bool collect_timing = false);

  // Feeds one tick; emits a record from the second tick on. Oracle mode needs
  // the matching latent log price.
  std::optional<StepRecord> push(const TickObservation& tick, const double* truth_x = nullptr);

  const RunStats& stats() const { return stats_; }
  double sigma2_hat() const;  // current headline estimate
  EstimatorMode mode() const { return ec_.mode; }

 private:
  double propagation_sigma2() const;
  std::optional<StepRecord> push_filtered(const TickObservation& tick, StepRecord rec);

  FilterConfig fc_;
  EstimatorConfig ec_;
  bool collect_timing_ = false;
  SupportBuilder builder_;
  StateModel state_model_;
  std::optional<ParticleCloud> cloud_;
  std::optional<VolEstimatorState> vol_;
  std::optional<SagesState> sages_;
  std::optional<DurationState> duration_;
  std::optional<BenchState> bench_;
  std::optional<OracleState> oracle_;
  std::vector<double> recent_times_;  // newest last, at most k_lag + 1 entries
  long ticks_seen_ = 0;
  double prev_log_price_ = 0.0;
  double prev_truth_x_ = 0.0;
  RunStats stats_;
};

struct RunResult {
  std::vector<StepRecord> records;
  RunStats stats;
};

RunResult run_pipeline(std::span<const TickObservation> ticks, const NoiseConfig& noise,
                       const FilterConfig& fc, const EstimatorConfig& ec,
                       std::span<const double> truth_x = {}, bool collect_timing = false);

// Offline step-size selection: one filter pass per candidate with a shared
// seed, scored by the squared distance between the running estimate and the
// next step's pseudo-observation. Ties go to the smaller step size.
struct CvResult {
  double lambda = 0.0;
  std::vector<std::pair<double, double>> trace;  // (lambda, criterion)
};
CvResult cv_select_lambda(std::span<const TickObservation> ticks, const NoiseConfig& noise,
                          const FilterConfig& fc, const EstimatorConfig& base,
                          std::span<const double> grid);

// Duration smoothing selection: minimizes one-step-ahead prediction error of
// the mean duration over the recorded inter-trade times.
CvResult cv_select_duration_lambda(std::span<const double> times, std::span<const double> grid);

// Monte Carlo calibration of the aggregation critical values under a
// constant-volatility null with deterministic rounding. The filter runs on
// the fastest scale's feedback; each kappa is the (1 - alpha) empirical
// quantile of its stage's normalized divergence over all runs and steps,
// calibrated stage by stage so earlier kappas shape later aggregates.
struct KappaNullConfig {
  double sigma2_null = 1e-8;
  double tick = 0.01;
  double p0 = 50.0;
  long runs = 200;
  long ticks_per_run = 1000;
  double alpha = 0.25;
};

struct KappaCalibration {
  SagesConfig config;
  double sigma2_null = 0.0;
  int n_particles = 0;
  long samples = 0;  // (run, step) pairs behind each quantile
};

KappaCalibration calibrate_kappa(std::vector<double> lambdas, const KappaNullConfig& null_cfg,
                                 const FilterConfig& fc);

}  // namespace spotvol
