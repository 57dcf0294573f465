#include "spotvol/pipeline.hpp"

#include "spotvol/simulator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

namespace spotvol {

namespace {

constexpr struct {
  EstimatorMode mode;
  const char* name;
} kModeNames[] = {
    {EstimatorMode::ConstGamma, "const-gamma"},
    {EstimatorMode::TvLambda, "tv-lambda"},
    {EstimatorMode::TvSages, "tv-sages"},
    {EstimatorMode::Clock, "clock"},
    {EstimatorMode::ClockAlt, "clock-alt"},
    {EstimatorMode::BenchmarkConst, "benchmark-const"},
    {EstimatorMode::BenchmarkTv, "benchmark-tv"},
    {EstimatorMode::Oracle, "oracle"},
};

bool is_filter_mode(EstimatorMode m) {
  switch (m) {
    case EstimatorMode::ConstGamma:
    case EstimatorMode::TvLambda:
    case EstimatorMode::TvSages:
    case EstimatorMode::Clock:
    case EstimatorMode::ClockAlt:
      return true;
    default:
      return false;
  }
}

bool is_benchmark_mode(EstimatorMode m) {
  return m == EstimatorMode::BenchmarkConst || m == EstimatorMode::BenchmarkTv;
}

Mat mat1(double v) {
  Mat m(1, 1);
  m(0, 0) = v;
  return m;
}

// The initial cloud needs a proper box; an unbounded side (possible for the
// extreme order-book cells) is clipped a few tick widths out from the trade.
SupportBox bound_for_init(const SupportBox& box, double price, double tick) {
  if (box.bounded()) return box;
  Interval iv = box.axis(0);
  const double w = 10.0 * std::max(tick, 1e-12);
  if (!(iv.lo > 0.0)) iv.lo = std::max(price - w, 0.5 * price);
  if (std::isinf(iv.hi)) iv.hi = price + w;
  if (!(iv.lo < iv.hi)) iv.lo = 0.5 * iv.hi;
  return SupportBox(iv);
}

}  // namespace

const char* estimator_mode_name(EstimatorMode mode) {
  for (const auto& e : kModeNames)
    if (e.mode == mode) return e.name;
  throw std::logic_error("estimator_mode_name: unknown mode");
}

std::optional<EstimatorMode> parse_estimator_mode(const std::string& name) {
  for (const auto& e : kModeNames)
    if (name == e.name) return e.mode;
  return std::nullopt;
}

Pipeline::Pipeline(const NoiseConfig& noise, const FilterConfig& fc, const EstimatorConfig& ec,
                   bool collect_timing)
    : fc_(fc), ec_(ec), collect_timing_(collect_timing), builder_(noise) {
  if (fc_.n_particles < 2) throw std::invalid_argument("Pipeline: need at least 2 particles");
  if (fc_.k_lag < 1) throw std::invalid_argument("Pipeline: lag must be >= 1");
  state_model_.mode =
      ec_.mode == EstimatorMode::Clock ? TimeMode::ClockTime : TimeMode::TransactionTime;

  const bool fixed = ec_.lambda.has_value();
  if ((ec_.mode == EstimatorMode::TvLambda || ec_.mode == EstimatorMode::BenchmarkTv) && !fixed)
    throw std::invalid_argument("Pipeline: fixed-step mode needs a step size");

  switch (ec_.mode) {
    case EstimatorMode::ConstGamma:
      vol_.emplace(1, ConstantTarget{ec_.gamma, ec_.lambda0});
      break;
    case EstimatorMode::TvLambda:
      vol_.emplace(1, FixedStep{*ec_.lambda});
      break;
    case EstimatorMode::Clock:
    case EstimatorMode::ClockAlt:
      if (fixed)
        vol_.emplace(1, FixedStep{*ec_.lambda});
      else
        vol_.emplace(1, ConstantTarget{ec_.gamma, ec_.lambda0});
      if (ec_.mode == EstimatorMode::ClockAlt) duration_.emplace(ec_.lambda_dur);
      break;
    case EstimatorMode::TvSages: {
      SagesConfig cfg;
      cfg.lambdas = ec_.sages_lambdas.empty() ? sages_default_grid(15, 0.05, 0.00005)
                                              : ec_.sages_lambdas;
      cfg.kappas = ec_.sages_kappas;
      sages_.emplace(cfg);
      break;
    }
    case EstimatorMode::BenchmarkConst:
      bench_.emplace(ConstantTarget{1.0, 1.0}, ec_.sigma2_init);
      break;
    case EstimatorMode::BenchmarkTv:
      bench_.emplace(FixedStep{*ec_.lambda}, ec_.sigma2_init);
      break;
    case EstimatorMode::Oracle:
      oracle_.emplace(ec_.gamma);
      break;
  }

  if (is_filter_mode(ec_.mode)) {
    if (!ec_.sigma2_init || !(*ec_.sigma2_init > 0.0))
      throw std::invalid_argument("Pipeline: filter modes need a positive initial variance");
    if (vol_) vol_->seed(mat1(*ec_.sigma2_init));
    if (sages_) sages_->seed(*ec_.sigma2_init);
    recent_times_.reserve(static_cast<std::size_t>(fc_.k_lag) + 1);
  }
}

double Pipeline::propagation_sigma2() const {
  if (sages_) return sages_->aggregate();
  return vol_->sigma()(0, 0);
}

double Pipeline::sigma2_hat() const {
  switch (ec_.mode) {
    case EstimatorMode::BenchmarkConst:
    case EstimatorMode::BenchmarkTv:
      return bench_->sigma_b();
    case EstimatorMode::Oracle:
      return oracle_->sigma_opt();
    case EstimatorMode::TvSages:
      return sages_->aggregate();
    default:
      return vol_->sigma()(0, 0);
  }
}

std::optional<StepRecord> Pipeline::push_filtered(const TickObservation& tick, StepRecord rec) {
  const SupportBox box = builder_.box_for(tick);
  if (!cloud_) {
    const SupportBox first = bound_for_init(box, tick.price, builder_.config().tick);
    cloud_.emplace(ParticleCloud::init(first, fc_.n_particles, fc_.seed, fc_.k_lag, fc_.ess_c));
    recent_times_.push_back(tick.time);
    return std::nullopt;
  }

  const double dt = tick.time - recent_times_.back();
  const bool clock = state_model_.mode == TimeMode::ClockTime || duration_.has_value();
  if (clock && !(dt > 0.0))
    throw std::invalid_argument(
        "Pipeline: clock estimation needs strictly increasing timestamps; despread first");

  const FilterStepOutput out =
      cloud_->step(mat1(propagation_sigma2()), box, dt, state_model_, fc_.threads);
  rec.ess = out.ess;
  rec.resampled = out.resampled;
  rec.diverged = out.diverged;
  if (out.resampled) ++stats_.resamples;
  if (out.diverged) ++stats_.divergences;

  recent_times_.push_back(tick.time);
  if (recent_times_.size() > static_cast<std::size_t>(fc_.k_lag) + 1)
    recent_times_.erase(recent_times_.begin());

  const int k_eff = std::min(fc_.k_lag, cloud_->history_depth() - 1);
  double breve;
  if (state_model_.mode == TimeMode::ClockTime) {
    const double dt_k =
        recent_times_.back() - recent_times_[recent_times_.size() - 1 - static_cast<std::size_t>(k_eff)];
    breve = breve_sigma_clock(*cloud_, k_eff, dt_k)(0, 0);
  } else {
    breve = breve_sigma(*cloud_, k_eff)(0, 0);
  }
  rec.sigma2_breve = breve;

  // A diverged step's pseudo-observation measures the recovery reseed, not
  // the latent increment; the estimator skips it.
  if (!out.diverged) {
    if (sages_)
      sages_->update(breve);
    else
      vol_->update(mat1(breve));
  }
  rec.sigma2_hat = sages_ ? sages_->aggregate() : vol_->sigma()(0, 0);

  if (duration_) {
    duration_->update(dt);
    rec.sigma2_c_hat = rec.sigma2_hat / duration_->mean_duration();
  }
  return rec;
}

std::optional<StepRecord> Pipeline::push(const TickObservation& tick, const double* truth_x) {
  using clock_type = std::chrono::steady_clock;
  const auto t_start = collect_timing_ ? clock_type::now() : clock_type::time_point{};

  if (!(tick.price > 0.0)) throw std::invalid_argument("Pipeline: price must be positive");
  ++ticks_seen_;
  ++stats_.ticks_in;

  StepRecord rec;
  rec.time = tick.time;
  rec.j = ticks_seen_;
  rec.price = tick.price;

  std::optional<StepRecord> result;
  if (is_benchmark_mode(ec_.mode)) {
    const double lp = std::log(tick.price);
    bench_->push(lp);
    if (bench_->count() >= 2) {
      const double r = lp - prev_log_price_;
      rec.sigma2_breve = r * r;
      rec.sigma2_hat = bench_->sigma_b();
      result = rec;
    }
    prev_log_price_ = lp;
  } else if (ec_.mode == EstimatorMode::Oracle) {
    if (truth_x == nullptr)
      throw std::invalid_argument("Pipeline: oracle mode needs the latent log price per tick");
    if (ticks_seen_ >= 2) {
      oracle_->update(*truth_x, prev_truth_x_);
      const double dx = *truth_x - prev_truth_x_;
      rec.sigma2_breve = dx * dx;
      rec.sigma2_hat = oracle_->sigma_opt();
      result = rec;
    }
    prev_truth_x_ = *truth_x;
  } else {
    result = push_filtered(tick, rec);
  }

  if (result) {
    ++stats_.updates;
    if (collect_timing_) {
      const auto t_end = clock_type::now();
      const double ns =
          std::chrono::duration_cast<std::chrono::duration<double, std::nano>>(t_end - t_start)
              .count();
      constexpr std::size_t kTimingCap = std::size_t{1} << 20;
      if (stats_.update_ns.size() < kTimingCap)
        stats_.update_ns.push_back(ns);
      else
        stats_.update_ns[static_cast<std::size_t>(stats_.timed_updates) % kTimingCap] = ns;
      stats_.update_ns_total += ns;
      ++stats_.timed_updates;
    }
  }
  return result;
}

RunResult run_pipeline(std::span<const TickObservation> ticks, const NoiseConfig& noise,
                       const FilterConfig& fc, const EstimatorConfig& ec,
                       std::span<const double> truth_x, bool collect_timing) {
  if (ec.mode == EstimatorMode::Oracle && truth_x.size() != ticks.size())
    throw std::invalid_argument("run_pipeline: oracle mode needs one latent value per tick");
  Pipeline p(noise, fc, ec, collect_timing);
  RunResult res;
  res.records.reserve(ticks.size());
  for (std::size_t i = 0; i < ticks.size(); ++i) {
    const double* tx = truth_x.empty() ? nullptr : &truth_x[i];
    if (auto rec = p.push(ticks[i], tx)) res.records.push_back(*rec);
  }
  res.stats = p.stats();
  return res;
}

CvResult cv_select_lambda(std::span<const TickObservation> ticks, const NoiseConfig& noise,
                          const FilterConfig& fc, const EstimatorConfig& base,
                          std::span<const double> grid) {
  if (grid.empty()) throw std::invalid_argument("cv_select_lambda: empty grid");
  if (ticks.size() < 100) throw std::invalid_argument("cv_select_lambda: need at least 100 ticks");

  CvResult res;
  res.trace.reserve(grid.size());
  bool have_best = false;
  double best = 0.0;
  for (const double lam : grid) {
    EstimatorConfig ec = base;
    ec.mode = EstimatorMode::TvLambda;
    ec.lambda = lam;
    Pipeline p(noise, fc, ec);
    double crit = 0.0;
    long pairs = 0;
    bool have_prev = false;
    double prev_hat = 0.0;
    for (const auto& t : ticks) {
      const auto rec = p.push(t);
      if (!rec || rec->diverged) continue;
      if (have_prev) {
        const double d = prev_hat - rec->sigma2_breve;
        crit += d * d;
        ++pairs;
      }
      prev_hat = rec->sigma2_hat;
      have_prev = true;
    }
    if (pairs == 0)
      throw std::runtime_error("cv_select_lambda: degenerate stream, no informative updates");
    res.trace.emplace_back(lam, crit);
    if (!have_best || crit < best || (crit == best && lam < res.lambda)) {
      have_best = true;
      best = crit;
      res.lambda = lam;
    }
  }
  return res;
}

CvResult cv_select_duration_lambda(std::span<const double> times, std::span<const double> grid) {
  if (grid.empty()) throw std::invalid_argument("cv_select_duration_lambda: empty grid");
  if (times.size() < 3)
    throw std::invalid_argument("cv_select_duration_lambda: need at least 3 timestamps");
  std::vector<double> durations;
  durations.reserve(times.size() - 1);
  for (std::size_t i = 1; i < times.size(); ++i) {
    const double dt = times[i] - times[i - 1];
    if (!(dt > 0.0))
      throw std::invalid_argument("cv_select_duration_lambda: timestamps must strictly increase");
    durations.push_back(dt);
  }

  CvResult res;
  res.trace.reserve(grid.size());
  bool have_best = false;
  double best = 0.0;
  for (const double lam : grid) {
    DurationState state(lam);
    double crit = 0.0;
    for (std::size_t i = 0; i + 1 < durations.size(); ++i) {
      state.update(durations[i]);
      const double e = state.mean_duration() - durations[i + 1];
      crit += e * e;
    }
    res.trace.emplace_back(lam, crit);
    if (!have_best || crit < best || (crit == best && lam < res.lambda)) {
      have_best = true;
      best = crit;
      res.lambda = lam;
    }
  }
  return res;
}

KappaCalibration calibrate_kappa(std::vector<double> lambdas, const KappaNullConfig& nc,
                                 const FilterConfig& fc) {
  if (lambdas.size() < 2) throw std::invalid_argument("calibrate_kappa: need at least two scales");
  for (std::size_t k = 0; k < lambdas.size(); ++k) {
    if (!(lambdas[k] > 0.0 && lambdas[k] < 1.0))
      throw std::invalid_argument("calibrate_kappa: step sizes must be in (0,1)");
    if (k > 0 && !(lambdas[k] < lambdas[k - 1]))
      throw std::invalid_argument("calibrate_kappa: step sizes must be strictly decreasing");
  }
  if (nc.runs < 200) throw std::invalid_argument("calibrate_kappa: need at least 200 runs");
  if (nc.ticks_per_run < 10) throw std::invalid_argument("calibrate_kappa: runs too short");
  if (!(nc.alpha > 0.0 && nc.alpha < 1.0))
    throw std::invalid_argument("calibrate_kappa: alpha must be in (0,1)");
  if (!(nc.sigma2_null > 0.0))
    throw std::invalid_argument("calibrate_kappa: null variance must be > 0");

  const int K = static_cast<int>(lambdas.size());
  std::vector<std::vector<double>> traj(static_cast<std::size_t>(K));

  NoiseConfig ncfg;
  ncfg.kind = NoiseConfig::Kind::SimpleDeterministic;
  ncfg.tick = nc.tick;
  const StateModel sm{TimeMode::TransactionTime};

  for (long r = 0; r < nc.runs; ++r) {
    const std::uint64_t run_seed = derive_seed(fc.seed, "kappa.run", static_cast<std::uint64_t>(r));
    PathConfig pc;
    pc.T = nc.ticks_per_run;
    pc.p0 = nc.p0;
    pc.p0_halfwidth = nc.tick / 2.0;
    pc.vol = VolCurve::constant(nc.sigma2_null);
    pc.arrivals = ArrivalModel::equispaced(1.0);
    pc.mode = TimeMode::TransactionTime;
    const LatentPath path = gen_path(pc, run_seed);
    SimNoise sn;
    sn.kind = NoiseConfig::Kind::SimpleDeterministic;
    sn.tick = nc.tick;
    const std::vector<TickObservation> ticks = apply_noise(path, sn, run_seed);

    SupportBuilder builder(ncfg);
    std::vector<VolEstimatorState> subs;
    subs.reserve(lambdas.size());
    for (const double l : lambdas) {
      subs.emplace_back(1, FixedStep{l});
      subs.back().seed(mat1(nc.sigma2_null));
    }
    std::optional<ParticleCloud> cloud;
    for (const auto& tick : ticks) {
      const SupportBox box = builder.box_for(tick);
      if (!cloud) {
        cloud.emplace(ParticleCloud::init(box, fc.n_particles, run_seed, 1, fc.ess_c));
        continue;
      }
      const FilterStepOutput out =
          cloud->step(mat1(subs.front().sigma()(0, 0)), box, 1.0, sm, fc.threads);
      if (out.diverged) continue;
      const Mat b = breve_sigma(*cloud, 1);
      for (std::size_t k = 0; k < subs.size(); ++k) {
        subs[k].update(b);
        traj[k].push_back(subs[k].sigma()(0, 0));
      }
    }
  }

  const std::size_t m = traj.front().size();
  if (m == 0) throw std::runtime_error("calibrate_kappa: no usable filter steps");

  std::vector<double> agg = traj.front();
  std::vector<double> stat(m);
  SagesConfig cfg;
  cfg.lambdas = lambdas;
  for (int k = 1; k < K; ++k) {
    const auto& tk = traj[static_cast<std::size_t>(k)];
    const double lam = lambdas[static_cast<std::size_t>(k)];
    for (std::size_t i = 0; i < m; ++i)
      stat[i] = sages_divergence(tk[i], agg[i]) / lam;
    std::vector<double> sorted = stat;
    std::size_t idx = static_cast<std::size_t>(
        std::ceil((1.0 - nc.alpha) * static_cast<double>(m)));
    idx = idx == 0 ? 0 : idx - 1;
    idx = std::min(idx, m - 1);
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(idx),
                     sorted.end());
    const double kappa = std::max(sorted[idx], 1e-12);
    cfg.kappas.push_back(kappa);
    for (std::size_t i = 0; i < m; ++i) {
      const double gamma = sages_kernel(stat[i] / kappa);
      agg[i] = 1.0 / (gamma / tk[i] + (1.0 - gamma) / agg[i]);
    }
  }
  cfg.validate();

  KappaCalibration out;
  out.config = std::move(cfg);
  out.sigma2_null = nc.sigma2_null;
  out.n_particles = fc.n_particles;
  out.samples = static_cast<long>(m);
  return out;
}

}  // namespace spotvol
