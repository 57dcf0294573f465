#include "spotvol/simulator.hpp"

#include "spotvol/normal.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace spotvol {

namespace {
void require_positive_curve(const VolCurve& curve, const char* who) {
  for (int i = 0; i <= 1000; ++i)
    if (!(curve(i / 1000.0) > 0.0))
      throw std::invalid_argument(std::string(who) + ": curve must stay strictly positive");
}
}  // namespace

VolCurve VolCurve::constant(double value) {
  if (!(value > 0.0)) throw std::invalid_argument("VolCurve::constant: value must be > 0");
  VolCurve c;
  c.kind_ = Kind::Constant;
  c.a_ = value;
  return c;
}

VolCurve VolCurve::piecewise_linear(std::vector<std::pair<double, double>> knots) {
  if (knots.size() < 2) throw std::invalid_argument("VolCurve::piecewise_linear: need >= 2 knots");
  for (std::size_t i = 0; i < knots.size(); ++i) {
    if (!(knots[i].second > 0.0))
      throw std::invalid_argument("VolCurve::piecewise_linear: values must be > 0");
    if (i > 0 && !(knots[i].first > knots[i - 1].first))
      throw std::invalid_argument("VolCurve::piecewise_linear: knot positions must ascend");
  }
  VolCurve c;
  c.kind_ = Kind::PiecewiseLinear;
  c.knots_ = std::move(knots);
  return c;
}

VolCurve VolCurve::sinusoid(double base, double amplitude, double cycles) {
  if (!(base > 0.0) || !(amplitude >= 0.0) || !(amplitude < base) || !(cycles > 0.0))
    throw std::invalid_argument("VolCurve::sinusoid: need 0 <= amplitude < base, cycles > 0");
  VolCurve c;
  c.kind_ = Kind::Sinusoid;
  c.a_ = base;
  c.b_ = amplitude;
  c.c_ = cycles;
  return c;
}

VolCurve VolCurve::ushape(double open, double mid, double close) {
  VolCurve c;
  c.kind_ = Kind::UShape;
  c.a_ = 2.0 * (open + close - 2.0 * mid);
  c.b_ = close - open - c.a_;
  c.c_ = open;
  require_positive_curve(c, "VolCurve::ushape");
  return c;
}

double VolCurve::operator()(double u) const {
  u = std::clamp(u, 0.0, 1.0);
  switch (kind_) {
    case Kind::Constant:
      return a_;
    case Kind::PiecewiseLinear: {
      if (u <= knots_.front().first) return knots_.front().second;
      if (u >= knots_.back().first) return knots_.back().second;
      auto it = std::upper_bound(knots_.begin(), knots_.end(), u,
                                 [](double v, const auto& k) { return v < k.first; });
      const auto& hi = *it;
      const auto& lo = *(it - 1);
      const double w = (u - lo.first) / (hi.first - lo.first);
      return lo.second + w * (hi.second - lo.second);
    }
    case Kind::Sinusoid:
      return a_ + b_ * std::sin(6.283185307179586 * c_ * u);
    case Kind::UShape:
      return (a_ * u + b_) * u + c_;
  }
  return a_;
}

ArrivalModel ArrivalModel::equispaced(double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("ArrivalModel::equispaced: dt must be > 0");
  ArrivalModel m;
  m.kind_ = Kind::Equispaced;
  m.dt_ = dt;
  return m;
}

ArrivalModel ArrivalModel::poisson(double rate) {
  if (!(rate > 0.0)) throw std::invalid_argument("ArrivalModel::poisson: rate must be > 0");
  ArrivalModel m;
  m.kind_ = Kind::Poisson;
  m.rate_ = rate;
  return m;
}

ArrivalModel ArrivalModel::inhom_poisson(VolCurve rate, double session_seconds) {
  if (!(session_seconds > 0.0))
    throw std::invalid_argument("ArrivalModel::inhom_poisson: session length must be > 0");
  require_positive_curve(rate, "ArrivalModel::inhom_poisson");
  ArrivalModel m;
  m.kind_ = Kind::InhomPoisson;
  m.rate_curve_ = std::move(rate);
  m.session_ = session_seconds;
  return m;
}

std::vector<double> ArrivalModel::times(long count, double t0, Rng& rng) const {
  if (count < 1) throw std::invalid_argument("ArrivalModel::times: count must be >= 1");
  std::vector<double> ts(static_cast<std::size_t>(count));
  ts[0] = t0;
  switch (kind_) {
    case Kind::Equispaced:
      for (long j = 1; j < count; ++j) ts[static_cast<std::size_t>(j)] = t0 + dt_ * j;
      break;
    case Kind::Poisson:
      for (long j = 1; j < count; ++j)
        ts[static_cast<std::size_t>(j)] =
            ts[static_cast<std::size_t>(j - 1)] + rng.exponential() / rate_;
      break;
    case Kind::InhomPoisson: {
      double rate_max = 0.0;
      for (int i = 0; i <= 1000; ++i) rate_max = std::max(rate_max, rate_curve_(i / 1000.0));
      double t = t0;
      for (long j = 1; j < count; ++j) {
        for (;;) {
          t += rng.exponential() / rate_max;
          const double u = (t - t0) / session_;
          if (rng.u01() * rate_max <= rate_curve_(u)) break;
        }
        ts[static_cast<std::size_t>(j)] = t;
      }
      break;
    }
  }
  return ts;
}

LatentPath gen_path(const PathConfig& cfg, std::uint64_t seed) {
  if (cfg.T < 2) throw std::invalid_argument("gen_path: need T >= 2");
  if (!(cfg.p0 > 0.0) || cfg.p0_halfwidth < 0.0 || !(cfg.p0 - cfg.p0_halfwidth > 0.0))
    throw std::invalid_argument("gen_path: initial price window must be positive");
  require_positive_curve(cfg.vol, "gen_path");

  LatentPath path;
  Rng arrival_rng = derive_rng(seed, "sim.arrivals");
  path.times = cfg.arrivals.times(cfg.T, cfg.t0, arrival_rng);

  path.x.resize(static_cast<std::size_t>(cfg.T));
  Rng x0_rng = derive_rng(seed, "sim.x0");
  path.x[0] = cfg.p0_halfwidth > 0.0
                  ? std::log(x0_rng.uniform(cfg.p0 - cfg.p0_halfwidth, cfg.p0 + cfg.p0_halfwidth))
                  : std::log(cfg.p0);

  Rng inc_rng = derive_rng(seed, "sim.path");
  const double span = path.times.back() - path.times.front();
  for (long j = 1; j < cfg.T; ++j) {
    double var;
    if (cfg.mode == TimeMode::TransactionTime) {
      var = cfg.vol(static_cast<double>(j) / static_cast<double>(cfg.T - 1));
    } else {
      const double dt = path.times[static_cast<std::size_t>(j)] -
                        path.times[static_cast<std::size_t>(j - 1)];
      const double u = span > 0.0 ? (path.times[static_cast<std::size_t>(j)] - path.times.front()) / span
                                  : 0.0;
      var = dt * cfg.vol(u);
    }
    path.x[static_cast<std::size_t>(j)] =
        path.x[static_cast<std::size_t>(j - 1)] + std::sqrt(var) * draw_normal(inc_rng);
  }
  return path;
}

std::vector<TickObservation> apply_noise(const LatentPath& path, const SimNoise& noise,
                                         std::uint64_t seed) {
  if (path.x.size() != path.times.size() || path.x.empty())
    throw std::invalid_argument("apply_noise: malformed latent path");
  if (!(noise.tick > 0.0)) throw std::invalid_argument("apply_noise: tick must be > 0");
  if (noise.book_depth < 1) throw std::invalid_argument("apply_noise: book depth must be >= 1");

  const double tick = noise.tick;
  std::vector<TickObservation> out(path.x.size());
  Rng rng = derive_rng(seed, "sim.noise");
  double prev_trade = 0.0;
  for (std::size_t j = 0; j < path.x.size(); ++j) {
    const double p = std::exp(path.x[j]);
    TickObservation& obs = out[j];
    obs.time = path.times[j];
    obs.exchange = "SIM";
    switch (noise.kind) {
      case NoiseConfig::Kind::SimpleDeterministic:
      case NoiseConfig::Kind::SpreadEstimate:
        obs.price = std::round(p / tick) * tick;
        break;
      case NoiseConfig::Kind::SimpleStochastic: {
        const double base = std::floor(p / tick);
        obs.price = (rng.u01() < 0.5 ? base : base + 1.0) * tick;
        break;
      }
      case NoiseConfig::Kind::OrderBook: {
        const double center = j == 0 ? std::round(p / tick) * tick : prev_trade;
        obs.book_levels.resize(static_cast<std::size_t>(2 * noise.book_depth + 1));
        double best = 0.0, best_dist = 0.0;
        for (int k = -noise.book_depth; k <= noise.book_depth; ++k) {
          const double level = center + k * tick;
          obs.book_levels[static_cast<std::size_t>(k + noise.book_depth)] = level;
          const double dist = std::abs(level - p);
          if (k == -noise.book_depth || dist < best_dist) {
            best = level;
            best_dist = dist;
          }
        }
        obs.price = best;
        break;
      }
      case NoiseConfig::Kind::MarketMakerQuotes: {
        const double bid = std::floor(p / tick) * tick;
        const double ask = bid + tick;
        obs.bid = bid;
        obs.ask = ask;
        obs.price = (p - bid <= ask - p) ? bid : ask;
        break;
      }
    }
    if (!(obs.price > 0.0))
      throw std::invalid_argument("apply_noise: rounded price fell to or below zero");
    prev_trade = obs.price;
  }
  return out;
}

std::vector<double> apply_additive_noise(const LatentPath& path, double eta, std::uint64_t seed) {
  if (!(eta >= 0.0)) throw std::invalid_argument("apply_additive_noise: eta must be >= 0");
  Rng rng = derive_rng(seed, "sim.addnoise");
  std::vector<double> prices(path.x.size());
  for (std::size_t j = 0; j < path.x.size(); ++j)
    prices[j] = std::exp(path.x[j] + eta * draw_normal(rng));
  return prices;
}

namespace {
std::vector<double> log_returns(std::span<const double> prices) {
  if (prices.size() < 2) throw std::invalid_argument("returns: need at least 2 prices");
  std::vector<double> r(prices.size() - 1);
  for (std::size_t i = 0; i + 1 < prices.size(); ++i) {
    if (!(prices[i] > 0.0) || !(prices[i + 1] > 0.0))
      throw std::invalid_argument("returns: prices must be > 0");
    r[i] = std::log(prices[i + 1]) - std::log(prices[i]);
  }
  return r;
}
}  // namespace

std::vector<double> return_acf(std::span<const double> prices, int max_lag) {
  if (max_lag < 1) throw std::invalid_argument("return_acf: max_lag must be >= 1");
  if (prices.size() < static_cast<std::size_t>(max_lag) + 2)
    throw std::invalid_argument("return_acf: series too short for requested lag");
  const std::vector<double> r = log_returns(prices);
  const std::size_t n = r.size();
  double mean = 0.0;
  for (double v : r) mean += v;
  mean /= static_cast<double>(n);
  double c0 = 0.0;
  for (double v : r) c0 += (v - mean) * (v - mean);
  if (!(c0 > 0.0)) throw std::domain_error("return_acf: constant price series");
  std::vector<double> acf(static_cast<std::size_t>(max_lag));
  for (int lag = 1; lag <= max_lag; ++lag) {
    double c = 0.0;
    for (std::size_t i = 0; i + lag < n; ++i)
      c += (r[i] - mean) * (r[i + static_cast<std::size_t>(lag)] - mean);
    acf[static_cast<std::size_t>(lag - 1)] = c / c0;
  }
  return acf;
}

std::vector<double> return_pacf(std::span<const double> prices, int max_lag) {
  // Durbin-Levinson from the ACF.
  const std::vector<double> acf = return_acf(prices, max_lag);
  std::vector<double> pacf(static_cast<std::size_t>(max_lag));
  std::vector<double> phi(static_cast<std::size_t>(max_lag) + 1, 0.0);
  std::vector<double> phi_prev(static_cast<std::size_t>(max_lag) + 1, 0.0);
  double v = 1.0;
  for (int k = 1; k <= max_lag; ++k) {
    double num = acf[static_cast<std::size_t>(k - 1)];
    for (int j = 1; j < k; ++j)
      num -= phi_prev[static_cast<std::size_t>(j)] * acf[static_cast<std::size_t>(k - 1 - j)];
    const double a = num / v;
    phi[static_cast<std::size_t>(k)] = a;
    for (int j = 1; j < k; ++j)
      phi[static_cast<std::size_t>(j)] = phi_prev[static_cast<std::size_t>(j)] -
                                         a * phi_prev[static_cast<std::size_t>(k - j)];
    v *= (1.0 - a * a);
    pacf[static_cast<std::size_t>(k - 1)] = a;
    phi_prev = phi;
  }
  return pacf;
}

double zero_return_fraction(std::span<const double> prices) {
  if (prices.size() < 2) throw std::invalid_argument("zero_return_fraction: need at least 2 prices");
  std::size_t zeros = 0;
  for (std::size_t i = 0; i + 1 < prices.size(); ++i)
    if (prices[i + 1] == prices[i]) ++zeros;
  return static_cast<double>(zeros) / static_cast<double>(prices.size() - 1);
}

}  // namespace spotvol
