#include "spotvol/support.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace spotvol {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kGridRelTol = 1e-9;

void require_on_grid(double y, double tick, const char* who) {
  const double k = std::round(y / tick);
  if (std::abs(y - k * tick) > kGridRelTol * std::max(1.0, std::abs(y)))
    throw std::invalid_argument(std::string(who) + ": price is off the tick grid");
}
}  // namespace

SupportBox::SupportBox(std::span<const Interval> ivs) {
  if (ivs.empty() || ivs.size() > static_cast<std::size_t>(kMaxDim))
    throw std::invalid_argument("SupportBox: dimension must be in [1,4]");
  dim_ = static_cast<int>(ivs.size());
  for (int d = 0; d < dim_; ++d) {
    const Interval& iv = ivs[static_cast<std::size_t>(d)];
    if (!(iv.lo >= 0.0) || !(iv.lo < iv.hi))
      throw std::invalid_argument("SupportBox: need 0 <= lo < hi");
    ivs_[static_cast<std::size_t>(d)] = iv;
  }
}

double SupportBox::log_lo(int d) const {
  const double lo = axis(d).lo;
  return lo == 0.0 ? -kInf : std::log(lo);
}

double SupportBox::log_hi(int d) const {
  const double hi = axis(d).hi;
  return std::isinf(hi) ? kInf : std::log(hi);
}

bool SupportBox::bounded() const {
  for (int d = 0; d < dim_; ++d)
    if (ivs_[static_cast<std::size_t>(d)].lo == 0.0 ||
        std::isinf(ivs_[static_cast<std::size_t>(d)].hi))
      return false;
  return true;
}

bool SupportBox::contains(const Vec& price) const {
  if (price.size() != dim_) throw std::invalid_argument("SupportBox::contains: dimension mismatch");
  for (int d = 0; d < dim_; ++d)
    if (!ivs_[static_cast<std::size_t>(d)].contains(price[d])) return false;
  return true;
}

Interval support_simple_deterministic(double y, double tick) {
  if (!(tick > 0.0)) throw std::invalid_argument("support_simple_deterministic: tick must be > 0");
  if (!(y > 0.0)) throw std::invalid_argument("support_simple_deterministic: price must be > 0");
  require_on_grid(y, tick, "support_simple_deterministic");
  return Interval{y - 0.5 * tick, y + 0.5 * tick, true};
}

Interval support_simple_stochastic(double y, double tick) {
  if (!(tick > 0.0)) throw std::invalid_argument("support_simple_stochastic: tick must be > 0");
  if (!(y > 0.0)) throw std::invalid_argument("support_simple_stochastic: price must be > 0");
  require_on_grid(y, tick, "support_simple_stochastic");
  return Interval{std::max(0.0, y - tick), y + tick, false};
}

Interval support_order_book(double y, std::span<const double> levels) {
  if (levels.empty()) throw std::invalid_argument("support_order_book: empty level grid");
  for (std::size_t i = 0; i + 1 < levels.size(); ++i)
    if (!(levels[i] < levels[i + 1]))
      throw std::invalid_argument("support_order_book: levels must be strictly ascending");
  const double tol = kGridRelTol * std::max(1.0, std::abs(y));
  std::size_t idx = levels.size();
  for (std::size_t i = 0; i < levels.size(); ++i) {
    if (std::abs(levels[i] - y) <= tol) {
      idx = i;
      break;
    }
  }
  if (idx == levels.size())
    throw std::invalid_argument("support_order_book: price is not a quoted level");
  const double lo = idx == 0 ? 0.0 : 0.5 * (levels[idx - 1] + levels[idx]);
  const double hi = idx + 1 == levels.size() ? kInf : 0.5 * (levels[idx] + levels[idx + 1]);
  return Interval{lo, hi, true};
}

Interval support_market_maker(double y, double bid, double ask) {
  if (!(bid > 0.0) || !(ask > bid))
    throw std::invalid_argument("support_market_maker: need 0 < bid < ask");
  const double delta = 0.5 * (ask - bid);
  return Interval{std::max(0.0, y - delta), y + delta, true};
}

std::optional<SpreadSupport> support_spread_estimate(double y, double y_prev,
                                                     std::optional<double> delta_prev) {
  if (!(y > 0.0) || !(y_prev > 0.0))
    throw std::invalid_argument("support_spread_estimate: prices must be > 0");
  double delta;
  if (y != y_prev) {
    delta = 0.5 * std::abs(y - y_prev);
  } else if (delta_prev) {
    delta = *delta_prev;
  } else {
    return std::nullopt;
  }
  return SpreadSupport{delta, Interval{std::max(0.0, y - delta), y + delta, true}};
}

Mat transition_variance(const StateModel& model, const Mat& sigma, double dt) {
  if (sigma.rows() != sigma.cols() || sigma.rows() < 1 || sigma.rows() > kMaxDim)
    throw std::invalid_argument("transition_variance: sigma must be square, dim in [1,4]");
  if (model.mode == TimeMode::TransactionTime) return sigma;
  if (!(dt > 0.0))
    throw std::invalid_argument("transition_variance: clock time needs strictly increasing timestamps");
  return Mat(dt * sigma);
}

SupportBox SupportBuilder::box_for(const TickObservation& tick) {
  const double y = tick.price;
  SupportBox box;
  switch (cfg_.kind) {
    case NoiseConfig::Kind::SimpleDeterministic:
      box = SupportBox(support_simple_deterministic(y, cfg_.tick));
      break;
    case NoiseConfig::Kind::SimpleStochastic:
      box = SupportBox(support_simple_stochastic(y, cfg_.tick));
      break;
    case NoiseConfig::Kind::OrderBook:
      if (tick.book_levels.empty())
        throw std::invalid_argument("SupportBuilder: order-book model needs book levels");
      box = SupportBox(support_order_book(y, tick.book_levels));
      break;
    case NoiseConfig::Kind::MarketMakerQuotes:
      if (!tick.bid || !tick.ask)
        throw std::invalid_argument("SupportBuilder: market-maker model needs matched quotes");
      box = SupportBox(support_market_maker(y, *tick.bid, *tick.ask));
      break;
    case NoiseConfig::Kind::SpreadEstimate: {
      std::optional<SpreadSupport> s;
      if (prev_price_) s = support_spread_estimate(y, *prev_price_, delta_);
      if (s) {
        delta_ = s->delta;
        box = SupportBox(s->box);
      } else {
        box = SupportBox(support_simple_deterministic(y, cfg_.tick));
      }
      break;
    }
  }
  prev_price_ = y;
  return box;
}

}  // namespace spotvol
