#pragma once

#include "spotvol/types.hpp"

#include <array>
#include <span>

namespace spotvol {

// Price-space interval attached to one observation dimension. `lo_closed`
// records whether the lower endpoint belongs to the set; the upper endpoint is
// open except for the fully open stochastic-rounding case, which is tracked by
// `open` construction (closure is measure zero for every consumer, but the
// convention is kept explicit for contains()).
struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool lo_closed = true;

  bool contains(double p) const {
    if (p > lo && p < hi) return true;
    return lo_closed && p == lo;
  }
  double width() const { return hi - lo; }
};

// Axis-aligned product of per-dimension price intervals: the set of efficient
// prices consistent with one observed tick.
class SupportBox {
 public:
  SupportBox() = default;
  explicit SupportBox(const Interval& iv) : SupportBox(std::span<const Interval>(&iv, 1)) {}
  explicit SupportBox(std::span<const Interval> ivs);

  int dim() const { return dim_; }
  const Interval& axis(int d) const { return ivs_[static_cast<std::size_t>(d)]; }

  double log_lo(int d) const;  // -inf when lo == 0
  double log_hi(int d) const;  // +inf when hi is infinite
  bool bounded() const;
  bool contains(const Vec& price) const;

 private:
  std::array<Interval, kMaxDim> ivs_{};
  int dim_ = 0;
};

// Support constructors for the four noise models. All take the observed price
// y and return the price-space set of efficient prices that would produce y.

// Deterministic rounding to a tick grid: [y - tick/2, y + tick/2), lower
// endpoint included. y must sit on the grid (relative tolerance 1e-9).
Interval support_simple_deterministic(double y, double tick);

// Rounding up or down at random: (y - tick, y + tick), both endpoints open.
Interval support_simple_stochastic(double y, double tick);

// Nearest quotable level: the cell of y within `levels`, bounded by midpoints
// to the adjacent levels. The lowest cell extends to 0, the highest to
// +infinity; a price on a midpoint belongs to the lower cell.
Interval support_order_book(double y, std::span<const double> levels);

// Trade at the quoted side: [y - delta, y + delta) with delta the half spread.
Interval support_market_maker(double y, double bid, double ask);

// Half spread estimated from successive prices. Returns the updated running
// half spread and the support interval; `delta_prev` empty plus equal prices
// has no usable spread, in which case the caller falls back to deterministic
// rounding with its configured tick.
struct SpreadSupport {
  double delta = 0.0;
  Interval box;
};
std::optional<SpreadSupport> support_spread_estimate(double y, double y_prev,
                                                     std::optional<double> delta_prev);

// Latent random-walk timing convention. Transaction time advances one unit of
// variance per tick; clock time scales variance by the elapsed duration, so
// timestamps must be strictly increasing.
struct StateModel {
  TimeMode mode = TimeMode::TransactionTime;
};

// Covariance of the latent increment over one observation step.
Mat transition_variance(const StateModel& model, const Mat& sigma, double dt);

// Per-tick support construction with the running state needed by the
// spread-estimate model. One instance is owned by one estimation pipeline.
struct NoiseConfig {
  enum class Kind { SimpleDeterministic, SimpleStochastic, OrderBook, MarketMakerQuotes, SpreadEstimate };
  Kind kind = Kind::SimpleDeterministic;
  double tick = 0.01;  // grid step; also the spread-estimate fallback width
};

class SupportBuilder {
 public:
  explicit SupportBuilder(const NoiseConfig& cfg) : cfg_(cfg) {}

  SupportBox box_for(const TickObservation& tick);
  const NoiseConfig& config() const { return cfg_; }

 private:
  NoiseConfig cfg_;
  std::optional<double> prev_price_;
  std::optional<double> delta_;  // spread-estimate running half spread
};

}  // namespace spotvol
