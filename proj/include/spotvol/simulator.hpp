#pragma once

#include "spotvol/rng.hpp"
#include "spotvol/support.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace spotvol {

// Volatility (or arrival-rate) curve over the normalized session position
// u in [0,1]. Values must stay strictly positive.
class VolCurve {
 public:
  static VolCurve constant(double value);
  // Knots (u, value) with u ascending in [0,1]; linear in between, clamped
  // outside the knot range.
  static VolCurve piecewise_linear(std::vector<std::pair<double, double>> knots);
  // base + amplitude * sin(2*pi*cycles*u); requires amplitude < base.
  static VolCurve sinusoid(double base, double amplitude, double cycles);
  // Quadratic through (0, open), (0.5, mid), (1, close): the classic intraday
  // smile when open/close exceed mid.
  static VolCurve ushape(double open, double mid, double close);

  double operator()(double u) const;

 private:
  enum class Kind { Constant, PiecewiseLinear, Sinusoid, UShape };
  Kind kind_ = Kind::Constant;
  std::vector<std::pair<double, double>> knots_;
  double a_ = 0.0, b_ = 0.0, c_ = 0.0;
};

// Transaction-arrival process on a session of the given length.
class ArrivalModel {
 public:
  static ArrivalModel equispaced(double dt);
  static ArrivalModel poisson(double rate);
  // Inhomogeneous Poisson with rate(u) over the session, u normalized; drawn
  // by thinning.
  static ArrivalModel inhom_poisson(VolCurve rate, double session_seconds);

  // First `count` arrival times, starting at `t0`.
  std::vector<double> times(long count, double t0, Rng& rng) const;

 private:
  enum class Kind { Equispaced, Poisson, InhomPoisson };
  Kind kind_ = Kind::Equispaced;
  double dt_ = 1.0;
  double rate_ = 1.0;
  double session_ = 23400.0;
  VolCurve rate_curve_ = VolCurve::constant(1.0);
};

struct PathConfig {
  long T = 5000;
  double p0 = 50.0;          // initial efficient price
  double p0_halfwidth = 0.005;  // exp(x_1) ~ U[p0 - hw, p0 + hw); 0 pins exp(x_1) = p0
  VolCurve vol = VolCurve::constant(1e-8);
  ArrivalModel arrivals = ArrivalModel::equispaced(1.0);
  // TransactionTime: vol(u_j) is the per-transaction variance at u_j=(j-1)/(T-1).
  // ClockTime: vol(u) is per-second variance; increments scale with duration.
  TimeMode mode = TimeMode::TransactionTime;
  double t0 = 34200.0;
};

struct LatentPath {
  std::vector<double> times;
  std::vector<double> x;  // latent log prices
};

LatentPath gen_path(const PathConfig& cfg, std::uint64_t seed);

// Observation layer applied on top of a latent path. Deterministic rounding
// snaps to the nearest grid point; stochastic rounding picks the floor or
// ceil neighbor with probability 1/2; the order-book model trades the level
// nearest the efficient price within a grid book of `book_depth` levels per
// side centered on the previous trade; the market-maker model quotes the two
// grid points straddling the efficient price and trades the nearer side.
struct SimNoise {
  NoiseConfig::Kind kind = NoiseConfig::Kind::SimpleDeterministic;
  double tick = 0.01;
  int book_depth = 5;
};

std::vector<TickObservation> apply_noise(const LatentPath& path, const SimNoise& noise,
                                         std::uint64_t seed);

// Additive i.i.d. Gaussian noise on the log price: observed prices
// exp(x + eta * Z). Used to exercise the benchmark estimator's own model.
std::vector<double> apply_additive_noise(const LatentPath& path, double eta, std::uint64_t seed);

// Stylized-fact statistics of observed prices.
std::vector<double> return_acf(std::span<const double> prices, int max_lag);
std::vector<double> return_pacf(std::span<const double> prices, int max_lag);
double zero_return_fraction(std::span<const double> prices);

}  // namespace spotvol
