#include "spotvol/truncnorm.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <limits>

namespace spotvol {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTailZ = 6.0;

double nudge_into(double z, double za, double zb) {
  if (z <= za) z = std::nextafter(za, kInf);
  if (z >= zb) z = std::nextafter(zb, -kInf);
  return z;
}
}  // namespace

StdTruncated::StdTruncated(double za, double zb) : za_(za), zb_(zb), ta_(0.0), tb_(0.0) {
  if (std::isnan(za) || std::isnan(zb) || !(za <= zb))
    throw std::invalid_argument("StdTruncated: need za <= zb");
  if (za == zb) {
    if (std::isinf(za)) throw std::invalid_argument("StdTruncated: need za < zb");
    branch_ = Branch::Degenerate;  // width lost to rounding; all mass at the point
    prob_ = 0.0;
  } else if (za >= kTailZ) {
    branch_ = Branch::RejectRight;
    prob_ = std_normal_interval_prob(za, zb);
  } else if (zb <= -kTailZ) {
    branch_ = Branch::RejectLeft;
    prob_ = std_normal_interval_prob(za, zb);
  } else if (std::isinf(za) || za + zb <= 0.0) {
    // Both CDF values sit in the lower tail, so their difference keeps full
    // relative precision; mirrored for the upper branch.
    branch_ = Branch::LowerCdf;
    ta_ = std::isinf(za) ? 0.0 : normal_cdf(za);
    tb_ = std::isinf(zb) ? 1.0 : normal_cdf(zb);
    prob_ = std::max(0.0, tb_ - ta_);
  } else {
    branch_ = Branch::UpperCdf;
    ta_ = normal_sf(za);
    tb_ = std::isinf(zb) ? 0.0 : normal_sf(zb);
    prob_ = std::max(0.0, ta_ - tb_);
  }
}

double StdTruncated::sample(Rng& rng) const {
  if (branch_ == Branch::Degenerate) return za_;
  if (prob_ <= 0.0) throw ZeroProbabilityBox();
  switch (branch_) {
    case Branch::LowerCdf: {
      const double u = ta_ + rng.u01() * (tb_ - ta_);
      return nudge_into(normal_quantile(u), za_, zb_);
    }
    case Branch::UpperCdf: {
      const double q = tb_ + rng.u01() * (ta_ - tb_);
      return nudge_into(-normal_quantile(q), za_, zb_);
    }
    case Branch::RejectRight:
    case Branch::Degenerate:
      break;
    case Branch::RejectLeft: {
      StdTruncated mirror(-zb_, -za_);
      return -mirror.sample(rng);
    }
  }
  // Right-tail rejection on [za, zb], za >= 6. Narrow boxes accept well under
  // a uniform proposal; wide or half-infinite boxes use the shifted
  // exponential proposal, which has acceptance rate >= ~0.76 in this regime.
  const double za = za_, zb = zb_;
  if (!std::isinf(zb) && 0.5 * (zb * zb - za * za) <= 1.0) {
    for (;;) {
      const double z = rng.uniform(za, zb);
      if (std::log(rng.u01()) <= 0.5 * (za * za - z * z))
        return nudge_into(z, za, zb);
    }
  }
  const double alpha = 0.5 * (za + std::sqrt(za * za + 4.0));
  for (;;) {
    const double z = za + rng.exponential() / alpha;
    if (z >= zb) continue;
    const double d = z - alpha;
    if (std::log(rng.u01()) <= -0.5 * d * d)
      return nudge_into(z, za, zb);
  }
}

namespace {

struct ZBounds {
  double a[kMaxDim];
  double b[kMaxDim];
};

ZBounds log_bounds(const TruncatedNormalSpec& spec) {
  ZBounds zb;
  for (int d = 0; d < spec.box.dim(); ++d) {
    zb.a[d] = spec.box.log_lo(d);
    zb.b[d] = spec.box.log_hi(d);
  }
  return zb;
}

void check_spec(const TruncatedNormalSpec& spec) {
  const int s = spec.box.dim();
  if (s < 1 || s > kMaxDim) throw std::invalid_argument("TruncatedNormalSpec: dim must be in [1,4]");
  if (spec.mean.size() != s || spec.cov.rows() != s || spec.cov.cols() != s)
    throw std::invalid_argument("TruncatedNormalSpec: mean/cov/box dimensions disagree");
  for (int i = 0; i < s; ++i)
    for (int j = i + 1; j < s; ++j)
      if (spec.cov(i, j) != spec.cov(j, i))
        throw std::invalid_argument("TruncatedNormalSpec: covariance must be symmetric");
  for (int i = 0; i < s; ++i)
    if (!(spec.cov(i, i) > 0.0))
      throw std::invalid_argument("TruncatedNormalSpec: diagonal variances must be > 0");
}

bool is_diagonal(const Mat& cov) {
  for (int i = 0; i < cov.rows(); ++i)
    for (int j = 0; j < cov.cols(); ++j)
      if (i != j && cov(i, j) != 0.0) return false;
  return true;
}

// Genz (1992) sequential transformation: the box probability becomes an
// integral over the unit cube of dimension s-1, evaluated with a randomized
// Richtmyer lattice under a fixed internal seed so results are reproducible.
double genz_prob(const TruncatedNormalSpec& spec, double rel_tol) {
  const int s = spec.box.dim();
  Eigen::LLT<Mat> llt(spec.cov);
  if (llt.info() != Eigen::Success)
    throw std::invalid_argument("rect_prob: covariance is not positive definite");
  const Mat L = llt.matrixL();
  ZBounds zb = log_bounds(spec);
  double a[kMaxDim], b[kMaxDim];
  for (int d = 0; d < s; ++d) {
    a[d] = std::isinf(zb.a[d]) ? -kInf : zb.a[d] - spec.mean[d];
    b[d] = std::isinf(zb.b[d]) ? kInf : zb.b[d] - spec.mean[d];
  }

  static constexpr double kSqrtPrimes[3] = {1.4142135623730951, 1.7320508075688772,
                                            2.23606797749979};
  const auto integrand = [&](const double* w) {
    double d0 = std::isinf(a[0]) ? 0.0 : normal_cdf(a[0] / L(0, 0));
    double e0 = std::isinf(b[0]) ? 1.0 : normal_cdf(b[0] / L(0, 0));
    double p = e0 - d0;
    double y[kMaxDim];
    double dlo = d0, dhi = e0;
    for (int i = 1; i < s; ++i) {
      double u = dlo + w[i - 1] * (dhi - dlo);
      u = std::clamp(u, 1e-300, 1.0 - 1e-16);
      y[i - 1] = normal_quantile(u);
      double shift = 0.0;
      for (int j = 0; j < i; ++j) shift += L(i, j) * y[j];
      dlo = std::isinf(a[i]) ? 0.0 : normal_cdf((a[i] - shift) / L(i, i));
      dhi = std::isinf(b[i]) ? 1.0 : normal_cdf((b[i] - shift) / L(i, i));
      p *= std::max(0.0, dhi - dlo);
      if (p == 0.0) return 0.0;
    }
    return p;
  };

  constexpr int kShifts = 12;
  Rng shift_rng(0x5f3759df9e3779b9ULL);
  double shifts[kShifts][kMaxDim - 1];
  for (auto& row : shifts)
    for (int d = 0; d < s - 1; ++d) row[d] = shift_rng.u01();

  double acc[kShifts] = {};
  long n_done = 0;
  double estimate = 0.0;
  for (long n_target = 4096; n_target <= (1L << 21); n_target *= 2) {
    for (long n = n_done; n < n_target; ++n) {
      double base[kMaxDim - 1];
      for (int d = 0; d < s - 1; ++d) {
        const double v = static_cast<double>(n + 1) * kSqrtPrimes[d];
        base[d] = v - std::floor(v);
      }
      for (int k = 0; k < kShifts; ++k) {
        double w[kMaxDim - 1];
        for (int d = 0; d < s - 1; ++d) {
          double t = base[d] + shifts[k][d];
          t -= std::floor(t);
          w[d] = std::abs(2.0 * t - 1.0);  // baker transform
        }
        acc[k] += integrand(w);
      }
    }
    n_done = n_target;
    double mean = 0.0;
    for (double v : acc) mean += v;
    mean /= static_cast<double>(kShifts) * static_cast<double>(n_done);
    double var = 0.0;
    for (double v : acc) {
      const double m = v / static_cast<double>(n_done) - mean;
      var += m * m;
    }
    var /= kShifts * (kShifts - 1.0);
    estimate = mean;
    const double err = 3.0 * std::sqrt(var);
    if (err <= rel_tol * std::max(mean, 1e-300)) break;
  }
  return std::clamp(estimate, 0.0, 1.0);
}

double interior_point(double mean, double sd, double lo, double hi) {
  const bool lo_inf = std::isinf(lo), hi_inf = std::isinf(hi);
  if (!lo_inf && !hi_inf) {
    if (mean > lo && mean < hi) return mean;
    return 0.5 * (lo + hi);
  }
  if (lo_inf && hi_inf) return mean;
  if (lo_inf) return std::min(mean, hi - 0.5 * sd);
  return std::max(mean, lo + 0.5 * sd);
}

}  // namespace

double rect_prob(const TruncatedNormalSpec& spec, double rel_tol) {
  check_spec(spec);
  const int s = spec.box.dim();
  if (s == 1) {
    return normal_interval_prob(spec.mean[0], std::sqrt(spec.cov(0, 0)),
                                spec.box.log_lo(0), spec.box.log_hi(0));
  }
  if (is_diagonal(spec.cov)) {
    double p = 1.0;
    for (int d = 0; d < s; ++d)
      p *= normal_interval_prob(spec.mean[d], std::sqrt(spec.cov(d, d)),
                                spec.box.log_lo(d), spec.box.log_hi(d));
    return p;
  }
  return genz_prob(spec, rel_tol);
}

Vec sample(const TruncatedNormalSpec& spec, Rng& rng) {
  check_spec(spec);
  const int s = spec.box.dim();
  if (s == 1) {
    const double sd = std::sqrt(spec.cov(0, 0));
    const double za = (spec.box.log_lo(0) - spec.mean[0]) / sd;
    const double zb = (spec.box.log_hi(0) - spec.mean[0]) / sd;
    StdTruncated tn(std::isinf(za) ? -kInf : za, std::isinf(zb) ? kInf : zb);
    Vec x(1);
    x[0] = spec.mean[0] + sd * tn.sample(rng);
    return x;
  }

  // Gibbs over full conditionals. Regression coefficients against the other
  // coordinates come from the precision matrix: for row i,
  //   x_i | x_-i ~ N(mu_i - sum_j P_ij (x_j - mu_j) / P_ii, 1 / P_ii).
  Eigen::LLT<Mat> llt(spec.cov);
  if (llt.info() != Eigen::Success)
    throw std::invalid_argument("sample: covariance is not positive definite");
  Mat prec = llt.solve(Mat::Identity(s, s));
  ZBounds zb = log_bounds(spec);

  Vec x(s);
  for (int d = 0; d < s; ++d)
    x[d] = interior_point(spec.mean[d], std::sqrt(spec.cov(d, d)), zb.a[d], zb.b[d]);

  constexpr int kBurnIn = 10, kKept = 10;
  for (int sweep = 0; sweep < kBurnIn + kKept; ++sweep) {
    for (int i = 0; i < s; ++i) {
      const double cond_var = 1.0 / prec(i, i);
      double shift = 0.0;
      for (int j = 0; j < s; ++j)
        if (j != i) shift += prec(i, j) * (x[j] - spec.mean[j]);
      const double cond_mean = spec.mean[i] - cond_var * shift;
      const double cond_sd = std::sqrt(cond_var);
      const double za = (zb.a[i] - cond_mean) / cond_sd;
      const double zbnd = (zb.b[i] - cond_mean) / cond_sd;
      StdTruncated tn(std::isinf(za) ? -kInf : za, std::isinf(zbnd) ? kInf : zbnd);
      x[i] = cond_mean + cond_sd * tn.sample(rng);
    }
  }
  return x;
}

}  // namespace spotvol
