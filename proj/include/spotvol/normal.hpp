#pragma once

#include "spotvol/rng.hpp"

namespace spotvol {

// Scalar standard-normal utilities. The C++ standard library provides erf/erfc
// but neither a quantile nor a tail-stable interval probability, and the
// stdlib distribution classes are implementation defined, so draws are built
// from these primitives instead.

double normal_cdf(double z) noexcept;        // P(Z <= z)
double normal_sf(double z) noexcept;         // P(Z > z), accurate in the right tail
double normal_pdf(double z) noexcept;

// Inverse CDF (Wichura's PPND16 rational approximations), p in (0,1).
double normal_quantile(double p);

// P(za < Z < zb) evaluated without cancellation: same-sign bounds use erfc
// differences on the shared tail, straddling bounds use 1 - both tails.
// Bounds may be +-infinity. Requires za <= zb.
double std_normal_interval_prob(double za, double zb);

// Interval probability for N(mean, sd^2) on [lo, hi]; endpoints may be
// +-infinity. Requires sd > 0 and lo <= hi.
double normal_interval_prob(double mean, double sd, double lo, double hi);

// Standard normal draw via the inverse CDF, so the mapping from uniforms to
// normals is fixed across platforms.
inline double draw_normal(Rng& rng) { return normal_quantile(rng.u01()); }

}  // namespace spotvol
