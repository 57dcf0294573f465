#pragma once

#include "spotvol/normal.hpp"
#include "spotvol/support.hpp"

#include <stdexcept>

namespace spotvol {

// Raised when a requested draw has no representable probability mass (the box
// probability underflows to zero in double precision). Callers that can
// degrade gracefully catch this and place mass by convention.
struct ZeroProbabilityBox : std::runtime_error {
  ZeroProbabilityBox() : std::runtime_error("truncated normal: box probability underflows to zero") {}
};

// Univariate truncated standard normal on (za, zb), prepared once so that the
// interval probability and a draw share the same two erfc evaluations.
//
// Sampling routes:
//   - both bounds within +-6: inverse CDF on the better-conditioned tail
//   - box beyond +-6: exponential-proposal rejection (Robert 1995) for wide
//     boxes, uniform rejection for narrow ones
// Draws are nudged strictly inside the open interval.
class StdTruncated {
 public:
  StdTruncated(double za, double zb);

  double prob() const { return prob_; }
  double sample(Rng& rng) const;

 private:
  enum class Branch { LowerCdf, UpperCdf, RejectRight, RejectLeft, Degenerate };
  double za_, zb_;
  double ta_, tb_;  // cached CDF/SF values at the bounds, meaning depends on branch
  double prob_;
  Branch branch_;
};

// Truncated normal over the log of a price-space support box. `mean` and
// `cov` live in log space.
struct TruncatedNormalSpec {
  Vec mean;
  Mat cov;
  SupportBox box;
};

// Probability mass of N(mean, cov) on log(box). Dimension 1 and diagonal
// covariances are evaluated in closed form via erfc; general covariances use
// Genz's sequential transformation with a deterministic randomized lattice
// rule targeting `rel_tol` relative accuracy.
double rect_prob(const TruncatedNormalSpec& spec, double rel_tol = 1e-6);

// One draw from the truncated normal. Dimension 1 uses StdTruncated; higher
// dimensions run a Gibbs sweep over full conditionals with a fixed schedule
// of 10 burn-in plus 10 kept sweeps, returning the final state.
Vec sample(const TruncatedNormalSpec& spec, Rng& rng);

}  // namespace spotvol
