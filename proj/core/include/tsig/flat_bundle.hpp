#pragma once

// Flat hermitian bundles over T^n. Holonomies of a flat unitary bundle over a
// torus commute, so the bundle splits into flat line bundles; each channel a
// twists sections by the character e^{2 pi i theta_a . x}.

#include <vector>

#include "tsig/exterior_algebra.hpp"

namespace tsig {

class FlatBundle {
 public:
  // theta is rank x n with entries in [0,1).
  explicit FlatBundle(RMat theta);
  static FlatBundle trivial(int n, int rank = 1);

  // One unitary per generator of Z^n; they must commute and be unitary to
  // 1e-10. Eigenphases are recovered by diagonalizing a generic hermitian
  // combination and wrapped into [0,1).
  static FlatBundle from_holonomy_matrices(const std::vector<CMat>& holonomies);

  int rank() const noexcept { return static_cast<int>(theta_.rows()); }
  int dim() const noexcept { return static_cast<int>(theta_.cols()); }
  const RMat& theta() const noexcept { return theta_; }
  bool is_trivial() const;

  Ambient ambient(const FlatMetric& metric, int truncation) const;

 private:
  RMat theta_;
};

// Holonomy angles negated mod 1.
FlatBundle dual_bundle(const FlatBundle& b);
FlatBundle direct_sum(const FlatBundle& a, const FlatBundle& b);

// Block of the flat connection on the (k, a) Fourier mode: i sum_j xi_j dx_j^.
CMat flat_differential_block(int n, const RVec& xi);

// Canonical flat connection on a bundle-valued form; preserves (k, a).
Form flat_differential(const Form& omega);

}  // namespace tsig
