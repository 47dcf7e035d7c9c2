#pragma once

// Complex exterior algebra on a flat torus R^n/Z^n at the level of Fourier
// coefficients. A basis section is e^{2 pi i (k + theta_a) . x} dx_I, keyed by
// the lattice vector k, the bundle channel a and the multi-index I.
//
// Conventions used throughout the library:
//   * dx_1 ^ ... ^ dx_n is positively oriented,
//   * the Hodge star is extended complex-linearly,
//   * the L2 product is conjugate-linear in its second slot,
//   * multi-indices are stored as bitmasks (bit j <-> axis j+1) and ordered by
//     (degree, lexicographic axes) inside dense blocks.

#include <cstdint>
#include <functional>
#include <map>
#include <utility>
#include <vector>

#include "tsig/linalg.hpp"

namespace tsig {

using Mask = std::uint32_t;

int popcount(Mask m) noexcept;

// Sign of dx_I ^ dx_J relative to dx_{I u J}; zero when I and J overlap.
int wedge_sign(Mask i, Mask j) noexcept;

class MultiIndex {
 public:
  MultiIndex() = default;
  // Axes are 1-based, strictly increasing and at most n.
  static MultiIndex from_axes(const std::vector<int>& axes, int n);
  static MultiIndex from_mask(Mask m) { MultiIndex r; r.mask_ = m; return r; }

  Mask mask() const noexcept { return mask_; }
  int degree() const noexcept { return popcount(mask_); }
  std::vector<int> axes() const;

  friend bool operator==(const MultiIndex& a, const MultiIndex& b) { return a.mask_ == b.mask_; }
  friend bool operator<(const MultiIndex& a, const MultiIndex& b);

 private:
  Mask mask_ = 0;
};

// Dense basis of Lambda(R^n), dimension 2^n.
class ExteriorBasis {
 public:
  explicit ExteriorBasis(int n);
  int n() const noexcept { return n_; }
  int dim() const noexcept { return static_cast<int>(masks_.size()); }
  Mask mask(int idx) const { return masks_[static_cast<std::size_t>(idx)]; }
  int index(Mask m) const { return index_[m]; }
  int degree(int idx) const { return popcount(mask(idx)); }
  // Basis positions of the given parity (0 even, 1 odd), ascending.
  const std::vector<int>& parity_indices(int parity) const { return parity_[parity & 1]; }

 private:
  int n_;
  std::vector<Mask> masks_;
  std::vector<int> index_;
  std::vector<int> parity_[2];
};

const ExteriorBasis& exterior_basis(int n);

// Left multiplication by dx_I on the dense exterior algebra.
CMat wedge_matrix(int n, Mask i);

class FlatMetric {
 public:
  // Throws InvalidArgument unless g is symmetric to 1e-12 and positive definite.
  explicit FlatMetric(RMat g);
  static FlatMetric identity(int n);

  int dim() const noexcept { return static_cast<int>(g_.rows()); }
  const RMat& g() const noexcept { return g_; }
  const RMat& g_inverse() const noexcept { return ginv_; }
  double sqrt_det() const noexcept { return sqrt_det_; }
  // det of the (I,J) minor of G^{-1}; zero for different degrees.
  double inverse_minor(Mask i, Mask j) const;
  // |xi| in the dual metric, sqrt(xi^T G^{-1} xi).
  double dual_norm(const RVec& xi) const;
  // Smallest eigenvalue of G^{-1}; lower bound for |xi|^2_{G*} / |xi|^2.
  double min_dual_eigenvalue() const;

  friend bool same_metric(const FlatMetric& a, const FlatMetric& b);

 private:
  RMat g_;
  RMat ginv_;
  double sqrt_det_ = 1.0;
};

// Gram matrix of the L2 product on constant-coefficient forms (unit
// coordinate volume): <dx_I, dx_J> = sqrt(det G) det G^{-1}[I,J].
CMat gram_matrix(const FlatMetric& metric);

// Matrix of the Hodge star on Lambda(R^n).
CMat hodge_star_matrix(const FlatMetric& metric);

// Diagonal matrix with entry f(degree) at every basis position.
CMat degree_diagonal(int n, const std::function<cplx(int)>& f);

struct Mode {
  std::vector<int> k;
  int channel = 0;

  friend bool operator==(const Mode& a, const Mode& b) { return a.channel == b.channel && a.k == b.k; }
  friend bool operator<(const Mode& a, const Mode& b) {
    return a.channel != b.channel ? a.channel < b.channel : a.k < b.k;
  }
};

int sup_norm(const std::vector<int>& k) noexcept;

// All lattice vectors with |k|_inf <= radius in lexicographic order.
std::vector<std::vector<int>> lattice_box(int n, int radius);

// Geometry plus bundle twisting plus truncation: everything a Form needs to
// interpret its coefficients.
struct Ambient {
  FlatMetric metric;
  RMat theta;  // rank x n holonomy angles in [0,1)
  int truncation = 0;

  static Ambient scalar(const FlatMetric& metric, int truncation);
  int dim() const noexcept { return metric.dim(); }
  int rank() const noexcept { return static_cast<int>(theta.rows()); }
  bool is_scalar() const;
  // 2 pi (k + theta_a)
  RVec frequency(const Mode& mode) const;
};

// True when metric and holonomy agree (truncations may differ).
bool compatible(const Ambient& a, const Ambient& b);

class Form {
 public:
  using Key = std::pair<Mode, MultiIndex>;

  explicit Form(Ambient ambient) : ambient_(std::move(ambient)) {}

  const Ambient& ambient() const noexcept { return ambient_; }
  const std::map<Key, cplx>& coefficients() const noexcept { return coeffs_; }

  // Adds c to the coefficient of (mode, I); TruncationOverflow if outside K.
  void add(const Mode& mode, const MultiIndex& index, cplx c);
  cplx coefficient(const Mode& mode, const MultiIndex& index) const;

  Form homogeneous(int degree) const;
  Form scaled(cplx s) const;
  Form operator+(const Form& other) const;
  Form operator-(const Form& other) const;
  double max_abs() const noexcept;
  // Removes coefficients below tol in absolute value.
  void prune(double tol = 0.0);
  // Same coefficients in an ambient with a different truncation radius.
  Form retruncated(int truncation) const;

 private:
  Ambient ambient_;
  std::map<Key, cplx> coeffs_;
};

// One factor must be scalar-valued (trivial rank-1 ambient); the product lives
// in the other factor's ambient with truncation out_truncation.
Form wedge(const Form& a, const Form& b, int out_truncation);
Form hodge_star(const Form& a);
// sum over matched modes of a_I conj(b_J) <dx_I, dx_J>
cplx inner_product(const Form& a, const Form& b);
// Coefficient-wise conjugation; the result lives over the dual holonomy.
Form conjugate(const Form& a);
// integral over X of sum_a a_a ^ conj(b_a); characters with different modes
// are orthogonal, so only matching keys contribute their top coefficient.
cplx pairing_integral(const Form& a, const Form& b);

// Dense coefficient vector of one (mode) block in ExteriorBasis order.
CVec block_vector(const Form& a, const Mode& mode);

}  // namespace tsig
