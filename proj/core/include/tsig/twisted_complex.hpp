#pragma once

// The twisted de Rham complex (Omega(X,E), d + H^) on a flat torus, realized as
// per-Fourier-mode matrices on the dense exterior algebra Lambda(R^n). For a
// constant flux every operator is block diagonal over (k, a); a band-limited
// flux couples modes and is only handled through explicit mode lists.

#include <Eigen/Sparse>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tsig/flat_bundle.hpp"

namespace tsig {

// Closed odd-degree form H = sum_{(k,I)} c e^{2 pi i k.x} dx_I with every
// degree odd and >= 3. Degree-one parts belong in the flat connection.
class FluxForm {
 public:
  using Key = std::pair<std::vector<int>, Mask>;

  explicit FluxForm(int n);
  // Constant flux h dx_I.
  static FluxForm constant(int n, const MultiIndex& index, cplx value);
  // Odd-degree scalar form; InvalidArgument if a degree-1 part survives.
  static FluxForm from_form(const Form& form);

  void add_term(const std::vector<int>& mode, const MultiIndex& index, cplx value);

  int dim() const noexcept { return n_; }
  const std::map<Key, cplx>& terms() const noexcept { return terms_; }
  std::vector<int> degrees() const;
  FluxForm component(int degree) const;
  bool is_zero(double tol = 0.0) const;
  bool is_constant() const;
  int mode_radius() const;
  // Each H_{2j+1} equals i^{j+1} times a real form.
  bool is_admissible(double tol = 1e-12) const;
  // conj(H) = -H, i.e. c_{-k,I} = -conj(c_{k,I}).
  bool is_purely_imaginary(double tol = 1e-12) const;
  // max coefficient of dH.
  double closedness_defect() const;

  // Wedge by the constant part on Lambda(R^n); NonConstantFlux otherwise.
  CMat constant_wedge_block() const;
  Form as_form(const FlatMetric& metric) const;

  FluxForm scaled(cplx s) const;
  FluxForm operator+(const FluxForm& other) const;
  FluxForm operator-(const FluxForm& other) const { return *this + other.scaled(-1.0); }

 private:
  int n_;
  std::map<Key, cplx> terms_;
};

// Complex conjugate form H-bar (modes negated, coefficients conjugated).
FluxForm conjugate_flux(const FluxForm& h);

// H^(lambda) = sum lambda^i H_{2i+1}; ZeroLambda when lambda = 0.
FluxForm rescale_flux(const FluxForm& h, cplx lambda);

// Operator restricted to forms of a parity class; -1 means all forms.
struct BasisDescriptor {
  int dim = 0;
  int rank = 0;
  int truncation = 0;
  int parity = -1;
};

struct Block {
  Mode mode;
  RVec xi;
  CMat matrix;  // acts on the dense 2^n basis of this mode
};

struct BlockOperator {
  BasisDescriptor domain;
  BasisDescriptor codomain;
  std::vector<Block> blocks;

  const Block* find(const Mode& mode) const;
  double max_abs() const;
};

// Mode-coupling operator between explicit mode lists. Rows and columns are
// laid out as mode_index * 2^n + basis position.
struct CoupledOperator {
  int dim = 0;
  std::vector<Mode> domain_modes;
  std::vector<Mode> codomain_modes;
  Eigen::SparseMatrix<cplx> matrix;
};

// Modes (k, a) with |k|_inf <= truncation, channel-major then lexicographic.
std::vector<Mode> truncated_modes(const FlatBundle& bundle, int truncation);

// Shared per-configuration data: Gram matrix, star, constant flux wedge.
class TwistedComplex {
 public:
  // Throws FluxNotClosed; a non-constant flux is accepted here but refused by
  // every per-block operation with NonConstantFlux.
  TwistedComplex(FlatMetric metric, FlatBundle bundle, FluxForm flux);

  const FlatMetric& metric() const noexcept { return metric_; }
  const FlatBundle& bundle() const noexcept { return bundle_; }
  const FluxForm& flux() const noexcept { return flux_; }
  int dim() const noexcept { return metric_.dim(); }
  const CMat& gram() const noexcept { return gram_; }
  const CMat& star() const noexcept { return star_; }
  Ambient ambient(int truncation) const { return bundle_.ambient(metric_, truncation); }
  RVec frequency(const Mode& mode) const;

  // d_H on one mode block; xi = 2 pi (k + theta_a).
  CMat differential(const RVec& xi) const;
  // s_q * nabla^{-conj H} * on input degree q, s_q = -(-1)^{(q-1)(n-q)}.
  CMat formula_adjoint(const RVec& xi) const;
  CMat laplacian(const RVec& xi) const;
  // d_H + d_H^dagger.
  CMat signature_operator(const RVec& xi) const;

 private:
  void require_constant(const char* op) const;

  FlatMetric metric_;
  FlatBundle bundle_;
  FluxForm flux_;
  CMat gram_;
  CMat star_;
  CMat h_wedge_;
  CMat minus_hbar_wedge_;
  CMat adjoint_sign_;
};

// Rows/columns of a dense block restricted to parity classes.
CMat parity_block(const CMat& full, int n, int row_parity, int col_parity);

BlockOperator build_twisted_differential(const FlatMetric& metric, const FlatBundle& bundle,
                                         const FluxForm& h, int truncation);

// Works for band-limited flux; the codomain radius is K + flux mode radius.
CoupledOperator build_coupled_differential(const FlatMetric& metric, const FlatBundle& bundle,
                                           const FluxForm& h, int truncation);

struct AdjointResult {
  BlockOperator formula;
  BlockOperator gram;
  double defect = 0.0;
};

// Throws AdjointMismatch if the two constructions differ beyond 1e-10.
AdjointResult adjoint_twisted_differential(const FlatMetric& metric, const FlatBundle& bundle,
                                           const FluxForm& h, int truncation);

// Adjoint of every block with respect to a Gram matrix.
BlockOperator gram_adjoint(const BlockOperator& op, const CMat& gram);

BlockOperator twisted_laplacian(const FlatMetric& metric, const FlatBundle& bundle,
                                const FluxForm& h, int truncation);

// Kernel of an operator self-adjoint w.r.t. gram, with the guard band
// (eps, 10 eps), eps = rel * max(lambda_max, 1).
struct KernelInfo {
  RVec eigenvalues;
  CMat kernel;  // Gram-orthonormal columns
  double tolerance = 0.0;
};
KernelInfo selfadjoint_kernel(const CMat& op, const CMat& gram, double rel = 1e-9);

struct HarmonicBlock {
  Mode mode;
  int parity = 0;
  CMat vectors;  // Gram-orthonormal columns on the dense basis of the mode
};

struct CohomologyResult {
  int b_even = 0;
  int b_odd = 0;
  double kernel_tolerance = 0.0;
  int verified_mode_radius = 0;
  std::vector<HarmonicBlock> harmonic_blocks;
  std::vector<Form> harmonic_basis;
};

CohomologyResult twisted_cohomology(const FlatMetric& metric, const FlatBundle& bundle,
                                    const FluxForm& h, int truncation = 3);

// Form-level d + H^ with the output truncation enlarged by the flux radius.
Form apply_twisted_differential(const Form& omega, const FluxForm& h);
// e^B as a finite exterior exponential of a scalar even form.
Form exterior_exponential(const Form& b);

struct GaugeResult {
  FluxForm transformed;  // H' = H - dB
  CoupledOperator intertwiner;
  double defect = 0.0;
};

// eps_B o nabla^{H'} = nabla^H o eps_B, checked on seeded random band-limited
// test vectors within the truncation. eps_B is e^{-B}^: with nabla^H = nabla + H^
// and H' = H - dB that is the sign for which the identity holds.
GaugeResult gauge_transform(const FlatMetric& metric, const FlatBundle& bundle, const Form& b,
                            const FluxForm& h, int truncation, int test_vectors = 4,
                            unsigned seed = 7);

// max |c_lambda Delta_H c_lambda-bar - Delta_{H^(lambda)}| over blocks, with
// c_lambda = lambda^{floor(p/2)} on p-forms and |lambda| = 1.
double scaling_conjugation_check(const FlatMetric& metric, const FlatBundle& bundle,
                                 const FluxForm& h, cplx lambda, int truncation);

struct KunnethFactor {
  FlatMetric metric;
  FlatBundle bundle;
  FluxForm flux;
};

struct KunnethReport {
  int b_even = 0;
  int b_odd = 0;
  int expected_even = 0;
  int expected_odd = 0;
  bool dimensions_match = false;
  // max |nabla(omega_1 x conj omega_2)| over harmonic products
  double cocycle_defect = 0.0;
  // same with pi_2^* H_2 in place of pi_2^* conj(H_2)
  double unconjugated_defect = 0.0;
};

KunnethReport kunneth_check(const KunnethFactor& first, const KunnethFactor& second,
                            int truncation = 2);

struct PoincareReport {
  CMat pairing;
  double sigma_min = 0.0;
  bool nondegenerate = false;
  // dim H^{k}(E,H) against dim H^{n-k}(E*, -conj H) per parity k.
  int dim_even = 0;
  int dim_odd = 0;
  int dual_dim_even = 0;
  int dual_dim_odd = 0;
  bool dimensions_match = false;
};

PoincareReport poincare_pairing(const FlatMetric& metric, const FlatBundle& bundle,
                                const FluxForm& h, int truncation = 1);

}  // namespace tsig
