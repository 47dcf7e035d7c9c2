#pragma once

// Odd-dimensional spectral invariants: the twisted odd signature operator
// D = i^{m + p(p+1)} (nabla^H * - (-1)^p * nabla^{-conj H}) on p-forms of a
// (2m-1)-torus, its spectrum, eta and rho invariants, spectral flow along
// affine flux paths and the three-dimensional local term.

#include <string>
#include <vector>

#include "tsig/twisted_complex.hpp"

namespace tsig {

class OddSignatureOperator {
 public:
  // EvenDimension for even n, NonConstantFlux for mode-coupling flux.
  OddSignatureOperator(FlatMetric metric, FlatBundle bundle, FluxForm flux, int truncation);

  int m() const noexcept { return (complex_.dim() + 1) / 2; }
  int dim() const noexcept { return complex_.dim(); }
  int truncation() const noexcept { return truncation_; }
  const TwistedComplex& complex() const noexcept { return complex_; }
  const std::vector<Mode>& modes() const noexcept { return modes_; }

  // D on all forms of one mode block (dense 2^n basis).
  CMat full_block(const RVec& xi) const;
  // D restricted to even forms.
  CMat even_block(const RVec& xi) const;
  // Hermitian representative of even_block in a Gram-orthonormal frame.
  CMat hermitian_even_block(const RVec& xi) const;
  // T = i^{m + p(p+1)} * on p-forms.
  CMat t_matrix() const;
  // xi-independent part M0 of the hermitian even block and its spectral norm.
  const CMat& constant_part() const noexcept { return m0_; }
  double constant_part_norm() const noexcept { return m0_norm_; }

  // max over blocks of the hermiticity and T D T = D defects.
  double hermiticity_defect() const;
  double t_conjugation_defect() const;

 private:
  TwistedComplex complex_;
  int truncation_;
  std::vector<Mode> modes_;
  CMat even_gram_;
  OrthonormalFrame even_frame_;
  CMat h_wedge_;
  CMat minus_hbar_wedge_;
  CMat m0_;
  double m0_norm_ = 0.0;
};

struct SpectralLine {
  double value = 0.0;
  Mode mode;
  int multiplicity = 1;
};

// All eigenvalues of the even blocks within the truncation, ascending.
std::vector<SpectralLine> spectrum(const OddSignatureOperator& op);

enum class EtaMethod { Auto, ModeSymmetryExact, ZetaExtrapolated, ZetaFinitePart };

std::string to_string(EtaMethod method);
EtaMethod eta_method_from_string(const std::string& name);

struct EtaEstimate {
  double value = 0.0;
  double error_estimate = 0.0;
  std::string method;
  int truncation = 0;
  std::vector<double> grid;  // s-grid or quadrature orders
  std::vector<std::string> warnings;
};

// Auto tries the exact symmetry method first and falls back to the zeta
// finite part (or the Hurwitz closed form on the circle) with a warning.
EtaEstimate eta_invariant(const OddSignatureOperator& op, EtaMethod method = EtaMethod::Auto);

// eta(D^E_H) - rank(E) eta(D_H); errors combined in quadrature.
EtaEstimate rho_invariant(const FlatMetric& metric, const FlatBundle& bundle, const FluxForm& h,
                          int truncation, EtaMethod method = EtaMethod::Auto);

struct Crossing {
  double u = 0.0;
  int sign = 0;  // +1 when an eigenvalue moves up through the level
  int multiplicity = 1;
  Mode mode;
};

struct SpectralFlowResult {
  int flow = 0;
  std::vector<Crossing> crossings;
  int steps = 0;
  double overlap_threshold = 0.7;
  double level = -1e-7;  // crossings of -delta are counted
  int tracked_blocks = 0;
};

// Spectral flow of D along (1-u) h_start + u h_end, u in [0,1].
SpectralFlowResult spectral_flow(const FlatMetric& metric, const FlatBundle& bundle,
                                 const FluxForm& h_start, const FluxForm& h_end, int truncation,
                                 int steps = 64);
// Path u -> u h.
SpectralFlowResult spectral_flow(const FlatMetric& metric, const FlatBundle& bundle,
                                 const FluxForm& h, int truncation, int steps = 64);

struct LocalTerm {
  cplx value;              // (int_X H) / (-2 pi i)^2
  cplx flux_integral;      // int_X H
  // S(e_a) e_b = sum_c s_tensor[a][b][c] e_c with g(S(e_a) e_b, e_c) = -2 H(e_a, e_b, e_c).
  cplx s_tensor[3][3][3] = {};
  double antisymmetry_defect = 0.0;
};

LocalTerm local_term(const FlatMetric& metric, const FluxForm& h);

struct FluxExperimentReport {
  std::vector<int> truncations;
  std::vector<int> signature_difference;  // compressed eta(H1) - eta(H0)
  std::vector<double> smoothed_difference;
  bool shrinking = false;
  std::vector<std::string> warnings;
};

// H1 = H0 - dB with B band-limited; compares compressions of D on nested
// truncations. Reports trends only: a truncation is not a subcomplex.
FluxExperimentReport flux_representative_experiment(const FlatMetric& metric, const FlatBundle& bundle,
                                                     const FluxForm& h0, const Form& b,
                                                     const std::vector<int>& truncations);

// Form-level D; used for the mode-coupling compressions above.
Form apply_odd_signature(const Form& omega, const FluxForm& h);

}  // namespace tsig
