#pragma once

// Even-dimensional signature theory: the involution tau, the signature
// operator B = d_H + d_H^dagger, the anticommutation criterion and the
// hermitian forms on twisted cohomology.
//
// Flux conventions. hermitian_form, harmonic_splitting_signature and
// index_split_check take the purely imaginary flux H of the signature
// definition (conj H = -H); they work with the admissible flux H^(i).
// anticommutation_defect and signature_operator take the flux as given.

#include <string>

#include "tsig/twisted_complex.hpp"

namespace tsig {

// tau = i^{m + p(p-1)} * on p-forms, n = 2m. OddDimension for odd n.
CMat tau_matrix(const FlatMetric& metric);
Form tau(const Form& omega);

BlockOperator signature_operator(const FlatMetric& metric, const FlatBundle& bundle,
                                 const FluxForm& h, int truncation);

// Operator norm of H^ on the Gram-orthonormalized exterior algebra.
double flux_operator_norm(const FlatMetric& metric, const FluxForm& h);

struct AdmissibilityReport {
  double defect = 0.0;     // max over blocks of |B tau + tau B|
  bool admissible = false; // structural check on the flux
  double flux_norm = 0.0;
};

AdmissibilityReport anticommutation_defect(const FlatMetric& metric, const FlatBundle& bundle,
                                           const FluxForm& h, int truncation);

struct SignatureResult {
  int signature = 0;
  int dim_plus = 0;
  int dim_minus = 0;
  std::string form;  // "B^lambda" or "tau-splitting"
  cplx lambda{1.0, 0.0};
  double defect = 0.0;  // hermiticity (form) or tau-invariance (splitting) defect
};

// B^lambda = lambda^{m-p} int w ^ conj(w') on even p, i lambda^{m-p} int ... on
// odd p, on the harmonic space of H^(lambda). DegenerateForm if any form
// eigenvalue has modulus below 1e-8.
SignatureResult hermitian_form(const FlatMetric& metric, const FlatBundle& bundle,
                               const FluxForm& h, cplx lambda, int truncation = 1);

// dim H+ - dim H- of the tau-eigenspaces in the harmonic space of H^(i).
SignatureResult harmonic_splitting_signature(const FlatMetric& metric, const FlatBundle& bundle,
                                             const FluxForm& h, int truncation = 1);

struct IndexSplitReport {
  int index_even = 0;  // B: Omega^even_+ -> Omega^odd_-
  int index_odd = 0;   // B: Omega^odd_+ -> Omega^even_-
  int signature = 0;
  int euler = 0;
  bool even_identity = false;  // index_even = (Sign + chi) / 2
  bool odd_identity = false;   // index_odd = (Sign - chi) / 2
};

IndexSplitReport index_split_check(const FlatMetric& metric, const FlatBundle& bundle,
                                   const FluxForm& h, int truncation = 1);

}  // namespace tsig
