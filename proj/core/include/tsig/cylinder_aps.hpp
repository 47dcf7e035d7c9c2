#pragma once

// The cylinder Y = X x [0, L] over an odd-dimensional torus X with flux pulled
// back from X. Near the boundary the even signature operator of Y is
// J^- (d/dr + D) (J^+)^{-1}, where D is the odd signature operator of X on
// all forms; everything then reduces to one ODE per eigenvalue.

#include <vector>

#include "tsig/spectral.hpp"

namespace tsig {

struct CylinderProblem {
  FlatMetric metric;  // metric on X; Y carries diag(G, 1) with r the last axis
  FlatBundle bundle;
  FluxForm flux;      // on X, constant
  double length = 1.0;
  int truncation = 1;
};

struct BoundaryIdentification {
  double intertwining_defect = 0.0;  // |J^- R - B_1 J^+| with B_1 the d/dr coefficient
  double operator_defect = 0.0;      // |J^- R D - B_0 J^+|
  double tau_plus_defect = 0.0;      // |tau_Y J^+ - J^+|
  double tau_minus_defect = 0.0;     // |tau_Y J^- + J^-|

  double max() const;
};

// Checks the boundary form of the Y signature operator on every mode of the
// truncation.
BoundaryIdentification boundary_identification_check(const CylinderProblem& problem);

struct APSIndexResult {
  int index = 0;
  int dim_ker_plus = 0;   // kernel under P_{>=0} at r = 0 and P_{<=0} at r = L
  int dim_ker_minus = 0;  // kernel of the adjoint problem
  int h_plus = 0;         // limiting values of extended L2 solutions
  int h_minus = 0;
  int h_infinity = 0;
  int dim_ker_boundary = 0;  // zero modes of D on all forms of X
};

// APS problem on the cylinder with the projection onto eigenvalues >= 0 at
// the incoming end; the count is independent of L.
APSIndexResult aps_cylinder_index(const CylinderProblem& problem);

struct CylinderSignatureIdentity {
  int index = 0;
  int interior_signature = 0;  // zero for a product cylinder
  double eta_incoming = 0.0;   // eta of D on all forms at r = 0
  double eta_outgoing = 0.0;   // eta of -D at r = L
  int kernel = 0;
  double rhs = 0.0;            // Sign - (eta_0 + h)/2 - (eta_L + h)/2
  bool holds = false;
};

// index = Sign(Y) - (eta + h)/2 over both ends; IdentityViolated on failure.
CylinderSignatureIdentity cylinder_signature_identity(const CylinderProblem& problem,
                                                      EtaMethod method = EtaMethod::Auto);

enum class IntervalBoundary { Absolute, Relative };

struct IntervalCohomology {
  int dim_even = 0;
  int dim_odd = 0;
};

struct IntervalCohomologyReport {
  IntervalCohomology absolute;
  IntervalCohomology relative;
  int projection_rank = 0;       // relative harmonic fields projected onto absolute ones
  double pairing_max = 0.0;      // intersection pairing on the projected image
  double kernel_tolerance = 0.0;
};

// Harmonic fields on X x [0, L] for the twisted Laplacian; X may have any
// dimension. Absolute: Neumann on the tangential part, Dirichlet on the
// normal part; relative swaps them.
IntervalCohomologyReport interval_cohomology(const CylinderProblem& problem);

}  // namespace tsig
