// Seeded randomized checks of structural invariants.

#include "doctest.h"
#include "fixtures.hpp"
#include "oracles.hpp"
#include "tsig/cylinder_aps.hpp"
#include "tsig/heat_kernel.hpp"
#include "tsig/signature.hpp"
#include "tsig/spectral.hpp"

using namespace tsig;

TEST_SUITE("properties") {

TEST_CASE("d_H^2 = 0 and adjoint agreement over random configurations") {
  fixtures::Rng rng(101);
  for (int i = 0; i < 20; ++i) {
    const int n = 2 + i % 4;
    const FlatMetric g = rng.metric(n);
    const FlatBundle e = rng.bundle(n, 1 + i % 3);
    const FluxForm h = n >= 3 ? rng.flux(n, std::polar(1.0, rng.uniform(0.0, 6.0))) : FluxForm(n);
    const BlockOperator d = build_twisted_differential(g, e, h, 1);
    for (const Block& b : d.blocks) CHECK(max_abs(b.matrix * b.matrix) < 1e-12);
    CHECK(adjoint_twisted_differential(g, e, h, 1).defect < 1e-10);
  }
}

TEST_CASE("Betti numbers are metric independent and match the oracle") {
  fixtures::Rng rng(103);
  for (int i = 0; i < 6; ++i) {
    const int n = 3;
    RMat theta = RMat::Zero(1, n);
    if (i % 2 == 1) theta(0, 1) = 0.5;
    const FluxForm h = rng.flux(n, 1.0).scaled(0.5);
    const CohomologyResult a = twisted_cohomology(rng.metric(n), FlatBundle(theta), h, 1);
    const CohomologyResult b = twisted_cohomology(rng.metric(n), FlatBundle(theta), h, 1);
    const oracle::Betti o = oracle::brute_force_betti(n, theta, fixtures::constant_terms(h), 1);
    CHECK(a.b_even == b.b_even);
    CHECK(a.b_odd == b.b_odd);
    CHECK(a.b_even == o.even);
    CHECK(a.b_odd == o.odd);
  }
}

TEST_CASE("Betti numbers are invariant under flux rescaling") {
  fixtures::Rng rng(107);
  const FlatMetric g = rng.metric(4);
  const FluxForm h = rng.flux(4, 1.0).scaled(0.3);
  const CohomologyResult base = twisted_cohomology(g, FlatBundle::trivial(4), h, 1);
  for (cplx l : {kI, std::polar(1.0, 2.0), cplx{-1.0, 0.0}}) {
    const CohomologyResult r = twisted_cohomology(g, FlatBundle::trivial(4), rescale_flux(h, l), 1);
    CHECK(r.b_even == base.b_even);
    CHECK(r.b_odd == base.b_odd);
  }
}

TEST_CASE("random unit lambda conjugates the Laplacians") {
  fixtures::Rng rng(109);
  for (int i = 0; i < 8; ++i) {
    const int n = 3 + i % 3;
    const cplx l = std::polar(1.0, rng.uniform(0.0, 2.0 * kPi));
    CHECK(scaling_conjugation_check(rng.metric(n), rng.bundle(n, 2), rng.flux(n, std::polar(1.0, rng.normal())), l, 1) <
          1e-12);
  }
}

TEST_CASE("tau squares to one and admissible flux anticommutes") {
  fixtures::Rng rng(113);
  for (int i = 0; i < 6; ++i) {
    const FlatMetric g = rng.metric(4);
    const CMat t = tau_matrix(g);
    CHECK(max_abs(t * t - CMat::Identity(16, 16)) < 1e-12);
    CHECK(anticommutation_defect(g, rng.bundle(4, 1 + i % 2), rng.flux(4, 1.0), 1).defect < 1e-10);
  }
}

TEST_CASE("odd signature operator: hermitian, T-symmetric, symmetric spectrum at H = 0") {
  fixtures::Rng rng(127);
  for (int i = 0; i < 4; ++i) {
    const OddSignatureOperator op(rng.metric(3), rng.bundle(3, 2), FluxForm(3), 1);
    CHECK(op.hermiticity_defect() < 1e-10);
    CHECK(op.t_conjugation_defect() < 1e-10);
    double total = 0.0;
    for (const SpectralLine& l : spectrum(op)) total += l.value * l.multiplicity;
    // every block is traceless when H = 0
    CHECK(std::abs(total) < 1e-8);
    const EtaEstimate e = eta_invariant(op, EtaMethod::ModeSymmetryExact);
    CHECK(std::abs(e.value) <= e.error_estimate);
  }
}

TEST_CASE("rho is metric independent for diagonal metrics") {
  fixtures::Rng rng(131);
  RMat theta = RMat::Zero(1, 3);
  theta(0, 0) = 1.0 / 3.0;
  const FluxForm h = fixtures::flux123(3, 0.4);
  const EtaEstimate base = rho_invariant(FlatMetric::identity(3), FlatBundle(theta), h, 3);
  for (int i = 0; i < 3; ++i) {
    const FlatMetric g(fixtures::diagonal({rng.uniform(0.7, 1.5), rng.uniform(0.7, 1.5), rng.uniform(0.7, 1.5)}));
    const EtaEstimate r = rho_invariant(g, FlatBundle(theta), h, 3);
    CHECK(std::abs(r.value - base.value) < std::hypot(r.error_estimate, base.error_estimate));
  }
}

TEST_CASE("APS index plus boundary kernel vanishes") {
  fixtures::Rng rng(137);
  for (int i = 0; i < 4; ++i) {
    RMat theta = RMat::Zero(2, 3);
    theta(1, i % 3) = 0.5 * (i % 2);
    const CylinderProblem p{rng.metric(3), FlatBundle(theta), rng.flux(3, 1.0).scaled(0.3), rng.uniform(0.5, 2.0), 1};
    const APSIndexResult r = aps_cylinder_index(p);
    CHECK(r.index + r.dim_ker_boundary == 0);
    CHECK(r.index == r.h_plus - r.h_minus - r.h_infinity);
  }
}

TEST_CASE("heat trace is linear in the rank") {
  const std::vector<double> t = {0.1, 0.4};
  const HeatTrace one = heat_trace_images(FlatMetric::identity(2), FlatBundle::trivial(2, 1), t);
  const HeatTrace three = heat_trace_images(FlatMetric::identity(2), FlatBundle::trivial(2, 3), t);
  for (std::size_t i = 0; i < t.size(); ++i) CHECK(three.values[i] == doctest::Approx(3.0 * one.values[i]));
}

TEST_CASE("eigen and image traces agree for random metrics") {
  fixtures::Rng rng(139);
  for (int n = 1; n <= 3; ++n) {
    const FlatMetric g = rng.metric(n);
    const FlatBundle e = rng.bundle(n, 2);
    const std::vector<double> t = {0.08, 0.3, 0.9};
    const HeatTrace a = heat_trace_eigen(g, e, FluxForm(n), t, 10);
    const HeatTrace b = heat_trace_images(g, e, t);
    for (std::size_t i = 0; i < t.size(); ++i) CHECK(std::abs(a.values[i] - b.values[i]) < 1e-11 * b.values[i]);
  }
}

}  // TEST_SUITE
