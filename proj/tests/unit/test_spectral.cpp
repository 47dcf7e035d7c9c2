#include "doctest.h"
#include "fixtures.hpp"
#include "oracles.hpp"
#include "tsig/error.hpp"
#include "tsig/spectral.hpp"

using namespace tsig;
using fixtures::flux123;

namespace {

// Count of eigenvalues strictly below -delta over the truncated spectrum.
int below(const OddSignatureOperator& op, double delta = 1e-7) {
  int n = 0;
  for (const SpectralLine& l : spectrum(op)) n += l.value < -delta ? l.multiplicity : 0;
  return n;
}

}  // namespace

TEST_SUITE("spectral") {

TEST_CASE("the odd signature operator lives in odd dimension") {
  CHECK_THROWS_AS(OddSignatureOperator(FlatMetric::identity(2), FlatBundle::trivial(2), FluxForm(2), 1), Error);
  FluxForm coupled(3);
  coupled.add_term({1, 0, 0}, MultiIndex::from_axes({1, 2, 3}, 3), 0.1);
  CHECK_THROWS_AS(OddSignatureOperator(FlatMetric::identity(3), FlatBundle::trivial(3), coupled, 1), Error);
}

TEST_CASE("real flux gives a hermitian operator commuting with T") {
  fixtures::Rng rng(41);
  for (int n : {3, 5}) {
    const OddSignatureOperator op(rng.metric(n), rng.bundle(n, 2), rng.flux(n, 1.0).scaled(0.3), 1);
    CHECK(op.hermiticity_defect() < 1e-10);
    CHECK(op.t_conjugation_defect() < 1e-10);
  }
}

TEST_CASE("symbol of the hermitian even block has eigenvalues +-|xi|") {
  const FlatMetric g(fixtures::diagonal({1.5, 1.0, 0.7}));
  const OddSignatureOperator op(g, FlatBundle::trivial(3), FluxForm(3), 1);
  RVec xi(3);
  xi << 0.3, -1.2, 2.0;
  const RVec ev = hermitian_eigen(op.hermitian_even_block(xi)).values;
  const double norm = g.dual_norm(xi);
  for (Eigen::Index i = 0; i < ev.size(); ++i) CHECK(std::abs(std::abs(ev(i)) - norm) < 1e-12);
  CHECK(ev.sum() == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("eta vanishes without flux") {
  for (int n : {1, 3, 5}) {
    const OddSignatureOperator op(FlatMetric::identity(n), FlatBundle::trivial(n), FluxForm(n), n == 5 ? 1 : 2);
    const EtaEstimate e = eta_invariant(op, EtaMethod::ModeSymmetryExact);
    CHECK(std::abs(e.value) <= e.error_estimate);
    CHECK(e.error_estimate < 1e-6);
    CHECK(e.method == "mode-symmetry-exact");
  }
}

TEST_CASE("circle eta matches the Hurwitz value") {
  for (double theta : {0.1, 0.25, 0.4, 0.7}) {
    RMat t(1, 1);
    t << theta;
    const OddSignatureOperator op(FlatMetric::identity(1), FlatBundle(t), FluxForm(1), 2);
    // sign of the branch: the k = 0 eigenvalue is s * 2 pi theta
    int s = 0;
    for (const SpectralLine& l : spectrum(op))
      if (l.mode.k[0] == 0) s = l.value > 0 ? 1 : -1;
    REQUIRE(s != 0);
    const EtaEstimate e = eta_invariant(op, EtaMethod::ZetaFinitePart);
    CHECK(e.value == doctest::Approx(oracle::circle_eta(theta, s)).epsilon(1e-12));
  }
}

TEST_CASE("longitudinal flux on T^3 matches the Epstein expansion") {
  for (double h : {-0.8, -0.3, 0.2, 0.5, 1.0}) {
    const OddSignatureOperator op(FlatMetric::identity(3), FlatBundle::trivial(3), flux123(3, h), 3);
    // The xi = 0 block carries the single eigenvalue g; read the sign off it.
    const CMat m0 = op.hermitian_even_block(RVec::Zero(3));
    const double g = hermitian_eigen(m0).values.sum();
    CHECK(std::abs(std::abs(g) - std::abs(h)) < 1e-12);
    const EtaEstimate e = eta_invariant(op, EtaMethod::ZetaFinitePart);
    CHECK(std::abs(e.value - oracle::longitudinal_eta(g, 1, 1)) < std::max(e.error_estimate, 1e-10));
  }
}

TEST_CASE("holonomy removes the zero-mode sign but keeps the cubic term") {
  RMat t = RMat::Zero(2, 3);
  t(1, 0) = 1.0 / 3.0;
  const OddSignatureOperator op(FlatMetric::identity(3), FlatBundle(t), flux123(3, 0.5), 3);
  const double g = hermitian_eigen(op.hermitian_even_block(RVec::Zero(3))).values.sum();
  const EtaEstimate e = eta_invariant(op, EtaMethod::ZetaFinitePart);
  CHECK(std::abs(e.value - oracle::longitudinal_eta(g, 1, 2)) < 1e-10);
}

TEST_CASE("auto falls back to the finite part with a warning") {
  const OddSignatureOperator op(FlatMetric::identity(3), FlatBundle::trivial(3), flux123(3, 0.5), 3);
  CHECK_THROWS_AS(eta_invariant(op, EtaMethod::ModeSymmetryExact), Error);
  const EtaEstimate e = eta_invariant(op);
  CHECK(e.method == "zeta-finite-part");
  CHECK_FALSE(e.warnings.empty());
}

TEST_CASE("method names round-trip") {
  for (EtaMethod m : {EtaMethod::Auto, EtaMethod::ModeSymmetryExact, EtaMethod::ZetaExtrapolated,
                      EtaMethod::ZetaFinitePart})
    CHECK(eta_method_from_string(to_string(m)) == m);
  CHECK_THROWS_AS(eta_method_from_string("nope"), Error);
}

TEST_CASE("rho depends only on the holonomy sign pattern") {
  RMat t = RMat::Zero(1, 3);
  t(0, 0) = 1.0 / 3.0;
  const EtaEstimate r = rho_invariant(FlatMetric::identity(3), FlatBundle(t), flux123(3, 0.5), 3);
  // eta(E) - eta(C): the trivial line keeps the zero-mode sign, E does not.
  const double g = -0.5;
  CHECK(std::abs(r.value - (oracle::longitudinal_eta(g, 0, 1) - oracle::longitudinal_eta(g, 1, 1))) <
        std::max(r.error_estimate, 1e-10));
}

TEST_CASE("spectral flow agrees with the change in negative eigenvalues") {
  const FlatMetric g = FlatMetric::identity(3);
  const FlatBundle e = FlatBundle::trivial(3);
  for (double h : {0.5, -0.5, 1.5}) {
    const SpectralFlowResult r = spectral_flow(g, e, flux123(3, h), 2, 32);
    const OddSignatureOperator a(g, e, FluxForm(3), 2), b(g, e, flux123(3, h), 2);
    CHECK(r.flow == below(a) - below(b));
    int sum = 0;
    for (const Crossing& c : r.crossings) sum += c.sign * c.multiplicity;
    CHECK(sum == r.flow);
  }
}

TEST_CASE("spectral flow is additive along a concatenated path") {
  const FlatMetric g = FlatMetric::identity(3);
  const FlatBundle e = FlatBundle::trivial(3);
  const int direct = spectral_flow(g, e, flux123(3, -0.4), flux123(3, 0.6), 2, 32).flow;
  const int first = spectral_flow(g, e, flux123(3, -0.4), flux123(3, 0.1), 2, 32).flow;
  const int second = spectral_flow(g, e, flux123(3, 0.1), flux123(3, 0.6), 2, 32).flow;
  CHECK(direct == first + second);
}

TEST_CASE("local term of dx123") {
  const LocalTerm l = local_term(FlatMetric::identity(3), flux123(3, 0.5));
  CHECK(std::abs(l.flux_integral - 0.5) < 1e-15);
  CHECK(std::abs(l.value - 0.5 / std::pow(-2.0 * kPi * kI, 2)) < 1e-15);
  CHECK(l.antisymmetry_defect < 1e-15);
  CHECK(std::abs(l.s_tensor[0][1][2] + 1.0) < 1e-14);  // -2 H(e1, e2, e3) = -1
}

TEST_CASE("form-level operator agrees with the blocks") {
  const FlatMetric g(fixtures::diagonal({1.2, 0.9, 1.0}));
  const FluxForm h = flux123(3, 0.3);
  const OddSignatureOperator op(g, FlatBundle::trivial(3), h, 1);
  Form w(Ambient::scalar(g, 1));
  const Mode mode{{1, 0, -1}, 0};
  w.add(mode, MultiIndex::from_mask(0), 1.0);
  w.add(mode, MultiIndex::from_axes({2, 3}, 3), cplx{0.0, 0.5});
  const Form dw = apply_odd_signature(w, h);
  const CVec expected = op.full_block(w.ambient().frequency(mode)) * block_vector(w, mode);
  CHECK((block_vector(dw, mode) - expected).cwiseAbs().maxCoeff() < 1e-12);
}

}  // TEST_SUITE
