#include "doctest.h"
#include "fixtures.hpp"
#include "tsig/error.hpp"
#include "tsig/signature.hpp"

using namespace tsig;

TEST_SUITE("signature") {

TEST_CASE("tau is an involution in even dimension") {
  fixtures::Rng rng(31);
  for (int n : {2, 4, 6}) {
    const CMat t = tau_matrix(rng.metric(n));
    CHECK(max_abs(t * t - CMat::Identity(t.rows(), t.cols())) < 1e-12);
  }
  CHECK_THROWS_AS(tau_matrix(FlatMetric::identity(3)), Error);
}

TEST_CASE("tau on T^2 forms") {
  // m = 1, so tau = i^{1 + p(p-1)} *: 1 -> i dx12 and dx12 -> -i.
  const CMat t = tau_matrix(FlatMetric::identity(2));
  CHECK(std::abs(t(3, 0) - kI) < 1e-14);
  CHECK(std::abs(t(0, 3) + kI) < 1e-14);
}

TEST_CASE("B^i is positive on tau = +1 and negative on tau = -1 for every m") {
  // B^i from its definition: i^{m-p} on even p and i * i^{m-p} on odd p.
  fixtures::Rng rng(53);
  for (int n : {2, 4, 6}) {
    const int m = n / 2;
    const FlatMetric g = rng.metric(n);
    Form w(Ambient::scalar(g, 0));
    for (Mask k = 0; k < (Mask{1} << n); ++k)
      w.add(Mode{std::vector<int>(static_cast<std::size_t>(n), 0), 0}, MultiIndex::from_mask(k),
            {rng.normal(), rng.normal()});
    auto b_i = [&](const Form& a) {
      cplx total = 0.0;
      for (int p = 0; p <= n; ++p) {
        const cplx c = (p % 2 == 0 ? 1.0 : kI) * ipow(m - p);
        total += c * pairing_integral(a.homogeneous(p), a.homogeneous(n - p));
      }
      return total;
    };
    const Form plus = (w + tau(w)).scaled(0.5), minus = (w - tau(w)).scaled(0.5);
    const double np = inner_product(plus, plus).real(), nm = inner_product(minus, minus).real();
    CHECK(std::abs(b_i(plus) - np) < 1e-10 * np);
    CHECK(std::abs(b_i(minus) + nm) < 1e-10 * nm);
  }
}

TEST_CASE("signature operator anticommutes with tau without flux") {
  const AdmissibilityReport r = anticommutation_defect(FlatMetric::identity(4), FlatBundle::trivial(4), FluxForm(4), 1);
  CHECK(r.defect < 1e-12);
  CHECK(r.flux_norm == 0.0);
}

TEST_CASE("admissible flux anticommutes, a rotated one does not") {
  fixtures::Rng rng(37);
  const FlatMetric g = rng.metric(4);
  const FluxForm h = rng.flux(4, 1.0);
  CHECK(anticommutation_defect(g, FlatBundle::trivial(4), h, 1).defect < 1e-10);
  const AdmissibilityReport bad = anticommutation_defect(g, FlatBundle::trivial(4), h.scaled(kI), 1);
  CHECK_FALSE(bad.admissible);
  CHECK(bad.defect > 0.05 * bad.flux_norm);
}

TEST_CASE("Sign(T^2) = Sign(T^4) = 0") {
  for (int n : {2, 4}) {
    const SignatureResult s = hermitian_form(FlatMetric::identity(n), FlatBundle::trivial(n), FluxForm(n), 1.0, 1);
    CHECK(s.signature == 0);
    CHECK(s.dim_plus + s.dim_minus == (n == 2 ? 4 : 16));
    CHECK(harmonic_splitting_signature(FlatMetric::identity(n), FlatBundle::trivial(n), FluxForm(n), 1).signature == 0);
  }
}

TEST_CASE("the form signature does not depend on lambda") {
  const FluxForm h = fixtures::flux123(4, cplx{0.0, 0.4});
  int first = 0;
  bool set = false;
  for (cplx l : {cplx{1.0, 0.0}, kI, std::polar(1.0, 0.7)}) {
    const SignatureResult s = hermitian_form(FlatMetric::identity(4), FlatBundle::trivial(4), h, l, 1);
    if (!set) first = s.signature, set = true;
    CHECK(s.signature == first);
    CHECK(s.defect < 1e-10);
  }
}

TEST_CASE("index split identities on T^4 with flux") {
  const IndexSplitReport r =
      index_split_check(FlatMetric::identity(4), FlatBundle::trivial(4, 2), fixtures::flux123(4, cplx{0.0, 0.4}), 1);
  CHECK(r.even_identity);
  CHECK(r.odd_identity);
  CHECK(r.index_even == (r.signature + r.euler) / 2);
  CHECK(r.index_odd == (r.signature - r.euler) / 2);
}

TEST_CASE("signature flux must be purely imaginary") {
  CHECK_THROWS_AS(
      hermitian_form(FlatMetric::identity(4), FlatBundle::trivial(4), fixtures::flux123(4, 0.4), 1.0, 1), Error);
}

TEST_CASE("flux operator norm scales linearly") {
  const FlatMetric g = FlatMetric::identity(3);
  CHECK(flux_operator_norm(g, fixtures::flux123(3, 2.0)) ==
        doctest::Approx(2.0 * flux_operator_norm(g, fixtures::flux123(3, 1.0))));
}

}  // TEST_SUITE
