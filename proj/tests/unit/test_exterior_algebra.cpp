#include "doctest.h"
#include "fixtures.hpp"
#include "oracles.hpp"
#include "tsig/error.hpp"

using namespace tsig;

TEST_SUITE("exterior_algebra") {

TEST_CASE("basis is ordered by degree then lexicographically") {
  const ExteriorBasis& b = exterior_basis(3);
  const std::vector<Mask> expected = {0b000, 0b001, 0b010, 0b100, 0b011, 0b101, 0b110, 0b111};
  REQUIRE(b.dim() == 8);
  for (int i = 0; i < 8; ++i) CHECK(b.mask(i) == expected[static_cast<std::size_t>(i)]);
  CHECK(b.parity_indices(0) == std::vector<int>{0, 4, 5, 6});
  CHECK(b.parity_indices(1) == std::vector<int>{1, 2, 3, 7});
}

TEST_CASE("wedge signs agree with the inversion count") {
  for (Mask i = 0; i < 32; ++i)
    for (Mask j = 0; j < 32; ++j) CHECK(wedge_sign(i, j) == oracle::wedge_sign(i, j));
  CHECK(wedge_sign(0b01, 0b10) == 1);
  CHECK(wedge_sign(0b10, 0b01) == -1);
}

TEST_CASE("multi-index validation") {
  CHECK(MultiIndex::from_axes({1, 3}, 3).mask() == 0b101);
  CHECK_THROWS_AS(MultiIndex::from_axes({2, 1}, 3), Error);
  CHECK_THROWS_AS(MultiIndex::from_axes({4}, 3), Error);
}

TEST_CASE("metric validation") {
  CHECK_THROWS_AS(FlatMetric(fixtures::diagonal({1.0, -1.0})), Error);
  RMat asym = RMat::Identity(2, 2);
  asym(0, 1) = 0.1;
  CHECK_THROWS_AS(FlatMetric{asym}, Error);
  CHECK(FlatMetric(fixtures::diagonal({4.0, 9.0})).sqrt_det() == doctest::Approx(6.0));
}

TEST_CASE("Euclidean Hodge star matches the complement sign") {
  for (int n = 1; n <= 5; ++n) {
    const CMat star = hodge_star_matrix(FlatMetric::identity(n));
    const ExteriorBasis& b = exterior_basis(n);
    for (int i = 0; i < b.dim(); ++i) {
      const Mask comp = ((Mask{1} << n) - 1) & ~b.mask(i);
      CHECK(std::abs(star(b.index(comp), i) - double(oracle::euclidean_star_sign(b.mask(i), n))) < 1e-14);
    }
  }
}

TEST_CASE("star squares to (-1)^{p(n-p)} for random metrics") {
  fixtures::Rng rng(11);
  for (int n = 1; n <= 5; ++n) {
    const FlatMetric g = rng.metric(n);
    const CMat star = hodge_star_matrix(g);
    const CMat sign = degree_diagonal(n, [n](int p) { return cplx{(p * (n - p)) % 2 == 0 ? 1.0 : -1.0, 0.0}; });
    CHECK(max_abs(star * star - sign) < 1e-12);
  }
}

TEST_CASE("L2 product equals the integral of a ^ *conj(b)") {
  fixtures::Rng rng(3);
  const FlatMetric g = rng.metric(3);
  const Ambient amb = Ambient::scalar(g, 1);
  Form a(amb), b(amb);
  for (const auto& k : lattice_box(3, 1))
    for (Mask m = 0; m < 8; ++m) {
      a.add(Mode{k, 0}, MultiIndex::from_mask(m), {rng.normal(), rng.normal()});
      b.add(Mode{k, 0}, MultiIndex::from_mask(m), {rng.normal(), rng.normal()});
    }
  const cplx lhs = inner_product(a, b);
  const cplx rhs = pairing_integral(a, hodge_star(b));
  CHECK(std::abs(lhs - rhs) < 1e-11 * std::abs(lhs));
  CHECK(inner_product(a, a).real() > 0.0);
  CHECK(std::abs(inner_product(a, a).imag()) < 1e-12);
}

TEST_CASE("forms refuse modes outside the truncation") {
  Form f(Ambient::scalar(FlatMetric::identity(2), 1));
  CHECK_THROWS_AS(f.add(Mode{{2, 0}, 0}, MultiIndex::from_mask(1), 1.0), Error);
  try {
    f.add(Mode{{2, 0}, 0}, MultiIndex::from_mask(1), 1.0);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::TruncationOverflow);
  }
}

TEST_CASE("wedge of dx1 and dx2 on T^2") {
  const Ambient amb = Ambient::scalar(FlatMetric::identity(2), 0);
  Form a(amb), b(amb);
  a.add(Mode{{0, 0}, 0}, MultiIndex::from_mask(0b01), 1.0);
  b.add(Mode{{0, 0}, 0}, MultiIndex::from_mask(0b10), 1.0);
  CHECK(wedge(a, b, 0).coefficient(Mode{{0, 0}, 0}, MultiIndex::from_mask(0b11)) == cplx{1.0, 0.0});
  CHECK(wedge(b, a, 0).coefficient(Mode{{0, 0}, 0}, MultiIndex::from_mask(0b11)) == cplx{-1.0, 0.0});
}

TEST_CASE("wedge adds Fourier modes") {
  const Ambient amb = Ambient::scalar(FlatMetric::identity(1), 2);
  Form a(amb), b(amb);
  a.add(Mode{{1}, 0}, MultiIndex::from_mask(0), 2.0);
  b.add(Mode{{1}, 0}, MultiIndex::from_mask(1), 3.0);
  const Form w = wedge(a, b, 2);
  CHECK(w.coefficient(Mode{{2}, 0}, MultiIndex::from_mask(1)) == cplx{6.0, 0.0});
}

}  // TEST_SUITE
