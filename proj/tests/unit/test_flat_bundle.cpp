#include "doctest.h"
#include "fixtures.hpp"
#include "tsig/error.hpp"

using namespace tsig;

TEST_SUITE("flat_bundle") {

TEST_CASE("holonomy matrices give back their eigenphases") {
  const double t1 = 0.25, t2 = 0.6;
  CMat u1 = CMat::Zero(2, 2), u2 = CMat::Zero(2, 2);
  u1(0, 0) = std::polar(1.0, 2.0 * kPi * t1);
  u1(1, 1) = 1.0;
  u2(0, 0) = 1.0;
  u2(1, 1) = std::polar(1.0, 2.0 * kPi * t2);
  // Conjugate by a fixed unitary so the input is not diagonal.
  CMat q(2, 2);
  q << 1.0, 1.0, cplx{0.0, 1.0}, cplx{0.0, -1.0};
  q /= std::sqrt(2.0);
  const FlatBundle e = FlatBundle::from_holonomy_matrices({q * u1 * q.adjoint(), q * u2 * q.adjoint()});
  REQUIRE(e.rank() == 2);
  std::vector<std::pair<double, double>> rows;
  for (int a = 0; a < 2; ++a) rows.push_back({e.theta()(a, 0), e.theta()(a, 1)});
  std::sort(rows.begin(), rows.end());
  CHECK(rows[0].first == doctest::Approx(0.0).epsilon(1e-10));
  CHECK(rows[0].second == doctest::Approx(t2).epsilon(1e-10));
  CHECK(rows[1].first == doctest::Approx(t1).epsilon(1e-10));
  CHECK(rows[1].second == doctest::Approx(0.0).epsilon(1e-10));
}

TEST_CASE("non-commuting holonomies are rejected") {
  CMat x(2, 2), z(2, 2);
  x << 0.0, 1.0, 1.0, 0.0;
  z << 1.0, 0.0, 0.0, -1.0;
  CHECK_THROWS_AS(FlatBundle::from_holonomy_matrices({x, z}), Error);
}

TEST_CASE("angles outside [0,1) are rejected") {
  CHECK_THROWS_AS(FlatBundle(RMat::Constant(1, 2, 1.0)), Error);
  CHECK_THROWS_AS(FlatBundle(RMat::Constant(1, 2, -0.1)), Error);
}

TEST_CASE("dual and direct sum") {
  RMat t(1, 2);
  t << 0.25, 0.0;
  const FlatBundle d = dual_bundle(FlatBundle(t));
  CHECK(d.theta()(0, 0) == doctest::Approx(0.75));
  CHECK(d.theta()(0, 1) == 0.0);
  const FlatBundle s = direct_sum(FlatBundle(t), FlatBundle::trivial(2));
  CHECK(s.rank() == 2);
  CHECK_FALSE(s.is_trivial());
  CHECK(FlatBundle::trivial(3, 2).is_trivial());
}

TEST_CASE("flat differential of a character") {
  RMat t(1, 1);
  t << 0.25;
  const FlatBundle e(t);
  Form f(e.ambient(FlatMetric::identity(1), 2));
  f.add(Mode{{1}, 0}, MultiIndex::from_mask(0), 1.0);
  const Form d = flat_differential(f);
  // d e^{2 pi i (1 + 1/4) x} = 2 pi i (5/4) e^{...} dx
  CHECK(std::abs(d.coefficient(Mode{{1}, 0}, MultiIndex::from_mask(1)) - cplx{0.0, 2.5 * kPi}) < 1e-14);
}

TEST_CASE("flat differential squares to zero on every block") {
  fixtures::Rng rng(5);
  for (int n = 1; n <= 5; ++n) {
    RVec xi(n);
    for (int j = 0; j < n; ++j) xi(j) = rng.normal();
    const CMat d = flat_differential_block(n, xi);
    CHECK(max_abs(d * d) < 1e-13);
  }
}

}  // TEST_SUITE
