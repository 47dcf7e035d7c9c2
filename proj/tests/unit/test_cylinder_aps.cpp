#include "doctest.h"
#include "fixtures.hpp"
#include "tsig/cylinder_aps.hpp"
#include "tsig/error.hpp"

using namespace tsig;
using fixtures::flux123;

TEST_SUITE("cylinder_aps") {

TEST_CASE("boundary identification on the product cylinder") {
  fixtures::Rng rng(43);
  const CylinderProblem p{rng.metric(3), rng.bundle(3, 2), rng.flux(3, 1.0).scaled(0.4), 1.0, 1};
  const BoundaryIdentification b = boundary_identification_check(p);
  CHECK(b.intertwining_defect < 1e-10);
  CHECK(b.operator_defect < 1e-10);
  CHECK(b.tau_plus_defect < 1e-10);
  CHECK(b.tau_minus_defect < 1e-10);
}

TEST_CASE("APS index on T^3 x [0, L]") {
  for (double h : {0.0, 0.5})
    for (double length : {0.5, 2.0}) {
      const CylinderProblem p{FlatMetric::identity(3), FlatBundle::trivial(3), h == 0.0 ? FluxForm(3) : flux123(3, h),
                              length, 2};
      const APSIndexResult r = aps_cylinder_index(p);
      // zero modes of D on all forms are the harmonic forms: 8 without flux, 6 with
      CHECK(r.dim_ker_boundary == (h == 0.0 ? 8 : 6));
      CHECK(r.index + r.dim_ker_boundary == 0);
      CHECK(r.index == r.h_plus - r.h_minus - r.h_infinity);
      CHECK(r.index == r.dim_ker_plus - r.dim_ker_minus);
    }
}

TEST_CASE("holonomy without zero modes gives index zero") {
  RMat t(1, 3);
  t << 0.5, 0.0, 0.0;
  const APSIndexResult r = aps_cylinder_index({FlatMetric::identity(3), FlatBundle(t), FluxForm(3), 1.0, 1});
  CHECK(r.index == 0);
  CHECK(r.dim_ker_boundary == 0);
}

TEST_CASE("cylinder signature identity") {
  const CylinderProblem p{FlatMetric::identity(3), FlatBundle::trivial(3), flux123(3, 0.5), 1.0, 2};
  const CylinderSignatureIdentity s = cylinder_signature_identity(p);
  CHECK(s.holds);
  CHECK(s.interior_signature == 0);
  CHECK(s.eta_incoming == doctest::Approx(-s.eta_outgoing));
  CHECK(double(s.index) == doctest::Approx(s.rhs));
}

TEST_CASE("interval cohomology of the cylinder") {
  const CylinderProblem p{FlatMetric::identity(3), FlatBundle::trivial(3), FluxForm(3), 1.5, 1};
  const IntervalCohomologyReport r = interval_cohomology(p);
  // absolute cohomology is H(X); relative is H(X) shifted by one degree
  CHECK(r.absolute.dim_even == 4);
  CHECK(r.absolute.dim_odd == 4);
  CHECK(r.relative.dim_even == 4);
  CHECK(r.relative.dim_odd == 4);
  // H(Y, dY) -> H(Y) is zero for a cylinder
  CHECK(r.projection_rank == 0);
}

TEST_CASE("interval cohomology with flux") {
  const CylinderProblem p{FlatMetric::identity(3), FlatBundle::trivial(3), flux123(3, 0.5), 1.0, 1};
  const IntervalCohomologyReport r = interval_cohomology(p);
  CHECK(r.absolute.dim_even == 3);
  CHECK(r.absolute.dim_odd == 3);
  CHECK(r.relative.dim_even == 3);
  CHECK(r.relative.dim_odd == 3);
}

TEST_CASE("cylinder length must be positive") {
  CHECK_THROWS_AS(aps_cylinder_index({FlatMetric::identity(3), FlatBundle::trivial(3), FluxForm(3), 0.0, 1}), Error);
}

}  // TEST_SUITE
