#include "tsig/cylinder_aps.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "tsig/error.hpp"
#include "tsig/signature.hpp"

namespace tsig {

namespace {

constexpr const char* kModule = "cylinder_aps";

void validate(const CylinderProblem& p, const char* op) {
  if (!(p.length > 0.0) || !std::isfinite(p.length)) {
    throw Error(ErrorCode::InvalidArgument, kModule, op, "cylinder length must be positive and finite");
  }
  if (p.truncation < 0) throw Error(ErrorCode::InvalidArgument, kModule, op, "negative truncation");
  if (!p.flux.is_constant()) throw Error(ErrorCode::NonConstantFlux, kModule, op, "constant flux required");
}

// Geometry of Y = X x [0, L] for one Fourier mode of X.
struct CylinderGeometry {
  int n = 0;
  FlatMetric metric_y;
  CMat embed;     // Lambda(X) -> Lambda(Y), forms without dr
  CMat dr_wedge;  // dr ^ on Lambda(Y)

  explicit CylinderGeometry(const FlatMetric& x) : n(x.dim()), metric_y(extend(x)) {
    const int ny = n + 1;
    const auto& bx = exterior_basis(n);
    const auto& by = exterior_basis(ny);
    embed = CMat::Zero(by.dim(), bx.dim());
    for (int i = 0; i < bx.dim(); ++i) embed(by.index(bx.mask(i)), i) = 1.0;
    dr_wedge = wedge_matrix(ny, Mask{1} << n);
  }

  static FlatMetric extend(const FlatMetric& x) {
    const int n = x.dim();
    RMat g = RMat::Identity(n + 1, n + 1);
    g.topLeftCorner(n, n) = x.g();
    return FlatMetric(g);
  }
};

FluxForm pulled_back(const FluxForm& h) {
  FluxForm out(h.dim() + 1);
  for (const auto& [key, c] : h.terms()) {
    std::vector<int> k = key.first;
    k.push_back(0);
    out.add_term(k, MultiIndex::from_mask(key.second), c);
  }
  return out;
}

int kernel_dim_2x2(const RMat& conditions) { return 2 - numerical_rank(conditions.cast<cplx>(), 1e-12); }

// Solutions of f'' = mu f on [0, L] with Neumann (derivative) or Dirichlet
// (value) conditions at both ends.
int ode_kernel(double mu, double length, bool neumann) {
  RMat c(2, 2);
  if (mu == 0.0) {
    // basis 1, r
    if (neumann) c << 0.0, 1.0, 0.0, 1.0;
    else c << 1.0, 0.0, 1.0, length;
  } else {
    // basis e^{s (r - L)}, e^{-s r}
    const double s = std::sqrt(mu), e = std::exp(-s * length);
    if (neumann) c << s * e, -s, s, -s * e;
    else c << e, 1.0, 1.0, e;
  }
  return kernel_dim_2x2(c);
}

}  // namespace

double BoundaryIdentification::max() const {
  return std::max({intertwining_defect, operator_defect, tau_plus_defect, tau_minus_defect});
}

BoundaryIdentification boundary_identification_check(const CylinderProblem& problem) {
  validate(problem, "boundary_identification_check");
  const OddSignatureOperator d(problem.metric, problem.bundle, problem.flux, problem.truncation);
  const int n = d.dim();
  const int ny = n + 1;
  const int m = ny / 2;
  const CylinderGeometry geo(problem.metric);
  const TwistedComplex y(geo.metric_y, FlatBundle::trivial(ny), pulled_back(problem.flux));

  const CMat& star_y = y.star();
  const CMat sign_y = degree_diagonal(ny, [ny](int q) {
    const long e = static_cast<long>(q - 1) * (ny - q);
    return cplx{(e % 2 == 0) ? -1.0 : 1.0, 0.0};
  });
  const CMat b1 = geo.dr_wedge + star_y * geo.dr_wedge * star_y * sign_y;
  const CMat parity_y = degree_diagonal(ny, [](int p) { return cplx{p % 2 == 0 ? 1.0 : -1.0, 0.0}; });
  const CMat phase_x = degree_diagonal(n, [m](int p) { return ipow(m + static_cast<long>(p) * (p - 1)); });
  // alpha ^ dr = (-1)^{deg alpha} dr ^ alpha
  const CMat normal = geo.dr_wedge * parity_y * geo.embed * hodge_star_matrix(problem.metric) * phase_x;
  const CMat j_plus = geo.embed + normal;
  const CMat j_minus = geo.embed - normal;
  const CMat tau_y = tau_matrix(geo.metric_y);
  const auto qr = j_minus.colPivHouseholderQr();
  const CMat r = qr.solve(b1 * j_plus);

  BoundaryIdentification out;
  out.intertwining_defect = max_abs(j_minus * r - b1 * j_plus);
  out.tau_plus_defect = max_abs(tau_y * j_plus - j_plus);
  out.tau_minus_defect = max_abs(tau_y * j_minus + j_minus);
  const auto& modes = d.modes();
  std::vector<double> defect(modes.size(), 0.0);
  parallel_for(modes.size(), [&](std::size_t i) {
    const RVec xi = d.complex().frequency(modes[i]);
    RVec xi_y = RVec::Zero(ny);
    xi_y.head(n) = xi;
    const CMat b0 = y.differential(xi_y) + y.formula_adjoint(xi_y);
    defect[i] = max_abs(j_minus * r * d.full_block(xi) - b0 * j_plus);
  });
  out.operator_defect = defect.empty() ? 0.0 : *std::max_element(defect.begin(), defect.end());
  return out;
}

APSIndexResult aps_cylinder_index(const CylinderProblem& problem) {
  validate(problem, "aps_cylinder_index");
  const OddSignatureOperator d(problem.metric, problem.bundle, problem.flux, problem.truncation);
  // Zero modes of D must lie inside the truncation.
  const double reach = 2.0 * kPi * problem.truncation * std::sqrt(problem.metric.min_dual_eigenvalue());
  if (!(reach > d.constant_part_norm())) {
    throw Error(ErrorCode::TruncationOverflow, kModule, "aps_cylinder_index",
                "truncation does not contain every block that can carry zero modes");
  }
  const OrthonormalFrame frame(d.complex().gram());
  const auto& modes = d.modes();
  struct Counts {
    int ker = 0, coker = 0, zero = 0;
  };
  std::vector<Counts> counts(modes.size());
  parallel_for(modes.size(), [&](std::size_t i) {
    const RVec values = hermitian_eigen(frame.to_orthonormal(d.full_block(d.complex().frequency(modes[i])))).values;
    const double eps = 1e-9 * std::max(1.0, values.cwiseAbs().maxCoeff());
    for (Eigen::Index j = 0; j < values.size(); ++j) {
      const double a = std::abs(values(j));
      if (a > eps && a < 10.0 * eps) {
        throw Error(ErrorCode::AmbiguousKernel, kModule, "aps_cylinder_index", "eigenvalue inside the guard band");
      }
      const int sign = a <= eps ? 0 : (values(j) > 0 ? 1 : -1);
      // (d/dr + lambda) f = 0 gives f = e^{-lambda r} f0. The incoming end
      // kills lambda >= 0, the outgoing end kills lambda <= 0.
      const bool ker = !(sign >= 0) && !(sign <= 0);
      // Adjoint problem (-d/dr + lambda) g = 0 with complementary conditions:
      // lambda < 0 is killed at r = 0 and lambda > 0 at r = L.
      const bool coker = !(sign < 0) && !(sign > 0);
      counts[i].ker += ker ? 1 : 0;
      counts[i].coker += coker ? 1 : 0;
      counts[i].zero += sign == 0 ? 1 : 0;
    }
  });
  APSIndexResult r;
  for (const Counts& c : counts) {
    r.dim_ker_plus += c.ker;
    r.dim_ker_minus += c.coker;
    r.dim_ker_boundary += c.zero;
  }
  r.index = r.dim_ker_plus - r.dim_ker_minus;
  // Solutions bounded on the elongated cylinder are the constant zero modes;
  // none of them is in L2, so every one is an extended solution at infinity.
  r.h_infinity = r.dim_ker_boundary;
  return r;
}

CylinderSignatureIdentity cylinder_signature_identity(const CylinderProblem& problem, EtaMethod method) {
  const APSIndexResult aps = aps_cylinder_index(problem);
  const OddSignatureOperator d(problem.metric, problem.bundle, problem.flux, problem.truncation);
  // D on all forms is the even operator twice over (T swaps parities and
  // commutes with D).
  const double eta_even = eta_invariant(d, method).value;
  CylinderSignatureIdentity r;
  r.index = aps.index;
  r.interior_signature = 0;
  r.eta_incoming = 2.0 * eta_even;
  r.eta_outgoing = -2.0 * eta_even;
  r.kernel = aps.dim_ker_boundary;
  r.rhs = r.interior_signature - 0.5 * (r.eta_incoming + r.kernel) - 0.5 * (r.eta_outgoing + r.kernel);
  r.holds = std::abs(r.rhs - r.index) < 1e-9;
  if (!r.holds) {
    std::ostringstream os;
    os << "index " << r.index << " against " << r.rhs;
    throw Error(ErrorCode::IdentityViolated, kModule, "cylinder_signature_identity", os.str());
  }
  return r;
}

IntervalCohomologyReport interval_cohomology(const CylinderProblem& problem) {
  validate(problem, "interval_cohomology");
  const int n = problem.metric.dim();
  const TwistedComplex x(problem.metric, problem.bundle, problem.flux);
  const CylinderGeometry geo(problem.metric);
  const CMat gram_y = gram_matrix(geo.metric_y);
  const auto modes = truncated_modes(problem.bundle, problem.truncation);
  const OrthonormalFrame frames[2] = {OrthonormalFrame(parity_block(x.gram(), n, 0, 0)),
                                      OrthonormalFrame(parity_block(x.gram(), n, 1, 1))};
  const auto& basis = exterior_basis(n);

  struct ModeResult {
    int abs[2] = {0, 0};
    int rel[2] = {0, 0};
    int rank = 0;
    double pairing = 0.0;
    double top = 0.0;
    std::vector<std::pair<RVec, std::vector<CVec>>> spectra;  // per parity
  };
  std::vector<ModeResult> res(modes.size());
  parallel_for(modes.size(), [&](std::size_t i) {
    const CMat lap = x.laplacian(x.frequency(modes[i]));
    for (int p = 0; p < 2; ++p) {
      const HermitianEigen es = hermitian_eigen(frames[p].to_orthonormal(parity_block(lap, n, p, p)));
      const CMat vecs = frames[p].vectors_from_orthonormal(es.vectors);
      std::vector<CVec> dense;
      for (Eigen::Index c = 0; c < vecs.cols(); ++c) {
        CVec v = CVec::Zero(basis.dim());
        const auto& idx = basis.parity_indices(p);
        for (std::size_t j = 0; j < idx.size(); ++j) v(idx[j]) = vecs(static_cast<Eigen::Index>(j), c);
        dense.push_back(v);
      }
      res[i].top = std::max(res[i].top, es.values.size() ? es.values.cwiseAbs().maxCoeff() : 0.0);
      res[i].spectra.emplace_back(es.values, std::move(dense));
    }
  });
  double top = 0.0;
  for (const auto& r : res) top = std::max(top, r.top);
  const double eps = 1e-9 * std::max(top, 1.0);

  const auto& by = exterior_basis(n + 1);
  const Mask full_y = (Mask{1} << (n + 1)) - 1;
  parallel_for(modes.size(), [&](std::size_t i) {
    ModeResult& mr = res[i];
    std::vector<CVec> absolute, relative;
    for (int p = 0; p < 2; ++p) {
      const auto& [values, vecs] = mr.spectra[static_cast<std::size_t>(p)];
      for (Eigen::Index j = 0; j < values.size(); ++j) {
        double mu = values(j);
        if (std::abs(mu) > eps && std::abs(mu) < 10.0 * eps) {
          throw Error(ErrorCode::AmbiguousKernel, kModule, "interval_cohomology", "eigenvalue inside the guard band");
        }
        if (std::abs(mu) <= eps) mu = 0.0;
        // tangential part alpha(r), normal part dr ^ beta(r), same profile equation
        const int abs_alpha = ode_kernel(mu, problem.length, true);
        const int abs_beta = ode_kernel(mu, problem.length, false);
        const int rel_alpha = ode_kernel(mu, problem.length, false);
        const int rel_beta = ode_kernel(mu, problem.length, true);
        mr.abs[p] += abs_alpha;
        mr.abs[1 - p] += abs_beta;
        mr.rel[p] += rel_alpha;
        mr.rel[1 - p] += rel_beta;
        const CVec& v = vecs[static_cast<std::size_t>(j)];
        if (mu == 0.0) {
          if (abs_alpha) absolute.push_back(geo.embed * v);
          if (rel_beta) relative.push_back(geo.dr_wedge * geo.embed * v);
        }
      }
    }
    if (absolute.empty() || relative.empty()) return;
    CMat a(by.dim(), static_cast<Eigen::Index>(absolute.size()));
    CMat b(by.dim(), static_cast<Eigen::Index>(relative.size()));
    for (std::size_t c = 0; c < absolute.size(); ++c) a.col(static_cast<Eigen::Index>(c)) = absolute[c];
    for (std::size_t c = 0; c < relative.size(); ++c) b.col(static_cast<Eigen::Index>(c)) = relative[c];
    // Profiles are constant in r, so L2 products carry a factor L.
    const CMat gram_a = problem.length * a.adjoint() * gram_y * a;
    const CMat coeff = gram_a.ldlt().solve(problem.length * a.adjoint() * gram_y * b);
    mr.rank = numerical_rank(coeff, 1e-9);
    const CMat projected = a * coeff;
    for (Eigen::Index s = 0; s < projected.cols(); ++s)
      for (Eigen::Index t = 0; t < projected.cols(); ++t) {
        cplx acc{};
        for (int k = 0; k < by.dim(); ++k) {
          const Mask mk = by.mask(k);
          acc += static_cast<double>(wedge_sign(mk, full_y ^ mk)) * projected(k, s) *
                 std::conj(projected(by.index(full_y ^ mk), t));
        }
        mr.pairing = std::max(mr.pairing, std::abs(problem.length * acc));
      }
  });
  IntervalCohomologyReport out;
  out.kernel_tolerance = eps;
  for (const auto& r : res) {
    out.absolute.dim_even += r.abs[0];
    out.absolute.dim_odd += r.abs[1];
    out.relative.dim_even += r.rel[0];
    out.relative.dim_odd += r.rel[1];
    out.projection_rank += r.rank;
    out.pairing_max = std::max(out.pairing_max, r.pairing);
  }
  return out;
}

}  // namespace tsig
