#include "tsig/signature.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "tsig/error.hpp"

namespace tsig {

namespace {

constexpr const char* kModule = "signature";

int half_dimension(int n, const char* op) {
  if (n % 2 != 0) {
    throw Error(ErrorCode::OddDimension, kModule, op, "the torus dimension must be even");
  }
  return n / 2;
}

void require_purely_imaginary(const FluxForm& h, const char* op) {
  if (!h.is_purely_imaginary()) {
    throw Error(ErrorCode::NotPurelyImaginary, kModule, op,
                "the signature is defined for purely imaginary flux (conj H = -H)");
  }
}

// Orthonormal basis (in the plain sense) of the +-1 eigenspaces of a
// hermitian involution.
CMat involution_eigenspace(const CMat& t, double sign) {
  const HermitianEigen es = hermitian_eigen(t);
  std::vector<Eigen::Index> cols;
  for (Eigen::Index i = 0; i < es.values.size(); ++i)
    if (std::abs(es.values(i) - sign) < 1e-8) cols.push_back(i);
  CMat out(t.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) out.col(static_cast<Eigen::Index>(c)) = es.vectors.col(cols[c]);
  return out;
}

}  // namespace

CMat tau_matrix(const FlatMetric& metric) {
  const int n = metric.dim();
  const int m = half_dimension(n, "tau");
  return hodge_star_matrix(metric) *
         degree_diagonal(n, [m](int p) { return ipow(m + static_cast<long>(p) * (p - 1)); });
}

Form tau(const Form& omega) {
  const int n = omega.ambient().dim();
  const int m = half_dimension(n, "tau");
  Form out(omega.ambient());
  for (int p = 0; p <= n; ++p) {
    const Form part = omega.homogeneous(p);
    if (part.coefficients().empty()) continue;
    out = out + hodge_star(part).scaled(ipow(m + static_cast<long>(p) * (p - 1)));
  }
  out.prune();
  return out;
}

BlockOperator signature_operator(const FlatMetric& metric, const FlatBundle& bundle,
                                 const FluxForm& h, int truncation) {
  TwistedComplex tc(metric, bundle, h);
  if (!h.is_constant()) {
    throw Error(ErrorCode::NonConstantFlux, kModule, "signature_operator", "constant flux required");
  }
  BlockOperator op;
  op.domain = {tc.dim(), bundle.rank(), truncation, -1};
  op.codomain = op.domain;
  const auto modes = truncated_modes(bundle, truncation);
  op.blocks.resize(modes.size());
  parallel_for(modes.size(), [&](std::size_t i) {
    const RVec xi = tc.frequency(modes[i]);
    op.blocks[i] = Block{modes[i], xi, tc.signature_operator(xi)};
  });
  return op;
}

double flux_operator_norm(const FlatMetric& metric, const FluxForm& h) {
  return operator_norm(h.constant_wedge_block(), gram_matrix(metric));
}

AdmissibilityReport anticommutation_defect(const FlatMetric& metric, const FlatBundle& bundle,
                                           const FluxForm& h, int truncation) {
  half_dimension(metric.dim(), "anticommutation_defect");
  const BlockOperator b = signature_operator(metric, bundle, h, truncation);
  const CMat t = tau_matrix(metric);
  const OrthonormalFrame frame(gram_matrix(metric));
  std::vector<double> defect(b.blocks.size(), 0.0);
  parallel_for(b.blocks.size(), [&](std::size_t i) {
    const CMat& m = b.blocks[i].matrix;
    const CMat x = frame.to_orthonormal(m * t + t * m);
    Eigen::JacobiSVD<CMat> svd(x);
    defect[i] = svd.singularValues()(0);
  });
  AdmissibilityReport r;
  r.defect = defect.empty() ? 0.0 : *std::max_element(defect.begin(), defect.end());
  r.admissible = h.is_admissible();
  r.flux_norm = flux_operator_norm(metric, h);
  return r;
}

SignatureResult hermitian_form(const FlatMetric& metric, const FlatBundle& bundle,
                               const FluxForm& h, cplx lambda, int truncation) {
  const int n = metric.dim();
  const int m = half_dimension(n, "hermitian_form");
  require_purely_imaginary(h, "hermitian_form");
  if (std::abs(std::abs(lambda) - 1.0) > 1e-12) {
    throw Error(ErrorCode::InvalidArgument, kModule, "hermitian_form", "lambda must lie on the unit circle");
  }
  const CohomologyResult coh = twisted_cohomology(metric, bundle, rescale_flux(h, lambda), truncation);
  const auto& basis = coh.harmonic_basis;
  const auto dim = static_cast<Eigen::Index>(basis.size());
  CMat form = CMat::Zero(dim, dim);
  for (int p = 0; p <= n; ++p) {
    const cplx factor = std::pow(lambda, m - p) * (p % 2 == 0 ? cplx{1.0} : kI);
    for (Eigen::Index a = 0; a < dim; ++a) {
      const Form wp = basis[static_cast<std::size_t>(a)].homogeneous(p);
      if (wp.coefficients().empty()) continue;
      for (Eigen::Index b = 0; b < dim; ++b)
        form(a, b) += factor * pairing_integral(wp, basis[static_cast<std::size_t>(b)]);
    }
  }
  // form(a,b) = B(w_a, w_b); as a matrix acting on coefficient vectors the
  // hermitian form is its transpose, which has the same inertia.
  SignatureResult r;
  r.form = "B^lambda";
  r.lambda = lambda;
  r.defect = max_abs(form - form.adjoint());
  if (dim == 0) return r;
  const HermitianEigen es = hermitian_eigen(form);
  for (Eigen::Index i = 0; i < es.values.size(); ++i) {
    const double v = es.values(i);
    if (std::abs(v) < 1e-8) {
      std::ostringstream os;
      os << "form eigenvalue " << v << " below 1e-8 on the harmonic space";
      throw Error(ErrorCode::DegenerateForm, kModule, "hermitian_form", os.str());
    }
    (v > 0 ? r.dim_plus : r.dim_minus) += 1;
  }
  r.signature = r.dim_plus - r.dim_minus;
  return r;
}

SignatureResult harmonic_splitting_signature(const FlatMetric& metric, const FlatBundle& bundle,
                                             const FluxForm& h, int truncation) {
  const int n = metric.dim();
  half_dimension(n, "harmonic_splitting_signature");
  require_purely_imaginary(h, "harmonic_splitting_signature");
  const CohomologyResult coh = twisted_cohomology(metric, bundle, rescale_flux(h, kI), truncation);
  const CMat t = tau_matrix(metric);
  const CMat gram = gram_matrix(metric);
  SignatureResult r;
  r.form = "tau-splitting";
  r.lambda = kI;
  for (const HarmonicBlock& hb : coh.harmonic_blocks) {
    const CMat& v = hb.vectors;  // Gram-orthonormal
    const CMat tv = t * v;
    const CMat restricted = v.adjoint() * gram * tv;
    const double leak = max_abs(tv - v * restricted);
    r.defect = std::max(r.defect, leak);
    if (leak > 1e-8) {
      std::ostringstream os;
      os << "tau moves harmonic forms off the harmonic space by " << leak;
      throw Error(ErrorCode::TauNotPreserving, kModule, "harmonic_splitting_signature", os.str());
    }
    const HermitianEigen es = hermitian_eigen(restricted);
    for (Eigen::Index i = 0; i < es.values.size(); ++i) (es.values(i) > 0 ? r.dim_plus : r.dim_minus) += 1;
  }
  r.signature = r.dim_plus - r.dim_minus;
  return r;
}

IndexSplitReport index_split_check(const FlatMetric& metric, const FlatBundle& bundle,
                                   const FluxForm& h, int truncation) {
  const int n = metric.dim();
  half_dimension(n, "index_split_check");
  require_purely_imaginary(h, "index_split_check");
  const FluxForm hi = rescale_flux(h, kI);
  const BlockOperator b = signature_operator(metric, bundle, hi, truncation);
  const CMat gram = gram_matrix(metric);
  const OrthonormalFrame frame(gram);
  const CMat t = frame.to_orthonormal(tau_matrix(metric));
  const CMat t_even = parity_block(t, n, 0, 0), t_odd = parity_block(t, n, 1, 1);
  const CMat even_plus = involution_eigenspace(t_even, 1.0), even_minus = involution_eigenspace(t_even, -1.0);
  const CMat odd_plus = involution_eigenspace(t_odd, 1.0), odd_minus = involution_eigenspace(t_odd, -1.0);

  struct Counts {
    int ker_even = 0, coker_even = 0, ker_odd = 0, coker_odd = 0;
  };
  std::vector<Counts> counts(b.blocks.size());
  parallel_for(b.blocks.size(), [&](std::size_t i) {
    const CMat x = frame.to_orthonormal(b.blocks[i].matrix);
    const CMat r_even = odd_minus.adjoint() * parity_block(x, n, 1, 0) * even_plus;
    const CMat r_odd = even_minus.adjoint() * parity_block(x, n, 0, 1) * odd_plus;
    const int rank_e = numerical_rank(r_even, 1e-9), rank_o = numerical_rank(r_odd, 1e-9);
    counts[i] = {static_cast<int>(r_even.cols()) - rank_e, static_cast<int>(r_even.rows()) - rank_e,
                 static_cast<int>(r_odd.cols()) - rank_o, static_cast<int>(r_odd.rows()) - rank_o};
  });
  IndexSplitReport r;
  for (const Counts& c : counts) {
    r.index_even += c.ker_even - c.coker_even;
    r.index_odd += c.ker_odd - c.coker_odd;
  }
  const CohomologyResult coh = twisted_cohomology(metric, bundle, h, truncation);
  r.euler = coh.b_even - coh.b_odd;
  r.signature = hermitian_form(metric, bundle, h, cplx{1.0, 0.0}, truncation).signature;
  r.even_identity = 2 * r.index_even == r.signature + r.euler;
  r.odd_identity = 2 * r.index_odd == r.signature - r.euler;
  return r;
}

}  // namespace tsig
