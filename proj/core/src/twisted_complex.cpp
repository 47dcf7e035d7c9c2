#include "tsig/twisted_complex.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "tsig/error.hpp"

namespace tsig {

namespace {

constexpr const char* kModule = "twisted_complex";

int content_radius(const Form& f) {
  int r = 0;
  for (const auto& [key, c] : f.coefficients()) r = std::max(r, sup_norm(key.first.k));
  return r;
}

std::vector<int> negated(const std::vector<int>& k) {
  std::vector<int> out(k.size());
  for (std::size_t j = 0; j < k.size(); ++j) out[j] = -k[j];
  return out;
}

}  // namespace

// ---------------------------------------------------------------- FluxForm

FluxForm::FluxForm(int n) : n_(n) {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, kModule, "FluxForm", "dimension must be positive");
}

FluxForm FluxForm::constant(int n, const MultiIndex& index, cplx value) {
  FluxForm h(n);
  h.add_term(std::vector<int>(static_cast<std::size_t>(n), 0), index, value);
  return h;
}

void FluxForm::add_term(const std::vector<int>& mode, const MultiIndex& index, cplx value) {
  const int d = index.degree();
  if (static_cast<int>(mode.size()) != n_ || index.mask() >= (Mask{1} << n_)) {
    throw Error(ErrorCode::InvalidArgument, kModule, "FluxForm::add_term",
                "flux term does not fit the torus dimension");
  }
  if (d == 1) {
    throw Error(ErrorCode::InvalidArgument, kModule, "FluxForm::add_term",
                "degree-1 flux must be absorbed into the flat connection");
  }
  if (d % 2 == 0 || d < 3) {
    throw Error(ErrorCode::InvalidArgument, kModule, "FluxForm::add_term",
                "flux degrees must be odd and at least 3");
  }
  if (!std::isfinite(value.real()) || !std::isfinite(value.imag())) {
    throw Error(ErrorCode::InvalidArgument, kModule, "FluxForm::add_term", "non-finite coefficient");
  }
  terms_[{mode, index.mask()}] += value;
}

FluxForm FluxForm::from_form(const Form& form) {
  FluxForm h(form.ambient().dim());
  double scale = form.max_abs();
  for (const auto& [key, c] : form.coefficients()) {
    const int d = key.second.degree();
    if (std::abs(c) <= 1e-14 * std::max(1.0, scale)) continue;
    if (d % 2 == 0) {
      throw Error(ErrorCode::InvalidArgument, kModule, "FluxForm::from_form",
                  "flux form has an even-degree part");
    }
    h.add_term(key.first.k, key.second, c);
  }
  return h;
}

std::vector<int> FluxForm::degrees() const {
  std::vector<int> out;
  for (const auto& [key, c] : terms_) out.push_back(popcount(key.second));
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

FluxForm FluxForm::component(int degree) const {
  FluxForm out(n_);
  for (const auto& [key, c] : terms_)
    if (popcount(key.second) == degree) out.terms_.emplace(key, c);
  return out;
}

bool FluxForm::is_zero(double tol) const {
  for (const auto& [key, c] : terms_)
    if (std::abs(c) > tol) return false;
  return true;
}

bool FluxForm::is_constant() const {
  for (const auto& [key, c] : terms_)
    if (c != cplx{} && sup_norm(key.first) != 0) return false;
  return true;
}

int FluxForm::mode_radius() const {
  int r = 0;
  for (const auto& [key, c] : terms_) r = std::max(r, sup_norm(key.first));
  return r;
}

bool FluxForm::is_admissible(double tol) const {
  // Real means c_{-k} = conj(c_k) after removing the phase i^{j+1}.
  for (const auto& [key, c] : terms_) {
    const int j = (popcount(key.second) - 1) / 2;
    const cplx phase = ipow(-(j + 1));
    const auto it = terms_.find({negated(key.first), key.second});
    const cplx partner = it == terms_.end() ? cplx{} : it->second;
    if (std::abs(phase * c - std::conj(phase * partner)) > tol * std::max(1.0, std::abs(c))) return false;
  }
  return true;
}

bool FluxForm::is_purely_imaginary(double tol) const {
  for (const auto& [key, c] : terms_) {
    const auto it = terms_.find({negated(key.first), key.second});
    const cplx partner = it == terms_.end() ? cplx{} : it->second;
    if (std::abs(c + std::conj(partner)) > tol * std::max(1.0, std::abs(c))) return false;
  }
  return true;
}

double FluxForm::closedness_defect() const {
  std::map<Key, cplx> dh;
  for (const auto& [key, c] : terms_) {
    for (int j = 0; j < n_; ++j) {
      const int kj = key.first[static_cast<std::size_t>(j)];
      if (kj == 0) continue;
      const Mask axis = Mask{1} << j;
      const int s = wedge_sign(axis, key.second);
      if (s != 0) dh[{key.first, axis | key.second}] += kI * (2.0 * kPi * kj * s) * c;
    }
  }
  double m = 0.0;
  for (const auto& [key, c] : dh) m = std::max(m, std::abs(c));
  return m;
}

CMat FluxForm::constant_wedge_block() const {
  if (!is_constant()) {
    throw Error(ErrorCode::NonConstantFlux, kModule, "constant_wedge_block",
                "flux couples Fourier modes");
  }
  const int dim = 1 << n_;
  CMat w = CMat::Zero(dim, dim);
  for (const auto& [key, c] : terms_)
    if (c != cplx{}) w += c * wedge_matrix(n_, key.second);
  return w;
}

Form FluxForm::as_form(const FlatMetric& metric) const {
  if (metric.dim() != n_) {
    throw Error(ErrorCode::AmbientMismatch, kModule, "FluxForm::as_form", "dimension mismatch");
  }
  Form f(Ambient::scalar(metric, mode_radius()));
  for (const auto& [key, c] : terms_) f.add(Mode{key.first, 0}, MultiIndex::from_mask(key.second), c);
  f.prune();
  return f;
}

FluxForm FluxForm::scaled(cplx s) const {
  FluxForm out(*this);
  for (auto& [key, c] : out.terms_) c *= s;
  return out;
}

FluxForm FluxForm::operator+(const FluxForm& other) const {
  if (other.n_ != n_) {
    throw Error(ErrorCode::AmbientMismatch, kModule, "FluxForm::operator+", "dimension mismatch");
  }
  FluxForm out(*this);
  for (const auto& [key, c] : other.terms_) out.terms_[key] += c;
  return out;
}

FluxForm conjugate_flux(const FluxForm& h) {
  FluxForm out(h.dim());
  for (const auto& [key, c] : h.terms())
    out.add_term(negated(key.first), MultiIndex::from_mask(key.second), std::conj(c));
  return out;
}

FluxForm rescale_flux(const FluxForm& h, cplx lambda) {
  if (lambda == cplx{}) {
    throw Error(ErrorCode::ZeroLambda, kModule, "rescale_flux", "lambda must be nonzero");
  }
  FluxForm out(h.dim());
  for (const auto& [key, c] : h.terms()) {
    const int i = (popcount(key.second) - 1) / 2;
    out.add_term(key.first, MultiIndex::from_mask(key.second), std::pow(lambda, i) * c);
  }
  return out;
}

// ------------------------------------------------------------ BlockOperator

const Block* BlockOperator::find(const Mode& mode) const {
  for (const auto& b : blocks)
    if (b.mode == mode) return &b;
  return nullptr;
}

double BlockOperator::max_abs() const {
  double m = 0.0;
  for (const auto& b : blocks) m = std::max(m, tsig::max_abs(b.matrix));
  return m;
}

std::vector<Mode> truncated_modes(const FlatBundle& bundle, int truncation) {
  if (truncation < 0) {
    throw Error(ErrorCode::InvalidArgument, kModule, "truncated_modes", "truncation must be >= 0");
  }
  std::vector<Mode> out;
  const auto box = lattice_box(bundle.dim(), truncation);
  for (int a = 0; a < bundle.rank(); ++a)
    for (const auto& k : box) out.push_back(Mode{k, a});
  return out;
}

// ----------------------------------------------------------- TwistedComplex

TwistedComplex::TwistedComplex(FlatMetric metric, FlatBundle bundle, FluxForm flux)
    : metric_(std::move(metric)), bundle_(std::move(bundle)), flux_(std::move(flux)) {
  const int n = metric_.dim();
  if (bundle_.dim() != n || flux_.dim() != n) {
    throw Error(ErrorCode::AmbientMismatch, kModule, "TwistedComplex",
                "metric, bundle and flux dimensions differ");
  }
  double scale = 1.0;
  for (const auto& [key, c] : flux_.terms()) scale = std::max(scale, std::abs(c));
  if (flux_.closedness_defect() > 1e-12 * scale) {
    throw Error(ErrorCode::FluxNotClosed, kModule, "TwistedComplex", "dH does not vanish");
  }
  gram_ = gram_matrix(metric_);
  star_ = hodge_star_matrix(metric_);
  if (flux_.is_constant()) {
    h_wedge_ = flux_.constant_wedge_block();
    minus_hbar_wedge_ = -conjugate_flux(flux_).constant_wedge_block();
  }
  adjoint_sign_ = degree_diagonal(n, [n](int q) {
    const long e = static_cast<long>(q - 1) * (n - q);
    return cplx{(e % 2 == 0) ? -1.0 : 1.0, 0.0};
  });
}

void TwistedComplex::require_constant(const char* op) const {
  if (!flux_.is_constant()) {
    throw Error(ErrorCode::NonConstantFlux, kModule, op,
                "mode-coupling flux: truncation is not a subcomplex");
  }
}

RVec TwistedComplex::frequency(const Mode& mode) const {
  RVec xi(dim());
  for (int j = 0; j < dim(); ++j)
    xi(j) = 2.0 * kPi * (mode.k[static_cast<std::size_t>(j)] + bundle_.theta()(mode.channel, j));
  return xi;
}

CMat TwistedComplex::differential(const RVec& xi) const {
  require_constant("differential");
  return flat_differential_block(dim(), xi) + h_wedge_;
}

CMat TwistedComplex::formula_adjoint(const RVec& xi) const {
  require_constant("formula_adjoint");
  return star_ * (flat_differential_block(dim(), xi) + minus_hbar_wedge_) * star_ * adjoint_sign_;
}

CMat TwistedComplex::laplacian(const RVec& xi) const {
  const CMat d = differential(xi);
  const CMat dt = tsig::gram_adjoint(d, gram_);
  return d * dt + dt * d;
}

CMat TwistedComplex::signature_operator(const RVec& xi) const {
  const CMat d = differential(xi);
  return d + tsig::gram_adjoint(d, gram_);
}

CMat parity_block(const CMat& full, int n, int row_parity, int col_parity) {
  const auto& basis = exterior_basis(n);
  const auto& rows = basis.parity_indices(row_parity);
  const auto& cols = basis.parity_indices(col_parity);
  CMat out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < cols.size(); ++c)
      out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = full(rows[r], cols[c]);
  return out;
}

namespace {

BlockOperator assemble(const TwistedComplex& tc, int truncation, int dom_parity, int cod_parity,
                       const std::function<CMat(const RVec&)>& block) {
  BlockOperator op;
  op.domain = {tc.dim(), tc.bundle().rank(), truncation, dom_parity};
  op.codomain = {tc.dim(), tc.bundle().rank(), truncation, cod_parity};
  const auto modes = truncated_modes(tc.bundle(), truncation);
  op.blocks.resize(modes.size());
  parallel_for(modes.size(), [&](std::size_t i) {
    const RVec xi = tc.frequency(modes[i]);
    op.blocks[i] = Block{modes[i], xi, block(xi)};
  });
  return op;
}

}  // namespace

BlockOperator build_twisted_differential(const FlatMetric& metric, const FlatBundle& bundle,
                                         const FluxForm& h, int truncation) {
  TwistedComplex tc(metric, bundle, h);
  if (!h.is_constant()) {
    throw Error(ErrorCode::NonConstantFlux, kModule, "build_twisted_differential",
                "use build_coupled_differential for band-limited flux");
  }
  return assemble(tc, truncation, -1, -1, [&](const RVec& xi) { return tc.differential(xi); });
}

namespace {

CoupledOperator assemble_coupled(const Ambient& domain, int codomain_truncation,
                                 const FlatBundle& bundle,
                                 const std::function<Form(const Form&)>& op) {
  const int n = domain.dim();
  const int dim = 1 << n;
  CoupledOperator out;
  out.dim = n;
  out.domain_modes = truncated_modes(bundle, domain.truncation);
  out.codomain_modes = truncated_modes(bundle, codomain_truncation);
  std::map<Mode, int> row_of;
  for (std::size_t i = 0; i < out.codomain_modes.size(); ++i) row_of[out.codomain_modes[i]] = static_cast<int>(i);
  const auto& basis = exterior_basis(n);
  std::vector<std::vector<Eigen::Triplet<cplx>>> per_col(out.domain_modes.size());
  parallel_for(out.domain_modes.size(), [&](std::size_t mi) {
    for (int b = 0; b < dim; ++b) {
      Form e(domain);
      e.add(out.domain_modes[mi], MultiIndex::from_mask(basis.mask(b)), 1.0);
      const Form img = op(e);
      for (const auto& [key, c] : img.coefficients()) {
        const auto it = row_of.find(key.first);
        if (it == row_of.end()) {
          throw Error(ErrorCode::TruncationOverflow, kModule, "assemble_coupled",
                      "image leaves the codomain truncation");
        }
        per_col[mi].emplace_back(it->second * dim + basis.index(key.second.mask()),
                                 static_cast<int>(mi) * dim + b, c);
      }
    }
  });
  std::vector<Eigen::Triplet<cplx>> all;
  for (auto& v : per_col) all.insert(all.end(), v.begin(), v.end());
  out.matrix.resize(static_cast<Eigen::Index>(out.codomain_modes.size()) * dim,
                    static_cast<Eigen::Index>(out.domain_modes.size()) * dim);
  out.matrix.setFromTriplets(all.begin(), all.end());
  return out;
}

}  // namespace

Form apply_twisted_differential(const Form& omega, const FluxForm& h) {
  const int out_k = omega.ambient().truncation + h.mode_radius();
  Form d = flat_differential(omega).retruncated(out_k);
  if (h.is_zero()) return d;
  Form hw = wedge(h.as_form(omega.ambient().metric), omega, out_k);
  Form out = d + hw;
  out.prune();
  return out;
}

CoupledOperator build_coupled_differential(const FlatMetric& metric, const FlatBundle& bundle,
                                           const FluxForm& h, int truncation) {
  TwistedComplex tc(metric, bundle, h);  // closedness check
  return assemble_coupled(bundle.ambient(metric, truncation), truncation + h.mode_radius(), bundle,
                          [&](const Form& f) { return apply_twisted_differential(f, h); });
}

BlockOperator gram_adjoint(const BlockOperator& op, const CMat& gram) {
  BlockOperator out;
  out.domain = op.codomain;
  out.codomain = op.domain;
  out.blocks.resize(op.blocks.size());
  for (std::size_t i = 0; i < op.blocks.size(); ++i) {
    out.blocks[i] = op.blocks[i];
    out.blocks[i].matrix = tsig::gram_adjoint(op.blocks[i].matrix, gram);
  }
  return out;
}

AdjointResult adjoint_twisted_differential(const FlatMetric& metric, const FlatBundle& bundle,
                                           const FluxForm& h, int truncation) {
  TwistedComplex tc(metric, bundle, h);
  AdjointResult r;
  r.formula = assemble(tc, truncation, -1, -1, [&](const RVec& xi) { return tc.formula_adjoint(xi); });
  r.gram = gram_adjoint(build_twisted_differential(metric, bundle, h, truncation), tc.gram());
  for (std::size_t i = 0; i < r.formula.blocks.size(); ++i)
    r.defect = std::max(r.defect, max_abs(r.formula.blocks[i].matrix - r.gram.blocks[i].matrix));
  if (r.defect > 1e-10) {
    std::ostringstream os;
    os << "formula adjoint and Gram adjoint differ by " << r.defect;
    throw Error(ErrorCode::AdjointMismatch, kModule, "adjoint_twisted_differential", os.str());
  }
  return r;
}

BlockOperator twisted_laplacian(const FlatMetric& metric, const FlatBundle& bundle,
                                const FluxForm& h, int truncation) {
  TwistedComplex tc(metric, bundle, h);
  if (!h.is_constant()) {
    throw Error(ErrorCode::NonConstantFlux, kModule, "twisted_laplacian",
                "mode-coupling flux: truncation is not a subcomplex");
  }
  return assemble(tc, truncation, -1, -1, [&](const RVec& xi) { return tc.laplacian(xi); });
}

KernelInfo selfadjoint_kernel(const CMat& op, const CMat& gram, double rel) {
  KernelInfo info;
  if (op.rows() == 0) {
    info.kernel = CMat(0, 0);
    return info;
  }
  OrthonormalFrame frame(gram);
  const HermitianEigen es = hermitian_eigen(frame.to_orthonormal(op));
  info.eigenvalues = es.values;
  info.tolerance = rel * std::max(es.values.cwiseAbs().maxCoeff(), 1.0);
  std::vector<Eigen::Index> cols;
  for (Eigen::Index i = 0; i < es.values.size(); ++i) {
    const double a = std::abs(es.values(i));
    if (a > info.tolerance && a < 10.0 * info.tolerance) {
      std::ostringstream os;
      os << "eigenvalue " << es.values(i) << " lies in the kernel guard band ("
         << info.tolerance << ", " << 10.0 * info.tolerance << ")";
      throw Error(ErrorCode::AmbiguousKernel, kModule, "selfadjoint_kernel", os.str());
    }
    if (a <= info.tolerance) cols.push_back(i);
  }
  CMat w(op.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) w.col(static_cast<Eigen::Index>(c)) = es.vectors.col(cols[c]);
  info.kernel = frame.vectors_from_orthonormal(w);
  return info;
}

namespace {

CMat embed_parity(const CMat& sub, int n, int parity) {
  const auto& idx = exterior_basis(n).parity_indices(parity);
  CMat full = CMat::Zero(1 << n, sub.cols());
  for (std::size_t r = 0; r < idx.size(); ++r) full.row(idx[r]) = sub.row(static_cast<Eigen::Index>(r));
  return full;
}

Form block_to_form(const Ambient& amb, const Mode& mode, const CVec& v) {
  const auto& basis = exterior_basis(amb.dim());
  Form f(amb);
  for (int i = 0; i < basis.dim(); ++i)
    if (v(i) != cplx{}) f.add(mode, MultiIndex::from_mask(basis.mask(i)), v(i));
  return f;
}

}  // namespace

CohomologyResult twisted_cohomology(const FlatMetric& metric, const FlatBundle& bundle,
                                    const FluxForm& h, int truncation) {
  TwistedComplex tc(metric, bundle, h);
  if (!h.is_constant()) {
    throw Error(ErrorCode::NonConstantFlux, kModule, "twisted_cohomology",
                "cohomology is only computed for constant flux");
  }
  const int n = tc.dim();
  const auto modes = truncated_modes(bundle, truncation);
  struct Slot {
    KernelInfo parity[2];
  };
  std::vector<Slot> slots(modes.size());
  CMat gram_p[2] = {parity_block(tc.gram(), n, 0, 0), parity_block(tc.gram(), n, 1, 1)};
  parallel_for(modes.size(), [&](std::size_t i) {
    const CMat lap = tc.laplacian(tc.frequency(modes[i]));
    for (int p = 0; p < 2; ++p) slots[i].parity[p] = selfadjoint_kernel(parity_block(lap, n, p, p), gram_p[p]);
  });
  CohomologyResult r;
  r.verified_mode_radius = truncation;
  const Ambient amb = tc.ambient(truncation);
  for (std::size_t i = 0; i < modes.size(); ++i) {
    for (int p = 0; p < 2; ++p) {
      const KernelInfo& info = slots[i].parity[p];
      r.kernel_tolerance = std::max(r.kernel_tolerance, info.tolerance);
      if (info.kernel.cols() == 0) continue;
      (p == 0 ? r.b_even : r.b_odd) += static_cast<int>(info.kernel.cols());
      HarmonicBlock hb{modes[i], p, embed_parity(info.kernel, n, p)};
      for (Eigen::Index c = 0; c < hb.vectors.cols(); ++c)
        r.harmonic_basis.push_back(block_to_form(amb, modes[i], hb.vectors.col(c)));
      r.harmonic_blocks.push_back(std::move(hb));
    }
  }
  return r;
}

// ------------------------------------------------------------------- gauge

Form exterior_exponential(const Form& b) {
  if (!b.ambient().is_scalar()) {
    throw Error(ErrorCode::AmbientMismatch, kModule, "exterior_exponential", "B must be scalar-valued");
  }
  cplx b0{};
  Form rest(b.ambient());
  for (const auto& [key, c] : b.coefficients()) {
    const int d = key.second.degree();
    if (d % 2 != 0) {
      throw Error(ErrorCode::InvalidArgument, kModule, "exterior_exponential", "B must be even");
    }
    if (d == 0) {
      if (sup_norm(key.first.k) != 0 && std::abs(c) > 0.0) {
        throw Error(ErrorCode::InvalidArgument, kModule, "exterior_exponential",
                    "degree-0 part of B must be constant");
      }
      b0 += c;
    } else {
      rest.add(key.first, key.second, c);
    }
  }
  const int n = b.ambient().dim();
  Form one(Ambient::scalar(b.ambient().metric, 0));
  one.add(Mode{std::vector<int>(static_cast<std::size_t>(n), 0), 0}, MultiIndex{}, 1.0);
  Form acc = one;
  Form power = one;
  const int rb = content_radius(rest);
  for (int j = 1; 2 * j <= n; ++j) {
    power = wedge(power, rest, content_radius(power) + rb).scaled(1.0 / j);
    if (power.coefficients().empty()) break;
    acc = acc + power;
  }
  acc = acc.scaled(std::exp(b0));
  acc.prune();
  return acc;
}

GaugeResult gauge_transform(const FlatMetric& metric, const FlatBundle& bundle, const Form& b,
                            const FluxForm& h, int truncation, int test_vectors, unsigned seed) {
  if (!same_metric(b.ambient().metric, metric)) {
    throw Error(ErrorCode::AmbientMismatch, kModule, "gauge_transform", "B lives on another torus");
  }
  TwistedComplex tc(metric, bundle, h);
  // With nabla^H = nabla + H^, the identity holds for H' = H - dB only with e^{-B}.
  const Form eb = exterior_exponential(b.scaled(-1.0));
  const Form db = flat_differential(b);
  GaugeResult r{h - FluxForm::from_form(db), {}, 0.0};
  const int re = content_radius(eb);
  auto eps = [&](const Form& v) { return wedge(eb, v, v.ambient().truncation + re); };
  r.intertwiner = assemble_coupled(bundle.ambient(metric, truncation), truncation + re, bundle, eps);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto modes = truncated_modes(bundle, truncation);
  const auto& basis = exterior_basis(metric.dim());
  for (int t = 0; t < test_vectors; ++t) {
    Form v(bundle.ambient(metric, truncation));
    for (const auto& m : modes)
      for (int i = 0; i < basis.dim(); ++i)
        v.add(m, MultiIndex::from_mask(basis.mask(i)), {normal(rng), normal(rng)});
    v = v.scaled(1.0 / v.max_abs());
    const Form lhs = eps(apply_twisted_differential(v, r.transformed));
    const Form rhs = apply_twisted_differential(eps(v), h);
    r.defect = std::max(r.defect, (lhs - rhs).max_abs());
  }
  return r;
}

double scaling_conjugation_check(const FlatMetric& metric, const FlatBundle& bundle,
                                 const FluxForm& h, cplx lambda, int truncation) {
  if (std::abs(std::abs(lambda) - 1.0) > 1e-12) {
    throw Error(ErrorCode::InvalidArgument, kModule, "scaling_conjugation_check",
                "lambda must lie on the unit circle");
  }
  TwistedComplex t0(metric, bundle, h);
  TwistedComplex t1(metric, bundle, rescale_flux(h, lambda));
  if (!h.is_constant()) {
    throw Error(ErrorCode::NonConstantFlux, kModule, "scaling_conjugation_check",
                "constant flux required");
  }
  const int n = metric.dim();
  const CMat c = degree_diagonal(n, [&](int p) { return std::pow(lambda, p / 2); });
  const CMat cbar = degree_diagonal(n, [&](int p) { return std::pow(std::conj(lambda), p / 2); });
  const auto modes = truncated_modes(bundle, truncation);
  std::vector<double> defect(modes.size(), 0.0);
  parallel_for(modes.size(), [&](std::size_t i) {
    const RVec xi = t0.frequency(modes[i]);
    defect[i] = max_abs(c * t0.laplacian(xi) * cbar - t1.laplacian(xi));
  });
  return defect.empty() ? 0.0 : *std::max_element(defect.begin(), defect.end());
}

// ------------------------------------------------------------------ Kunneth

namespace {

FluxForm pull_back(const FluxForm& h, int n_total, int offset) {
  FluxForm out(n_total);
  for (const auto& [key, c] : h.terms()) {
    std::vector<int> k(static_cast<std::size_t>(n_total), 0);
    for (std::size_t j = 0; j < key.first.size(); ++j) k[static_cast<std::size_t>(offset) + j] = key.first[j];
    out.add_term(k, MultiIndex::from_mask(key.second << offset), c);
  }
  return out;
}

Form external_product(const Form& a, const Form& b, const Ambient& target) {
  const int n1 = a.ambient().dim();
  const int r2 = b.ambient().rank();
  Form out(target);
  for (const auto& [ka, ca] : a.coefficients()) {
    for (const auto& [kb, cb] : b.coefficients()) {
      Mode m;
      m.k = ka.first.k;
      m.k.insert(m.k.end(), kb.first.k.begin(), kb.first.k.end());
      m.channel = ka.first.channel * r2 + kb.first.channel;
      out.add(m, MultiIndex::from_mask(ka.second.mask() | (kb.second.mask() << n1)), ca * cb);
    }
  }
  return out;
}

}  // namespace

KunnethReport kunneth_check(const KunnethFactor& first, const KunnethFactor& second, int truncation) {
  const int n1 = first.metric.dim(), n2 = second.metric.dim(), n = n1 + n2;
  RMat g = RMat::Zero(n, n);
  g.topLeftCorner(n1, n1) = first.metric.g();
  g.bottomRightCorner(n2, n2) = second.metric.g();
  const FlatMetric metric(g);

  // The second factor enters through conj(omega_2), a section of the dual.
  const FlatBundle dual2 = dual_bundle(second.bundle);
  RMat theta(first.bundle.rank() * dual2.rank(), n);
  for (int a = 0; a < first.bundle.rank(); ++a)
    for (int b = 0; b < dual2.rank(); ++b) {
      theta.row(a * dual2.rank() + b) << first.bundle.theta().row(a), dual2.theta().row(b);
    }
  const FlatBundle bundle(theta);
  const FluxForm h1 = pull_back(first.flux, n, 0);
  const FluxForm flux = h1 + pull_back(conjugate_flux(second.flux), n, n1);
  const FluxForm flux_unconj = h1 + pull_back(second.flux, n, n1);

  const CohomologyResult c1 = twisted_cohomology(first.metric, first.bundle, first.flux, truncation);
  const CohomologyResult c2 = twisted_cohomology(second.metric, second.bundle, second.flux, truncation);
  const CohomologyResult cp = twisted_cohomology(metric, bundle, flux, truncation);

  KunnethReport r;
  r.b_even = cp.b_even;
  r.b_odd = cp.b_odd;
  r.expected_even = c1.b_even * c2.b_even + c1.b_odd * c2.b_odd;
  r.expected_odd = c1.b_even * c2.b_odd + c1.b_odd * c2.b_even;
  r.dimensions_match = r.b_even == r.expected_even && r.b_odd == r.expected_odd;

  const Ambient target = bundle.ambient(metric, truncation + 1);
  for (const Form& w1 : c1.harmonic_basis) {
    for (const Form& w2 : c2.harmonic_basis) {
      const Form prod = external_product(w1, conjugate(w2), target);
      r.cocycle_defect = std::max(r.cocycle_defect, apply_twisted_differential(prod, flux).max_abs());
      r.unconjugated_defect =
          std::max(r.unconjugated_defect, apply_twisted_differential(prod, flux_unconj).max_abs());
    }
  }
  return r;
}

// ----------------------------------------------------------------- Poincare

PoincareReport poincare_pairing(const FlatMetric& metric, const FlatBundle& bundle,
                                const FluxForm& h, int truncation) {
  const FluxForm dual_flux = conjugate_flux(h).scaled(-1.0);
  const CohomologyResult a = twisted_cohomology(metric, bundle, h, truncation);
  const CohomologyResult b = twisted_cohomology(metric, bundle, dual_flux, truncation);
  const CohomologyResult d = twisted_cohomology(metric, dual_bundle(bundle), dual_flux, truncation);
  PoincareReport r;
  const auto na = static_cast<Eigen::Index>(a.harmonic_basis.size());
  const auto nb = static_cast<Eigen::Index>(b.harmonic_basis.size());
  r.pairing = CMat::Zero(na, nb);
  for (Eigen::Index i = 0; i < na; ++i)
    for (Eigen::Index j = 0; j < nb; ++j)
      r.pairing(i, j) = pairing_integral(a.harmonic_basis[static_cast<std::size_t>(i)],
                                         b.harmonic_basis[static_cast<std::size_t>(j)]);
  r.dim_even = a.b_even;
  r.dim_odd = a.b_odd;
  const bool n_even = metric.dim() % 2 == 0;
  r.dual_dim_even = n_even ? d.b_even : d.b_odd;
  r.dual_dim_odd = n_even ? d.b_odd : d.b_even;
  r.dimensions_match = r.dim_even == r.dual_dim_even && r.dim_odd == r.dual_dim_odd;
  if (na == 0 && nb == 0) {
    r.nondegenerate = true;
  } else if (na == nb) {
    Eigen::JacobiSVD<CMat> svd(r.pairing);
    r.sigma_min = svd.singularValues()(na - 1);
    r.nondegenerate = r.sigma_min > 1e-8;
  }
  return r;
}

}  // namespace tsig
