#include "tsig/exterior_algebra.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <memory>
#include <mutex>
#include <sstream>

#include "tsig/error.hpp"

namespace tsig {

namespace {

constexpr const char* kModule = "exterior_algebra";

std::vector<int> mask_axes0(Mask m) {
  std::vector<int> out;
  for (int j = 0; m != 0; ++j, m >>= 1)
    if (m & 1u) out.push_back(j);
  return out;
}

}  // namespace

int popcount(Mask m) noexcept { return std::popcount(m); }

int wedge_sign(Mask i, Mask j) noexcept {
  if ((i & j) != 0) return 0;
  // Count pairs (a in I, b in J) with b < a: each needs one transposition.
  int swaps = 0;
  for (Mask rest = i; rest != 0; rest &= rest - 1) {
    const Mask bit = rest & (~rest + 1);
    swaps += std::popcount(j & (bit - 1));
  }
  return (swaps & 1) ? -1 : 1;
}

MultiIndex MultiIndex::from_axes(const std::vector<int>& axes, int n) {
  MultiIndex r;
  int prev = 0;
  for (int a : axes) {
    if (a <= prev || a > n) {
      throw Error(ErrorCode::InvalidArgument, kModule, "MultiIndex",
                  "multi-index axes must be strictly increasing within 1..n");
    }
    r.mask_ |= Mask{1} << (a - 1);
    prev = a;
  }
  return r;
}

std::vector<int> MultiIndex::axes() const {
  auto a = mask_axes0(mask_);
  for (int& v : a) ++v;
  return a;
}

bool operator<(const MultiIndex& a, const MultiIndex& b) {
  const int da = a.degree(), db = b.degree();
  if (da != db) return da < db;
  return mask_axes0(a.mask_) < mask_axes0(b.mask_);
}

ExteriorBasis::ExteriorBasis(int n) : n_(n) {
  if (n < 1 || n > 12) {
    throw Error(ErrorCode::InvalidArgument, kModule, "ExteriorBasis",
                "torus dimension must lie in 1..12");
  }
  const Mask count = Mask{1} << n;
  masks_.resize(count);
  for (Mask m = 0; m < count; ++m) masks_[m] = m;
  std::sort(masks_.begin(), masks_.end(), [](Mask a, Mask b) {
    return MultiIndex::from_mask(a) < MultiIndex::from_mask(b);
  });
  index_.assign(count, 0);
  for (int i = 0; i < static_cast<int>(count); ++i) {
    index_[masks_[static_cast<std::size_t>(i)]] = i;
    parity_[popcount(masks_[static_cast<std::size_t>(i)]) & 1].push_back(i);
  }
}

const ExteriorBasis& exterior_basis(int n) {
  static std::mutex mutex;
  static std::map<int, std::unique_ptr<ExteriorBasis>> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<ExteriorBasis>(n);
  return *slot;
}

CMat wedge_matrix(int n, Mask i) {
  const auto& basis = exterior_basis(n);
  CMat w = CMat::Zero(basis.dim(), basis.dim());
  for (int col = 0; col < basis.dim(); ++col) {
    const Mask j = basis.mask(col);
    const int s = wedge_sign(i, j);
    if (s != 0) w(basis.index(i | j), col) = s;
  }
  return w;
}

FlatMetric::FlatMetric(RMat g) : g_(std::move(g)) {
  if (g_.rows() != g_.cols() || g_.rows() < 1) {
    throw Error(ErrorCode::InvalidArgument, kModule, "FlatMetric", "metric must be square");
  }
  if (!g_.allFinite() || (g_ - g_.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
    throw Error(ErrorCode::InvalidArgument, kModule, "FlatMetric",
                "metric must be finite and symmetric to 1e-12");
  }
  Eigen::SelfAdjointEigenSolver<RMat> es(g_);
  if (es.eigenvalues().minCoeff() <= 0.0) {
    throw Error(ErrorCode::InvalidArgument, kModule, "FlatMetric",
                "metric must be positive definite");
  }
  ginv_ = g_.inverse();
  ginv_ = 0.5 * (ginv_ + ginv_.transpose());
  sqrt_det_ = std::sqrt(g_.determinant());
}

FlatMetric FlatMetric::identity(int n) { return FlatMetric(RMat::Identity(n, n)); }

double FlatMetric::inverse_minor(Mask i, Mask j) const {
  const auto a = mask_axes0(i), b = mask_axes0(j);
  if (a.size() != b.size()) return 0.0;
  if (a.empty()) return 1.0;
  RMat sub(static_cast<Eigen::Index>(a.size()), static_cast<Eigen::Index>(b.size()));
  for (std::size_t r = 0; r < a.size(); ++r)
    for (std::size_t c = 0; c < b.size(); ++c) sub(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = ginv_(a[r], b[c]);
  return sub.determinant();
}

double FlatMetric::dual_norm(const RVec& xi) const {
  return std::sqrt(std::max(0.0, xi.dot(ginv_ * xi)));
}

double FlatMetric::min_dual_eigenvalue() const {
  Eigen::SelfAdjointEigenSolver<RMat> es(ginv_);
  return es.eigenvalues().minCoeff();
}

bool same_metric(const FlatMetric& a, const FlatMetric& b) {
  return a.dim() == b.dim() && (a.g_ - b.g_).cwiseAbs().maxCoeff() <= 1e-12;
}

CMat gram_matrix(const FlatMetric& metric) {
  const int n = metric.dim();
  const auto& basis = exterior_basis(n);
  CMat gm = CMat::Zero(basis.dim(), basis.dim());
  for (int r = 0; r < basis.dim(); ++r)
    for (int c = 0; c < basis.dim(); ++c)
      if (basis.degree(r) == basis.degree(c))
        gm(r, c) = metric.sqrt_det() * metric.inverse_minor(basis.mask(r), basis.mask(c));
  return gm;
}

CMat hodge_star_matrix(const FlatMetric& metric) {
  // *dx_I = sqrt(det G) sum_K det G^{-1}[I,K] sign(K, K^c) dx_{K^c}
  const int n = metric.dim();
  const auto& basis = exterior_basis(n);
  const Mask full = (Mask{1} << n) - 1;
  CMat s = CMat::Zero(basis.dim(), basis.dim());
  for (int col = 0; col < basis.dim(); ++col) {
    const Mask i = basis.mask(col);
    for (int kk = 0; kk < basis.dim(); ++kk) {
      const Mask k = basis.mask(kk);
      if (popcount(k) != popcount(i)) continue;
      const double minor = metric.inverse_minor(i, k);
      if (minor == 0.0) continue;
      s(basis.index(full ^ k), col) += metric.sqrt_det() * minor * wedge_sign(k, full ^ k);
    }
  }
  return s;
}

CMat degree_diagonal(int n, const std::function<cplx(int)>& f) {
  const auto& basis = exterior_basis(n);
  CMat d = CMat::Zero(basis.dim(), basis.dim());
  for (int i = 0; i < basis.dim(); ++i) d(i, i) = f(basis.degree(i));
  return d;
}

int sup_norm(const std::vector<int>& k) noexcept {
  int s = 0;
  for (int v : k) s = std::max(s, v < 0 ? -v : v);
  return s;
}

std::vector<std::vector<int>> lattice_box(int n, int radius) {
  std::vector<std::vector<int>> out;
  std::vector<int> k(static_cast<std::size_t>(n), -radius);
  for (;;) {
    out.push_back(k);
    int j = n - 1;
    while (j >= 0 && k[static_cast<std::size_t>(j)] == radius) {
      k[static_cast<std::size_t>(j)] = -radius;
      --j;
    }
    if (j < 0) break;
    ++k[static_cast<std::size_t>(j)];
  }
  return out;
}

Ambient Ambient::scalar(const FlatMetric& metric, int truncation) {
  return Ambient{metric, RMat::Zero(1, metric.dim()), truncation};
}

bool Ambient::is_scalar() const {
  return rank() == 1 && theta.cwiseAbs().maxCoeff() == 0.0;
}

RVec Ambient::frequency(const Mode& mode) const {
  RVec xi(dim());
  for (int j = 0; j < dim(); ++j)
    xi(j) = 2.0 * kPi * (mode.k[static_cast<std::size_t>(j)] + theta(mode.channel, j));
  return xi;
}

bool compatible(const Ambient& a, const Ambient& b) {
  return same_metric(a.metric, b.metric) && a.theta.rows() == b.theta.rows() &&
         a.theta.cols() == b.theta.cols() &&
         (a.theta - b.theta).cwiseAbs().maxCoeff() <= 1e-14;
}

void Form::add(const Mode& mode, const MultiIndex& index, cplx c) {
  if (static_cast<int>(mode.k.size()) != ambient_.dim() || mode.channel < 0 ||
      mode.channel >= ambient_.rank() || index.mask() >= (Mask{1} << ambient_.dim())) {
    throw Error(ErrorCode::AmbientMismatch, kModule, "Form::add",
                "mode or multi-index does not fit the ambient");
  }
  if (sup_norm(mode.k) > ambient_.truncation) {
    std::ostringstream os;
    os << "mode with |k|_inf = " << sup_norm(mode.k) << " exceeds truncation "
       << ambient_.truncation;
    throw Error(ErrorCode::TruncationOverflow, kModule, "Form::add", os.str());
  }
  if (!std::isfinite(c.real()) || !std::isfinite(c.imag())) {
    throw Error(ErrorCode::InvalidArgument, kModule, "Form::add", "non-finite coefficient");
  }
  coeffs_[{mode, index}] += c;
}

cplx Form::coefficient(const Mode& mode, const MultiIndex& index) const {
  const auto it = coeffs_.find({mode, index});
  return it == coeffs_.end() ? cplx{} : it->second;
}

Form Form::homogeneous(int degree) const {
  Form out(ambient_);
  for (const auto& [key, c] : coeffs_)
    if (key.second.degree() == degree) out.coeffs_.emplace(key, c);
  return out;
}

Form Form::scaled(cplx s) const {
  Form out(*this);
  for (auto& [key, c] : out.coeffs_) c *= s;
  return out;
}

Form Form::operator+(const Form& other) const {
  if (!compatible(ambient_, other.ambient_)) {
    throw Error(ErrorCode::AmbientMismatch, kModule, "Form::operator+", "incompatible ambients");
  }
  Form out(*this);
  out.ambient_.truncation = std::max(ambient_.truncation, other.ambient_.truncation);
  for (const auto& [key, c] : other.coeffs_) out.coeffs_[key] += c;
  return out;
}

Form Form::operator-(const Form& other) const { return *this + other.scaled(-1.0); }

double Form::max_abs() const noexcept {
  double m = 0.0;
  for (const auto& [key, c] : coeffs_) m = std::max(m, std::abs(c));
  return m;
}

void Form::prune(double tol) {
  for (auto it = coeffs_.begin(); it != coeffs_.end();) {
    if (std::abs(it->second) <= tol) it = coeffs_.erase(it);
    else ++it;
  }
}

Form Form::retruncated(int truncation) const {
  Form out(ambient_);
  out.ambient_.truncation = truncation;
  for (const auto& [key, c] : coeffs_) out.add(key.first, key.second, c);
  return out;
}

Form wedge(const Form& a, const Form& b, int out_truncation) {
  if (!same_metric(a.ambient().metric, b.ambient().metric)) {
    throw Error(ErrorCode::AmbientMismatch, kModule, "wedge", "metrics differ");
  }
  const bool b_scalar = b.ambient().is_scalar();
  if (!b_scalar && !a.ambient().is_scalar()) {
    throw Error(ErrorCode::AmbientMismatch, kModule, "wedge",
                "at most one factor may be bundle-valued");
  }
  Ambient amb = b_scalar ? a.ambient() : b.ambient();
  amb.truncation = out_truncation;
  Form out(amb);
  for (const auto& [ka, ca] : a.coefficients()) {
    for (const auto& [kb, cb] : b.coefficients()) {
      const int s = wedge_sign(ka.second.mask(), kb.second.mask());
      if (s == 0) continue;
      Mode m;
      m.channel = b_scalar ? ka.first.channel : kb.first.channel;
      m.k.resize(ka.first.k.size());
      for (std::size_t j = 0; j < m.k.size(); ++j) m.k[j] = ka.first.k[j] + kb.first.k[j];
      out.add(m, MultiIndex::from_mask(ka.second.mask() | kb.second.mask()),
              static_cast<double>(s) * ca * cb);
    }
  }
  out.prune();
  return out;
}

Form hodge_star(const Form& a) {
  const int n = a.ambient().dim();
  const auto& basis = exterior_basis(n);
  const CMat star = hodge_star_matrix(a.ambient().metric);
  Form out(a.ambient());
  for (const auto& [key, c] : a.coefficients()) {
    const int col = basis.index(key.second.mask());
    for (int row = 0; row < basis.dim(); ++row)
      if (star(row, col) != cplx{}) out.add(key.first, MultiIndex::from_mask(basis.mask(row)), star(row, col) * c);
  }
  out.prune();
  return out;
}

cplx inner_product(const Form& a, const Form& b) {
  if (!compatible(a.ambient(), b.ambient())) {
    throw Error(ErrorCode::AmbientMismatch, kModule, "inner_product", "incompatible ambients");
  }
  const auto& metric = a.ambient().metric;
  cplx acc{};
  // Coefficients are ordered by mode first, so matching blocks are contiguous.
  for (const auto& [ka, ca] : a.coefficients()) {
    const auto lo = b.coefficients().lower_bound({ka.first, MultiIndex::from_mask(0)});
    for (auto it = lo; it != b.coefficients().end() && it->first.first == ka.first; ++it) {
      const Mask i = ka.second.mask(), j = it->first.second.mask();
      if (popcount(i) != popcount(j)) continue;
      acc += ca * std::conj(it->second) * metric.sqrt_det() * metric.inverse_minor(i, j);
    }
  }
  return acc;
}

Form conjugate(const Form& a) {
  const Ambient& src = a.ambient();
  Ambient amb = src;
  bool shifted = false;
  for (int r = 0; r < src.rank(); ++r)
    for (int j = 0; j < src.dim(); ++j)
      if (src.theta(r, j) > 0.0) {
        amb.theta(r, j) = 1.0 - src.theta(r, j);
        shifted = true;
      }
  if (shifted) amb.truncation = src.truncation + 1;
  Form out(amb);
  for (const auto& [key, c] : a.coefficients()) {
    Mode m = key.first;
    for (int j = 0; j < src.dim(); ++j) {
      const auto jj = static_cast<std::size_t>(j);
      m.k[jj] = -m.k[jj] - (src.theta(m.channel, j) > 0.0 ? 1 : 0);
    }
    out.add(m, key.second, std::conj(c));
  }
  return out;
}

cplx pairing_integral(const Form& a, const Form& b) {
  if (!compatible(a.ambient(), b.ambient())) {
    throw Error(ErrorCode::AmbientMismatch, kModule, "pairing_integral", "incompatible ambients");
  }
  const Mask full = (Mask{1} << a.ambient().dim()) - 1;
  cplx acc{};
  for (const auto& [ka, ca] : a.coefficients()) {
    const Mask comp = full ^ ka.second.mask();
    const auto it = b.coefficients().find({ka.first, MultiIndex::from_mask(comp)});
    if (it == b.coefficients().end()) continue;
    acc += static_cast<double>(wedge_sign(ka.second.mask(), comp)) * ca * std::conj(it->second);
  }
  return acc;
}

CVec block_vector(const Form& a, const Mode& mode) {
  const auto& basis = exterior_basis(a.ambient().dim());
  CVec v = CVec::Zero(basis.dim());
  const auto lo = a.coefficients().lower_bound({mode, MultiIndex::from_mask(0)});
  for (auto it = lo; it != a.coefficients().end() && it->first.first == mode; ++it)
    v(basis.index(it->first.second.mask())) = it->second;
  return v;
}

}  // namespace tsig
