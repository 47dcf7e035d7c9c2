#include "tsig/spectral.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <boost/math/quadrature/gauss.hpp>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "tsig/error.hpp"

namespace tsig {

namespace {

constexpr const char* kModule = "spectral";
constexpr double kKernelRel = 1e-9;
constexpr double kDelta = 1e-7;
constexpr double kClusterTol = 1e-8;
constexpr double kOverlapThreshold = 0.7;
constexpr double kLocalize = 1e-6;
constexpr double kMinStep = 1e-9;
constexpr int kCauchyPoints = 32;

double spectral_norm(const CMat& a) {
  if (a.size() == 0) return 0.0;
  Eigen::JacobiSVD<CMat> svd(a);
  return svd.singularValues()(0);
}

CMat even_rows_cols(const CMat& full, int n) { return parity_block(full, n, 0, 0); }

// Signature with the kernel guard band; zero modes do not contribute.
int guarded_signature(const RVec& values, const char* op) {
  const double top = values.size() ? values.cwiseAbs().maxCoeff() : 0.0;
  const double eps = kKernelRel * std::max(top, 1.0);
  int sig = 0;
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    const double a = std::abs(values(i));
    if (a > eps && a < 10.0 * eps) {
      std::ostringstream os;
      os << "eigenvalue " << values(i) << " inside the kernel guard band (" << eps << ", " << 10 * eps << ")";
      throw Error(ErrorCode::AmbiguousKernel, kModule, op, os.str());
    }
    if (a > eps) sig += values(i) > 0 ? 1 : -1;
  }
  return sig;
}

int count_below(const RVec& values, double level) {
  int c = 0;
  for (Eigen::Index i = 0; i < values.size(); ++i) c += values(i) < level ? 1 : 0;
  return c;
}

bool is_zero_frequency(const RVec& xi) { return xi.cwiseAbs().maxCoeff() < 1e-12; }

// Nodes and weights of the Boost Gauss-Legendre rule on [-1, 1].
template <int N>
std::vector<std::pair<double, double>> gauss_rule() {
  using rule = boost::math::quadrature::gauss<double, N>;
  const auto& x = rule::abscissa();
  const auto& w = rule::weights();
  std::vector<std::pair<double, double>> out;
  for (std::size_t i = 0; i < x.size(); ++i) {
    out.emplace_back(x[i], w[i]);
    if (x[i] != 0.0) out.emplace_back(-x[i], w[i]);
  }
  return out;
}

struct Direction {
  RVec omega;
  double weight;
};

// Product rule on S^{n-1}: Gauss-Legendre in the cosines of the n-2 polar
// angles and the trapezoid rule with 2N points in the azimuth.
std::vector<Direction> sphere_rule(int n, const std::vector<std::pair<double, double>>& gl) {
  const int azimuth = 2 * static_cast<int>(gl.size());
  std::vector<Direction> out;
  std::vector<std::size_t> idx(static_cast<std::size_t>(n - 2), 0);
  while (true) {
    RVec omega(n);
    double prefix = 1.0, weight = 1.0;
    for (int j = 0; j < n - 2; ++j) {
      const auto [t, w] = gl[idx[static_cast<std::size_t>(j)]];
      omega(j) = prefix * t;
      const double s = std::sqrt(std::max(0.0, 1.0 - t * t));
      weight *= w * std::pow(s, n - 3 - j);
      prefix *= s;
    }
    for (int a = 0; a < azimuth; ++a) {
      const double phi = 2.0 * kPi * a / azimuth;
      RVec o = omega;
      o(n - 2) = prefix * std::cos(phi);
      o(n - 1) = prefix * std::sin(phi);
      out.push_back({o, weight * 2.0 * kPi / azimuth});
    }
    int j = n - 3;
    while (j >= 0 && ++idx[static_cast<std::size_t>(j)] == gl.size()) idx[static_cast<std::size_t>(j--)] = 0;
    if (j < 0) break;
  }
  return out;
}

// eps^n coefficient of psi(eps) = -sum_i s_i log(s_i mu_i), mu_i the
// eigenvalues of M1 + eps M0, s_i = sign Re mu_i, by a Cauchy trapezoid rule.
double anomaly_density(const CMat& m1, const CMat& m0, double m0_norm, int n, bool& symbol_balanced) {
  const HermitianEigen es = hermitian_eigen(m1);
  int sig = 0;
  double gap = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < es.values.size(); ++i) {
    sig += es.values(i) > 0 ? 1 : -1;
    gap = std::min(gap, std::abs(es.values(i)));
  }
  if (sig != 0) symbol_balanced = false;
  const double radius = 0.25 * gap / m0_norm;
  cplx acc{};
  Eigen::ComplexEigenSolver<CMat> solver;
  for (int j = 0; j < kCauchyPoints; ++j) {
    const cplx eps = std::polar(radius, 2.0 * kPi * j / kCauchyPoints);
    solver.compute(m1 + eps * m0, false);
    cplx psi{};
    for (Eigen::Index i = 0; i < solver.eigenvalues().size(); ++i) {
      const cplx mu = solver.eigenvalues()(i);
      const double s = mu.real() > 0 ? 1.0 : -1.0;
      psi -= s * std::log(s * mu);
    }
    acc += psi / std::pow(eps, n);
  }
  return (acc / static_cast<double>(kCauchyPoints)).real();
}

template <int N>
double sphere_integral(const OddSignatureOperator& op, bool& balanced) {
  const int n = op.dim();
  const auto dirs = sphere_rule(n, gauss_rule<N>());
  std::vector<double> vals(dirs.size(), 0.0);
  std::vector<char> ok(dirs.size(), 1);
  const CMat& m0 = op.constant_part();
  parallel_for(dirs.size(), [&](std::size_t i) {
    bool b = true;
    const CMat m1 = op.hermitian_even_block(dirs[i].omega) - m0;
    vals[i] = dirs[i].weight * anomaly_density(m1, m0, op.constant_part_norm(), n, b);
    ok[i] = b ? 1 : 0;
  });
  for (char c : ok) balanced = balanced && c != 0;
  return std::accumulate(vals.begin(), vals.end(), 0.0);
}

void require_weyl_truncation(const FlatMetric& metric, int truncation, double bound, const char* op) {
  const double reach = 2.0 * kPi * truncation * std::sqrt(metric.min_dual_eigenvalue());
  if (!(reach > bound)) {
    std::ostringstream os;
    os << "modes outside |k|_inf <= " << truncation << " reach |xi| >= " << reach
       << ", not above the constant part norm " << bound;
    throw Error(ErrorCode::TruncationOverflow, kModule, op, os.str());
  }
}

EtaEstimate eta_symmetry(const OddSignatureOperator& op) {
  const auto& modes = op.modes();
  const RMat& theta = op.complex().bundle().theta();
  const int rank = static_cast<int>(theta.rows());
  std::vector<int> contribution(modes.size(), 0);
  std::vector<double> mismatch(modes.size(), 0.0);
  std::vector<std::string> failure(modes.size());
  parallel_for(modes.size(), [&](std::size_t i) {
    const RVec xi = op.complex().frequency(modes[i]);
    const RVec ev = hermitian_eigen(op.hermitian_even_block(xi)).values;
    if (is_zero_frequency(xi)) {
      contribution[i] = guarded_signature(ev, "eta_invariant");
      return;
    }
    const double tol = 1e-8 * std::max(1.0, ev.cwiseAbs().maxCoeff());
    const double self = (ev + ev.reverse()).cwiseAbs().maxCoeff();
    if (self <= tol) {
      mismatch[i] = self;
      return;
    }
    bool partner = false;
    for (int b = 0; b < rank && !partner; ++b) {
      bool dual = true;
      for (Eigen::Index j = 0; j < theta.cols(); ++j) {
        const double s = theta(modes[i].channel, j) + theta(b, j);
        if (std::abs(s - std::round(s)) > 1e-12) dual = false;
      }
      partner = dual;
    }
    if (!partner) {
      failure[i] = "no channel with dual holonomy to pair the block";
      return;
    }
    const RVec ew = hermitian_eigen(op.hermitian_even_block(-xi)).values;
    mismatch[i] = (ev + ew.reverse()).cwiseAbs().maxCoeff();
    if (mismatch[i] > tol) {
      std::ostringstream os;
      os << "spectra at xi and -xi differ from negatives by " << mismatch[i];
      failure[i] = os.str();
    }
  });
  for (std::size_t i = 0; i < modes.size(); ++i) {
    if (!failure[i].empty()) throw Error(ErrorCode::SymmetryNotDetected, kModule, "eta_invariant", failure[i]);
  }
  EtaEstimate e;
  e.method = to_string(EtaMethod::ModeSymmetryExact);
  e.truncation = op.truncation();
  e.value = std::accumulate(contribution.begin(), contribution.end(), 0);
  e.error_estimate = mismatch.empty() ? 0.0 : *std::max_element(mismatch.begin(), mismatch.end());
  return e;
}

EtaEstimate eta_circle(const OddSignatureOperator& op) {
  // Eigenvalues alpha (k + theta): the Hurwitz values give
  // eta = sign(alpha) (1 - 2 theta) for theta in (0, 1), 0 for theta = 0.
  RVec unit(1);
  unit(0) = 2.0 * kPi;
  const double alpha = op.hermitian_even_block(unit)(0, 0).real() / (2.0 * kPi);
  const RMat& theta = op.complex().bundle().theta();
  EtaEstimate e;
  e.method = to_string(EtaMethod::ZetaFinitePart);
  e.truncation = op.truncation();
  for (Eigen::Index a = 0; a < theta.rows(); ++a) {
    const double t = theta(a, 0);
    if (t > 0.0) e.value += (alpha > 0 ? 1.0 : -1.0) * (1.0 - 2.0 * t);
  }
  return e;
}

EtaEstimate eta_finite_part(const OddSignatureOperator& op) {
  const int n = op.dim();
  if (n == 1) return eta_circle(op);
  if (n != 3 && n != 5) {
    throw Error(ErrorCode::UnsupportedDimension, kModule, "eta_invariant",
                "the finite-part quadrature is implemented for dimensions 1, 3 and 5");
  }
  const double m0_norm = op.constant_part_norm();
  require_weyl_truncation(op.complex().metric(), op.truncation(), m0_norm, "eta_invariant");

  const auto& modes = op.modes();
  std::vector<int> sig(modes.size(), 0);
  parallel_for(modes.size(), [&](std::size_t i) {
    const RVec xi = op.complex().frequency(modes[i]);
    sig[i] = guarded_signature(hermitian_eigen(op.hermitian_even_block(xi)).values, "eta_invariant");
  });

  EtaEstimate e;
  e.method = to_string(EtaMethod::ZetaFinitePart);
  e.truncation = op.truncation();
  e.value = std::accumulate(sig.begin(), sig.end(), 0);
  if (m0_norm == 0.0) return e;

  bool balanced = true;
  double coarse = 0.0, fine = 0.0;
  if (n == 3) {
    coarse = sphere_integral<20>(op, balanced);
    fine = sphere_integral<30>(op, balanced);
    e.grid = {20.0, 30.0};
  } else {
    coarse = sphere_integral<7>(op, balanced);
    fine = sphere_integral<10>(op, balanced);
    e.grid = {7.0, 10.0};
  }
  if (!balanced) {
    throw Error(ErrorCode::InvalidArgument, kModule, "eta_invariant",
                "the principal symbol has nonzero signature on the unit sphere");
  }
  const double scale = op.complex().bundle().rank() / std::pow(2.0 * kPi, n);
  e.value += scale * fine;
  // The resolution difference can vanish to roundoff; floor it at the
  // accumulated rounding of the quadrature sum.
  e.error_estimate = scale * std::abs(fine - coarse) + 64.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(e.value));
  return e;
}

EtaEstimate eta_extrapolated(const OddSignatureOperator& op) {
  const std::vector<double> grid = {3.0, 2.5, 2.0, 1.5, 1.0};
  std::vector<RVec> spectra(op.modes().size());
  parallel_for(op.modes().size(), [&](std::size_t i) {
    spectra[i] = hermitian_eigen(op.hermitian_even_block(op.complex().frequency(op.modes()[i]))).values;
  });
  double top = 0.0;
  for (const RVec& v : spectra)
    if (v.size()) top = std::max(top, v.cwiseAbs().maxCoeff());
  const double eps = kKernelRel * std::max(top, 1.0);
  RVec sums = RVec::Zero(static_cast<Eigen::Index>(grid.size()));
  for (const RVec& v : spectra)
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      if (std::abs(v(i)) <= eps) continue;
      for (std::size_t g = 0; g < grid.size(); ++g)
        sums(static_cast<Eigen::Index>(g)) += (v(i) > 0 ? 1.0 : -1.0) * std::pow(std::abs(v(i)), -grid[g]);
    }
  RMat design(static_cast<Eigen::Index>(grid.size()), 3);
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const auto r = static_cast<Eigen::Index>(g);
    design(r, 0) = 1.0;
    design(r, 1) = grid[g];
    design(r, 2) = grid[g] * grid[g];
  }
  const RVec coef = design.colPivHouseholderQr().solve(sums);
  const RVec resid = design * coef - sums;
  EtaEstimate e;
  e.method = to_string(EtaMethod::ZetaExtrapolated);
  e.truncation = op.truncation();
  e.grid = grid;
  e.value = coef(0);
  e.error_estimate = std::sqrt(resid.squaredNorm() / static_cast<double>(grid.size()));
  e.warnings.push_back("partial sums over a finite truncation; the extrapolation does not control the tail");
  return e;
}

// ---------------------------------------------------------------- tracking

struct Snapshot {
  double u = 0.0;
  HermitianEigen eig;
};

struct PathBlock {
  CMat a0, a1;
  Mode mode;
  Snapshot at(double u) const { return {u, hermitian_eigen((1.0 - u) * a0 + u * a1)}; }
};

std::vector<std::vector<Eigen::Index>> clusters(const RVec& values) {
  std::vector<std::vector<Eigen::Index>> out;
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (out.empty() || values(i) - values(out.back().back()) > kClusterTol) out.emplace_back();
    out.back().push_back(i);
  }
  return out;
}

struct Tracker {
  const PathBlock& block;
  std::vector<Crossing>& crossings;
  int evaluations = 0;

  // Matches clusters of a with clusters of b through subspace overlaps and
  // returns connected components, or nothing when the match is ambiguous.
  std::optional<std::vector<std::pair<std::vector<Eigen::Index>, std::vector<Eigen::Index>>>> match(
      const Snapshot& a, const Snapshot& b) const {
    const auto ca = clusters(a.eig.values), cb = clusters(b.eig.values);
    const RMat overlap = (b.eig.vectors.adjoint() * a.eig.vectors).cwiseAbs2();
    RMat w = RMat::Zero(static_cast<Eigen::Index>(ca.size()), static_cast<Eigen::Index>(cb.size()));
    for (std::size_t i = 0; i < ca.size(); ++i)
      for (std::size_t j = 0; j < cb.size(); ++j)
        for (Eigen::Index x : ca[i])
          for (Eigen::Index y : cb[j]) w(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) += overlap(y, x);
    // Union-find over the bipartite graph of significant overlaps.
    const std::size_t na = ca.size(), total = ca.size() + cb.size();
    std::vector<std::size_t> parent(total);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](std::size_t x) {
      while (parent[x] != x) x = parent[x] = parent[parent[x]];
      return x;
    };
    for (std::size_t i = 0; i < ca.size(); ++i)
      for (std::size_t j = 0; j < cb.size(); ++j)
        if (w(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) >= 1.0 - kOverlapThreshold)
          parent[find(i)] = find(na + j);
    std::map<std::size_t, std::pair<std::vector<Eigen::Index>, std::vector<Eigen::Index>>> comps;
    std::map<std::size_t, double> captured;
    for (std::size_t i = 0; i < ca.size(); ++i) {
      auto& c = comps[find(i)];
      c.first.insert(c.first.end(), ca[i].begin(), ca[i].end());
    }
    for (std::size_t j = 0; j < cb.size(); ++j) {
      auto& c = comps[find(na + j)];
      c.second.insert(c.second.end(), cb[j].begin(), cb[j].end());
    }
    for (std::size_t i = 0; i < ca.size(); ++i) {
      double cap = 0.0;
      for (std::size_t j = 0; j < cb.size(); ++j)
        if (find(i) == find(na + j)) cap += w(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      if (cap < kOverlapThreshold * static_cast<double>(ca[i].size())) return std::nullopt;
    }
    std::vector<std::pair<std::vector<Eigen::Index>, std::vector<Eigen::Index>>> out;
    for (auto& [root, c] : comps) {
      if (c.first.size() != c.second.size()) return std::nullopt;
      out.push_back(std::move(c));
    }
    return out;
  }

  void refine(const Snapshot& a, const Snapshot& b) {
    const auto comps = match(a, b);
    const double width = b.u - a.u;
    if (!comps) {
      if (width <= kMinStep) {
        std::ostringstream os;
        os << "eigenvector overlaps stay below " << kOverlapThreshold << " at u = " << a.u;
        throw Error(ErrorCode::TrackingAmbiguity, kModule, "spectral_flow", os.str());
      }
      split(a, b);
      return;
    }
    bool active = false;
    int net = 0;
    for (const auto& [ia, ib] : *comps) {
      double lo = std::numeric_limits<double>::infinity(), hi = -lo;
      int below_a = 0, below_b = 0;
      for (Eigen::Index x : ia) {
        lo = std::min(lo, a.eig.values(x));
        hi = std::max(hi, a.eig.values(x));
        below_a += a.eig.values(x) < -kDelta ? 1 : 0;
      }
      for (Eigen::Index y : ib) {
        lo = std::min(lo, b.eig.values(y));
        hi = std::max(hi, b.eig.values(y));
        below_b += b.eig.values(y) < -kDelta ? 1 : 0;
      }
      if (lo < -kDelta && hi >= -kDelta) active = true;
      net += below_a - below_b;
    }
    if (!active) return;
    if (width > kLocalize) {
      split(a, b);
      return;
    }
    if (net != 0) crossings.push_back({0.5 * (a.u + b.u), net > 0 ? 1 : -1, std::abs(net), block.mode});
  }

  void split(const Snapshot& a, const Snapshot& b) {
    const Snapshot mid = block.at(0.5 * (a.u + b.u));
    ++evaluations;
    refine(a, mid);
    refine(mid, b);
  }
};

}  // namespace

// ---------------------------------------------------------------- operator

OddSignatureOperator::OddSignatureOperator(FlatMetric metric, FlatBundle bundle, FluxForm flux, int truncation)
    : complex_(std::move(metric), std::move(bundle), std::move(flux)),
      truncation_(truncation),
      modes_(truncated_modes(complex_.bundle(), truncation)),
      even_gram_(even_rows_cols(complex_.gram(), complex_.dim())),
      even_frame_(even_gram_) {
  const int n = complex_.dim();
  if (n % 2 == 0) {
    throw Error(ErrorCode::EvenDimension, kModule, "OddSignatureOperator", "the torus dimension must be odd");
  }
  if (!complex_.flux().is_constant()) {
    throw Error(ErrorCode::NonConstantFlux, kModule, "OddSignatureOperator",
                "mode-coupling flux: use flux_representative_experiment");
  }
  if (truncation < 0) throw Error(ErrorCode::InvalidArgument, kModule, "OddSignatureOperator", "negative truncation");
  h_wedge_ = complex_.flux().constant_wedge_block();
  minus_hbar_wedge_ = -conjugate_flux(complex_.flux()).constant_wedge_block();
  m0_ = hermitian_even_block(RVec::Zero(n));
  m0_norm_ = spectral_norm(m0_);
}

CMat OddSignatureOperator::full_block(const RVec& xi) const {
  const int n = dim();
  const int mm = m();
  const CMat flat = flat_differential_block(n, xi);
  const CMat& star = complex_.star();
  const CMat parity = degree_diagonal(n, [](int p) { return cplx{p % 2 == 0 ? 1.0 : -1.0, 0.0}; });
  const CMat phase = degree_diagonal(n, [mm](int p) { return ipow(mm + static_cast<long>(p) * (p + 1)); });
  return ((flat + h_wedge_) * star - star * (flat + minus_hbar_wedge_) * parity) * phase;
}

CMat OddSignatureOperator::even_block(const RVec& xi) const { return even_rows_cols(full_block(xi), dim()); }

CMat OddSignatureOperator::hermitian_even_block(const RVec& xi) const {
  return even_frame_.to_orthonormal(even_block(xi));
}

CMat OddSignatureOperator::t_matrix() const {
  const int mm = m();
  return complex_.star() * degree_diagonal(dim(), [mm](int p) { return ipow(mm + static_cast<long>(p) * (p + 1)); });
}

double OddSignatureOperator::hermiticity_defect() const {
  std::vector<double> d(modes_.size(), 0.0);
  parallel_for(modes_.size(), [&](std::size_t i) {
    const CMat h = hermitian_even_block(complex_.frequency(modes_[i]));
    d[i] = max_abs(h - h.adjoint());
  });
  return d.empty() ? 0.0 : *std::max_element(d.begin(), d.end());
}

double OddSignatureOperator::t_conjugation_defect() const {
  const CMat t = t_matrix();
  std::vector<double> d(modes_.size(), 0.0);
  parallel_for(modes_.size(), [&](std::size_t i) {
    const CMat full = full_block(complex_.frequency(modes_[i]));
    d[i] = max_abs(t * full * t - full);
  });
  return d.empty() ? 0.0 : *std::max_element(d.begin(), d.end());
}

std::vector<SpectralLine> spectrum(const OddSignatureOperator& op) {
  const auto& modes = op.modes();
  std::vector<RVec> values(modes.size());
  parallel_for(modes.size(), [&](std::size_t i) {
    values[i] = hermitian_eigen(op.hermitian_even_block(op.complex().frequency(modes[i]))).values;
  });
  std::vector<SpectralLine> out;
  for (std::size_t i = 0; i < modes.size(); ++i)
    for (Eigen::Index j = 0; j < values[i].size(); ++j) out.push_back({values[i](j), modes[i], 1});
  std::stable_sort(out.begin(), out.end(),
                   [](const SpectralLine& a, const SpectralLine& b) { return a.value < b.value; });
  return out;
}

std::string to_string(EtaMethod method) {
  switch (method) {
    case EtaMethod::Auto: return "auto";
    case EtaMethod::ModeSymmetryExact: return "mode-symmetry-exact";
    case EtaMethod::ZetaExtrapolated: return "zeta-extrapolated";
    case EtaMethod::ZetaFinitePart: return "zeta-finite-part";
  }
  return "auto";
}

EtaMethod eta_method_from_string(const std::string& name) {
  for (EtaMethod m : {EtaMethod::Auto, EtaMethod::ModeSymmetryExact, EtaMethod::ZetaExtrapolated,
                      EtaMethod::ZetaFinitePart})
    if (to_string(m) == name) return m;
  throw Error(ErrorCode::InvalidArgument, kModule, "eta_method_from_string", "unknown eta method '" + name + "'");
}

EtaEstimate eta_invariant(const OddSignatureOperator& op, EtaMethod method) {
  switch (method) {
    case EtaMethod::ModeSymmetryExact: return eta_symmetry(op);
    case EtaMethod::ZetaExtrapolated: return eta_extrapolated(op);
    case EtaMethod::ZetaFinitePart: return eta_finite_part(op);
    case EtaMethod::Auto: break;
  }
  try {
    return eta_symmetry(op);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::SymmetryNotDetected) throw;
    EtaEstimate r = eta_finite_part(op);
    r.warnings.push_back(std::string("mode symmetry not detected (") + e.what() + "); used the zeta finite part");
    return r;
  }
}

EtaEstimate rho_invariant(const FlatMetric& metric, const FlatBundle& bundle, const FluxForm& h, int truncation,
                          EtaMethod method) {
  const OddSignatureOperator twisted(metric, bundle, h, truncation);
  const OddSignatureOperator plain(metric, FlatBundle::trivial(metric.dim(), 1), h, truncation);
  const EtaEstimate a = eta_invariant(twisted, method);
  const EtaEstimate b = eta_invariant(plain, method);
  const double rank = bundle.rank();
  EtaEstimate r;
  r.value = a.value - rank * b.value;
  r.error_estimate = std::hypot(a.error_estimate, rank * b.error_estimate);
  r.method = a.method == b.method ? a.method : a.method + "," + b.method;
  r.truncation = truncation;
  r.grid = a.grid;
  r.warnings = a.warnings;
  r.warnings.insert(r.warnings.end(), b.warnings.begin(), b.warnings.end());
  return r;
}

SpectralFlowResult spectral_flow(const FlatMetric& metric, const FlatBundle& bundle, const FluxForm& h_start,
                                 const FluxForm& h_end, int truncation, int steps) {
  if (steps < 1) throw Error(ErrorCode::InvalidArgument, kModule, "spectral_flow", "steps must be positive");
  const OddSignatureOperator op0(metric, bundle, h_start, truncation);
  const OddSignatureOperator op1(metric, bundle, h_end, truncation);
  // The constant part is affine along the path, so its norm is bounded by
  // the larger endpoint norm.
  const double bound = std::max(op0.constant_part_norm(), op1.constant_part_norm());
  require_weyl_truncation(metric, truncation, bound + kDelta, "spectral_flow");

  const auto& modes = op0.modes();
  std::vector<std::vector<Crossing>> per_block(modes.size());
  std::vector<int> evaluations(modes.size(), 0);
  std::vector<char> tracked(modes.size(), 0);
  parallel_for(modes.size(), [&](std::size_t i) {
    const RVec xi = op0.complex().frequency(modes[i]);
    // Weyl: eigenvalues of D(u) lie within bound of +-|xi|_{G*}.
    if (metric.dual_norm(xi) - bound > kDelta) return;
    tracked[i] = 1;
    const PathBlock block{op0.hermitian_even_block(xi), op1.hermitian_even_block(xi), modes[i]};
    Tracker tr{block, per_block[i]};
    Snapshot prev = block.at(0.0);
    const int start_below = count_below(prev.eig.values, -kDelta);
    for (int s = 1; s <= steps; ++s) {
      Snapshot next = block.at(static_cast<double>(s) / steps);
      tr.refine(prev, next);
      prev = std::move(next);
    }
    tr.evaluations += steps + 1;
    evaluations[i] = tr.evaluations;
    int net = 0;
    for (const Crossing& c : per_block[i]) net += c.sign * c.multiplicity;
    const int expected = start_below - count_below(prev.eig.values, -kDelta);
    if (net != expected) {
      std::ostringstream os;
      os << "tracked crossings sum to " << net << " but the eigenvalue count below the level changes by " << expected;
      throw Error(ErrorCode::TrackingAmbiguity, kModule, "spectral_flow", os.str());
    }
  });
  SpectralFlowResult r;
  r.overlap_threshold = kOverlapThreshold;
  r.level = -kDelta;
  for (std::size_t i = 0; i < modes.size(); ++i) {
    r.tracked_blocks += tracked[i];
    r.steps += evaluations[i];
    for (const Crossing& c : per_block[i]) {
      r.flow += c.sign * c.multiplicity;
      r.crossings.push_back(c);
    }
  }
  std::stable_sort(r.crossings.begin(), r.crossings.end(),
                   [](const Crossing& a, const Crossing& b) { return a.u < b.u; });
  return r;
}

SpectralFlowResult spectral_flow(const FlatMetric& metric, const FlatBundle& bundle, const FluxForm& h,
                                 int truncation, int steps) {
  return spectral_flow(metric, bundle, FluxForm(metric.dim()), h, truncation, steps);
}

LocalTerm local_term(const FlatMetric& metric, const FluxForm& h) {
  if (metric.dim() != 3 || h.dim() != 3) {
    throw Error(ErrorCode::UnsupportedDimension, kModule, "local_term", "the local term is computed on T^3");
  }
  if (!h.is_constant()) {
    throw Error(ErrorCode::NonConstantFlux, kModule, "local_term", "constant flux required");
  }
  LocalTerm r;
  for (const auto& [key, c] : h.terms())
    if (key.second == 0b111u) r.flux_integral += c;
  r.value = r.flux_integral / (-4.0 * kPi * kPi);
  auto levi = [](int a, int b, int d) -> double {
    if (a == b || b == d || a == d) return 0.0;
    const Mask ma = 1u << a, mb = 1u << b, md = 1u << d;
    return wedge_sign(ma, mb) * wedge_sign(ma | mb, md);
  };
  const RMat& ginv = metric.g_inverse();
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      for (int c = 0; c < 3; ++c)
        for (int d = 0; d < 3; ++d) r.s_tensor[a][b][c] += ginv(c, d) * (-2.0 * r.flux_integral * levi(a, b, d));
  const RMat& g = metric.g();
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      for (int c = 0; c < 3; ++c) {
        cplx sym{};
        for (int e = 0; e < 3; ++e) sym += g(c, e) * r.s_tensor[a][b][e] + g(b, e) * r.s_tensor[a][c][e];
        r.antisymmetry_defect = std::max(r.antisymmetry_defect, std::abs(sym));
      }
  return r;
}

Form apply_odd_signature(const Form& omega, const FluxForm& h) {
  const int n = omega.ambient().dim();
  if (n % 2 == 0) throw Error(ErrorCode::EvenDimension, kModule, "apply_odd_signature", "odd dimension required");
  const int mm = (n + 1) / 2;
  const FluxForm minus_hbar = conjugate_flux(h).scaled(-1.0);
  Ambient amb = omega.ambient();
  amb.truncation += h.mode_radius();
  Form out(amb);
  for (int p = 0; p <= n; ++p) {
    const Form part = omega.homogeneous(p);
    if (part.coefficients().empty()) continue;
    const Form first = apply_twisted_differential(hodge_star(part), h);
    const Form second = hodge_star(apply_twisted_differential(part, minus_hbar));
    const cplx phase = ipow(mm + static_cast<long>(p) * (p + 1));
    out = out + (first - second.scaled(p % 2 == 0 ? 1.0 : -1.0)).scaled(phase);
  }
  out.prune();
  return out;
}

namespace {

// Hermitian compression of D_H to even forms on the modes |k|_inf <= K.
RVec compressed_spectrum(const FlatMetric& metric, const FlatBundle& bundle, const FluxForm& h, int truncation) {
  const int n = metric.dim();
  const auto& basis = exterior_basis(n);
  const auto& even = basis.parity_indices(0);
  const auto block = static_cast<Eigen::Index>(even.size());
  const auto modes = truncated_modes(bundle, truncation);
  std::map<Mode, Eigen::Index> index_of;
  for (std::size_t i = 0; i < modes.size(); ++i) index_of[modes[i]] = static_cast<Eigen::Index>(i);
  std::vector<int> even_pos(static_cast<std::size_t>(basis.dim()), -1);
  for (std::size_t j = 0; j < even.size(); ++j) even_pos[static_cast<std::size_t>(even[j])] = static_cast<int>(j);

  const auto size = static_cast<Eigen::Index>(modes.size()) * block;
  CMat a = CMat::Zero(size, size);
  const Ambient amb = bundle.ambient(metric, truncation);
  parallel_for(modes.size(), [&](std::size_t mi) {
    for (Eigen::Index j = 0; j < block; ++j) {
      Form e(amb);
      e.add(modes[mi], MultiIndex::from_mask(basis.mask(even[static_cast<std::size_t>(j)])), 1.0);
      const Form img = apply_odd_signature(e, h);
      for (const auto& [key, c] : img.coefficients()) {
        const auto it = index_of.find(key.first);
        const int pos = even_pos[static_cast<std::size_t>(basis.index(key.second.mask()))];
        if (it == index_of.end() || pos < 0) continue;  // compression
        a(it->second * block + pos, static_cast<Eigen::Index>(mi) * block + j) = c;
      }
    }
  });
  const OrthonormalFrame frame(even_rows_cols(gram_matrix(metric), n));
  const CMat lh = frame.lower().adjoint();
  const CMat lh_inv = lh.inverse();
  for (std::size_t r = 0; r < modes.size(); ++r)
    for (std::size_t c = 0; c < modes.size(); ++c) {
      auto blk = a.block(static_cast<Eigen::Index>(r) * block, static_cast<Eigen::Index>(c) * block, block, block);
      if (blk.cwiseAbs().maxCoeff() == 0.0) continue;
      blk = lh * blk * lh_inv;
    }
  return hermitian_eigen(a).values;
}

}  // namespace

FluxExperimentReport flux_representative_experiment(const FlatMetric& metric, const FlatBundle& bundle,
                                                     const FluxForm& h0, const Form& b,
                                                     const std::vector<int>& truncations) {
  const int n = metric.dim();
  if (n % 2 == 0) {
    throw Error(ErrorCode::EvenDimension, kModule, "flux_representative_experiment", "odd dimension required");
  }
  if (!b.ambient().is_scalar() || !same_metric(b.ambient().metric, metric)) {
    throw Error(ErrorCode::AmbientMismatch, kModule, "flux_representative_experiment",
                "B must be a scalar form over the same metric");
  }
  const Form db = flat_differential(b);
  FluxForm h1 = h0;
  if (db.max_abs() > 0.0) h1 = h0 - FluxForm::from_form(db);
  TwistedComplex check(metric, bundle, h1);  // closedness

  FluxExperimentReport r;
  r.truncations = truncations;
  for (int k : truncations) {
    const RVec s0 = compressed_spectrum(metric, bundle, h0, k);
    const RVec s1 = compressed_spectrum(metric, bundle, h1, k);
    const double cutoff = 2.0 * kPi * std::max(k, 1);
    auto smoothed = [cutoff](const RVec& v) {
      double acc = 0.0;
      for (Eigen::Index i = 0; i < v.size(); ++i)
        if (v(i) != 0.0) acc += (v(i) > 0 ? 1.0 : -1.0) * std::erfc(std::abs(v(i)) / cutoff);
      return acc;
    };
    auto sig = [](const RVec& v) {
      const double eps = kKernelRel * std::max(1.0, v.size() ? v.cwiseAbs().maxCoeff() : 0.0);
      int s = 0;
      for (Eigen::Index i = 0; i < v.size(); ++i)
        if (std::abs(v(i)) > eps) s += v(i) > 0 ? 1 : -1;
      return s;
    };
    r.signature_difference.push_back(sig(s1) - sig(s0));
    r.smoothed_difference.push_back(smoothed(s1) - smoothed(s0));
  }
  r.shrinking = r.smoothed_difference.size() >= 2 &&
                std::abs(r.smoothed_difference.back()) <= std::abs(r.smoothed_difference.front()) + 1e-12;
  r.warnings.push_back("compressions of a mode-coupling operator; the differences are diagnostics, not invariants");
  return r;
}

}  // namespace tsig
