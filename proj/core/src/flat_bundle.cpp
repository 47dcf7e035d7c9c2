#include "tsig/flat_bundle.hpp"

#include <algorithm>
#include <cmath>

#include "tsig/error.hpp"

namespace tsig {

namespace {

constexpr const char* kModule = "flat_bundle";

double wrap_unit(double x) {
  double r = x - std::floor(x);
  // Phases a rounding error below an integer would otherwise land at 1.
  if (r >= 1.0 - 1e-13 || r < 1e-13) r = 0.0;
  return r;
}

}  // namespace

FlatBundle::FlatBundle(RMat theta) : theta_(std::move(theta)) {
  if (theta_.rows() < 1 || theta_.cols() < 1) {
    throw Error(ErrorCode::InvalidArgument, kModule, "FlatBundle", "rank and dimension must be positive");
  }
  for (Eigen::Index r = 0; r < theta_.rows(); ++r)
    for (Eigen::Index c = 0; c < theta_.cols(); ++c)
      if (!(theta_(r, c) >= 0.0 && theta_(r, c) < 1.0)) {
        throw Error(ErrorCode::InvalidArgument, kModule, "FlatBundle",
                    "holonomy angles must lie in [0,1)");
      }
}

FlatBundle FlatBundle::trivial(int n, int rank) { return FlatBundle(RMat::Zero(rank, n)); }

FlatBundle FlatBundle::from_holonomy_matrices(const std::vector<CMat>& holonomies) {
  if (holonomies.empty()) {
    throw Error(ErrorCode::InvalidArgument, kModule, "from_holonomy_matrices", "no generators");
  }
  const Eigen::Index rank = holonomies.front().rows();
  for (const auto& u : holonomies) {
    if (u.rows() != rank || u.cols() != rank) {
      throw Error(ErrorCode::InvalidArgument, kModule, "from_holonomy_matrices",
                  "holonomy matrices must all be square of the bundle rank");
    }
    if (max_abs(u.adjoint() * u - CMat::Identity(rank, rank)) > 1e-10) {
      throw Error(ErrorCode::CommutatorCheckFailed, kModule, "from_holonomy_matrices",
                  "holonomy matrix is not unitary to 1e-10");
    }
  }
  for (std::size_t i = 0; i < holonomies.size(); ++i)
    for (std::size_t j = i + 1; j < holonomies.size(); ++j)
      if (max_abs(holonomies[i] * holonomies[j] - holonomies[j] * holonomies[i]) > 1e-10) {
        throw Error(ErrorCode::CommutatorCheckFailed, kModule, "from_holonomy_matrices",
                    "holonomy matrices do not commute to 1e-10");
      }
  // Commuting normal matrices share an eigenbasis; a combination with
  // irrational-looking weights of the hermitian and anti-hermitian parts
  // separates all joint eigenspaces that are distinguishable at all.
  CMat h = CMat::Zero(rank, rank);
  double w = 1.0;
  for (const auto& u : holonomies) {
    h += w * (u + u.adjoint()) + (w * std::sqrt(2.0)) * kI * (u - u.adjoint());
    w *= 0.7548776662466927;
  }
  const HermitianEigen es = hermitian_eigen(h);
  const Eigen::Index n = static_cast<Eigen::Index>(holonomies.size());
  RMat theta(rank, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const CMat d = es.vectors.adjoint() * holonomies[static_cast<std::size_t>(j)] * es.vectors;
    CMat off = d;
    off.diagonal().setZero();
    if (max_abs(off) > 1e-8) {
      throw Error(ErrorCode::CommutatorCheckFailed, kModule, "from_holonomy_matrices",
                  "simultaneous diagonalization failed");
    }
    for (Eigen::Index a = 0; a < rank; ++a)
      theta(a, j) = wrap_unit(std::arg(d(a, a)) / (2.0 * kPi));
  }
  return FlatBundle(theta);
}

bool FlatBundle::is_trivial() const { return theta_.cwiseAbs().maxCoeff() == 0.0; }

Ambient FlatBundle::ambient(const FlatMetric& metric, int truncation) const {
  if (metric.dim() != dim()) {
    throw Error(ErrorCode::AmbientMismatch, kModule, "ambient", "bundle and torus dimensions differ");
  }
  return Ambient{metric, theta_, truncation};
}

FlatBundle dual_bundle(const FlatBundle& b) {
  RMat t = b.theta();
  for (Eigen::Index r = 0; r < t.rows(); ++r)
    for (Eigen::Index c = 0; c < t.cols(); ++c) t(r, c) = t(r, c) > 0.0 ? 1.0 - t(r, c) : 0.0;
  return FlatBundle(t);
}

FlatBundle direct_sum(const FlatBundle& a, const FlatBundle& b) {
  if (a.dim() != b.dim()) {
    throw Error(ErrorCode::AmbientMismatch, kModule, "direct_sum", "bundle dimensions differ");
  }
  RMat t(a.rank() + b.rank(), a.dim());
  t << a.theta(), b.theta();
  return FlatBundle(t);
}

CMat flat_differential_block(int n, const RVec& xi) {
  const auto& basis = exterior_basis(n);
  CMat d = CMat::Zero(basis.dim(), basis.dim());
  for (int j = 0; j < n; ++j)
    if (xi(j) != 0.0) d += (kI * xi(j)) * wedge_matrix(n, Mask{1} << j);
  return d;
}

Form flat_differential(const Form& omega) {
  const Ambient& amb = omega.ambient();
  Form out(amb);
  for (const auto& [key, c] : omega.coefficients()) {
    const RVec xi = amb.frequency(key.first);
    for (int j = 0; j < amb.dim(); ++j) {
      if (xi(j) == 0.0) continue;
      const Mask axis = Mask{1} << j;
      const int s = wedge_sign(axis, key.second.mask());
      if (s != 0) out.add(key.first, MultiIndex::from_mask(axis | key.second.mask()), kI * xi(j) * static_cast<double>(s) * c);
    }
  }
  out.prune();
  return out;
}

}  // namespace tsig
