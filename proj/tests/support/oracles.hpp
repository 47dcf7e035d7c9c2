#pragma once

// Independent reference computations. Nothing here calls into the library's
// operator assembly: signs, wedges and spectra are rebuilt from scratch.

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <map>
#include <vector>

namespace oracle {

using cplx = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using RMat = Eigen::MatrixXd;
inline constexpr double pi = 3.14159265358979323846;

inline std::vector<int> axes_of(unsigned mask) {
  std::vector<int> out;
  for (int j = 0; mask != 0; ++j, mask >>= 1)
    if (mask & 1u) out.push_back(j);
  return out;
}

// dx_I ^ dx_J = sign * dx_{I u J}: count the transpositions that sort the
// concatenated axis list.
inline int wedge_sign(unsigned i, unsigned j) {
  if (i & j) return 0;
  int inversions = 0;
  for (int a : axes_of(i))
    for (int b : axes_of(j))
      if (a > b) ++inversions;
  return inversions % 2 == 0 ? 1 : -1;
}

// Hodge star for the Euclidean metric: dx_I ^ *dx_I = vol.
inline int euclidean_star_sign(unsigned i, int n) {
  const unsigned full = (1u << n) - 1u;
  return wedge_sign(i, full & ~i);
}

// Dense d + H^ on the mode with frequency xi, basis indexed directly by mask.
inline CMat twisted_differential(int n, const std::vector<double>& xi, const std::map<unsigned, cplx>& flux) {
  const int dim = 1 << n;
  CMat d = CMat::Zero(dim, dim);
  for (unsigned i = 0; i < static_cast<unsigned>(dim); ++i) {
    for (int j = 0; j < n; ++j) {
      const int s = wedge_sign(1u << j, i);
      if (s != 0) d(static_cast<int>(i | (1u << j)), static_cast<int>(i)) += cplx{0.0, xi[static_cast<std::size_t>(j)]} * double(s);
    }
    for (const auto& [mask, h] : flux) {
      const int s = wedge_sign(mask, i);
      if (s != 0) d(static_cast<int>(i | mask), static_cast<int>(i)) += h * double(s);
    }
  }
  return d;
}

inline int rank_of(const CMat& a) {
  if (a.size() == 0) return 0;
  Eigen::JacobiSVD<CMat> svd(a);
  const auto& s = svd.singularValues();
  const double tol = 1e-9 * std::max(1.0, s.size() > 0 ? s(0) : 0.0);
  int r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) r += s(i) > tol ? 1 : 0;
  return r;
}

struct Betti {
  int even = 0;
  int odd = 0;
};

// dim ker - dim im per parity, mode by mode, using ranks of d restricted to
// even and odd forms. Metric independent by construction.
inline Betti brute_force_betti(int n, const RMat& theta, const std::map<unsigned, cplx>& flux, int truncation) {
  Betti b;
  const int dim = 1 << n;
  std::vector<int> even, odd;
  for (int i = 0; i < dim; ++i) (__builtin_popcount(static_cast<unsigned>(i)) % 2 == 0 ? even : odd).push_back(i);
  const int side = 2 * truncation + 1;
  int count = 1;
  for (int j = 0; j < n; ++j) count *= side;
  for (Eigen::Index a = 0; a < theta.rows(); ++a)
    for (int idx = 0; idx < count; ++idx) {
      std::vector<double> xi(static_cast<std::size_t>(n));
      int rest = idx;
      for (int j = 0; j < n; ++j) {
        const int k = rest % side - truncation;
        rest /= side;
        xi[static_cast<std::size_t>(j)] = 2.0 * pi * (k + theta(a, j));
      }
      const CMat d = twisted_differential(n, xi, flux);
      CMat d_even(static_cast<Eigen::Index>(odd.size()), static_cast<Eigen::Index>(even.size()));
      CMat d_odd(static_cast<Eigen::Index>(even.size()), static_cast<Eigen::Index>(odd.size()));
      for (std::size_t r = 0; r < odd.size(); ++r)
        for (std::size_t c = 0; c < even.size(); ++c) d_even(r, c) = d(odd[r], even[c]);
      for (std::size_t r = 0; r < even.size(); ++r)
        for (std::size_t c = 0; c < odd.size(); ++c) d_odd(r, c) = d(even[r], odd[c]);
      const int re = rank_of(d_even), ro = rank_of(d_odd);
      b.even += static_cast<int>(even.size()) - re - ro;
      b.odd += static_cast<int>(odd.size()) - ro - re;
    }
  return b;
}

// sum_{k in Z} exp(-t (2 pi (k + theta))^2 / g), summed until the terms vanish.
inline double theta_series(double t, double theta, double g = 1.0) {
  double total = 0.0;
  for (int k = -200; k <= 200; ++k) {
    const double x = 2.0 * pi * (k + theta);
    total += std::exp(-t * x * x / g);
  }
  return total;
}

// Tr e^{-t Delta} on all forms for a diagonal metric and flux zero: the form
// Laplacian is the scalar one tensored with the identity on Lambda, and the
// scalar trace factors over the axes.
inline double heat_trace_diagonal(const std::vector<double>& g, const RMat& theta, double t, bool functions_only) {
  const int n = static_cast<int>(g.size());
  double total = 0.0;
  for (Eigen::Index a = 0; a < theta.rows(); ++a) {
    double prod = 1.0;
    for (int j = 0; j < n; ++j) prod *= theta_series(t, theta(a, j), g[static_cast<std::size_t>(j)]);
    total += prod;
  }
  return functions_only ? total : total * std::pow(2.0, n);
}

// Hurwitz zeta at zero: zeta(0, a) = 1/2 - a.
inline double hurwitz_zeta_zero(double a) { return 0.5 - a; }

// Circle, channel holonomy theta in (0,1): eigenvalues s * 2 pi (k + theta),
// so eta = s * (zeta(0, theta) - zeta(0, 1 - theta)).
inline double circle_eta(double theta, int s) {
  if (theta == 0.0) return 0.0;
  return s * (hurwitz_zeta_zero(theta) - hurwitz_zeta_zero(1.0 - theta));
}

// Euclidean T^3, flux g dx123 entering the even block as g on the function
// component. The asymmetric part of the spectrum is the pair
//   lambda_pm = g/2 pm sqrt(g^2/4 + |xi|^2),
// so eta(s) = [xi = 0 term] + sum_xi (R + g/2)^{-s} - (R - g/2)^{-s}. Expanding
// in g/2 leaves only terms s * Z(s + j), Z the Epstein-type sum over
// R = sqrt(|xi|^2 + g^2/4). Z(w) has simple poles at w = 3 and w = 1 with
// residues 1/(2 pi^2) and -(g^2/16)/pi^2, so the j = 1 and j = 3 terms give
// g^3/(16 pi^2) - g^3/(24 pi^2) = g^3/(48 pi^2) per channel. Only channels with
// theta = 0 carry the xi = 0 eigenvalue g.
inline double longitudinal_eta(double g, int untwisted_channels, int rank) {
  const double zero_mode = g > 0 ? 1.0 : (g < 0 ? -1.0 : 0.0);
  return untwisted_channels * zero_mode + rank * g * g * g / (48.0 * pi * pi);
}

}  // namespace oracle
