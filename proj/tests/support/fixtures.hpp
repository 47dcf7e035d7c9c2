#pragma once

#include <random>

#include "tsig/twisted_complex.hpp"

namespace fixtures {

using namespace tsig;

inline FluxForm flux123(int n, cplx h) { return FluxForm::constant(n, MultiIndex::from_axes({1, 2, 3}, n), h); }

inline RMat diagonal(std::initializer_list<double> d) {
  RMat g = RMat::Zero(static_cast<Eigen::Index>(d.size()), static_cast<Eigen::Index>(d.size()));
  Eigen::Index i = 0;
  for (double v : d) g(i, i) = v, ++i;
  return g;
}

struct Rng {
  std::mt19937_64 engine;
  explicit Rng(unsigned seed) : engine(seed) {}
  double uniform(double a = 0.0, double b = 1.0) { return std::uniform_real_distribution<double>(a, b)(engine); }
  double normal() { return std::normal_distribution<double>(0.0, 1.0)(engine); }

  FlatMetric metric(int n) {
    RMat a(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) a(i, j) = 0.3 * normal();
    return FlatMetric(a * a.transpose() + RMat::Identity(n, n));
  }
  FlatBundle bundle(int n, int rank) {
    RMat theta(rank, n);
    for (int a = 0; a < rank; ++a)
      for (int j = 0; j < n; ++j) theta(a, j) = uniform();
    return FlatBundle(theta);
  }
  // Constant flux over every 3-index, coefficients phase * N(0,1).
  FluxForm flux(int n, cplx phase) {
    FluxForm h(n);
    for (Mask m = 0; m < (Mask{1} << n); ++m)
      if (popcount(m) == 3) h.add_term(std::vector<int>(static_cast<std::size_t>(n), 0), MultiIndex::from_mask(m), phase * normal());
    return h;
  }
};

// Same flux as a mask -> coefficient map for the oracles.
inline std::map<unsigned, cplx> constant_terms(const FluxForm& h) {
  std::map<unsigned, cplx> out;
  for (const auto& [key, c] : h.terms()) out[key.second] += c;
  return out;
}

}  // namespace fixtures
