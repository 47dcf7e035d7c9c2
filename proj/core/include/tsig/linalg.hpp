#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstddef>
#include <functional>
#include <vector>

namespace tsig {

using cplx = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using RMat = Eigen::MatrixXd;
using RVec = Eigen::VectorXd;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr cplx kI{0.0, 1.0};

// i^e for any integer e.
cplx ipow(long e) noexcept;

double max_abs(const CMat& m) noexcept;

// Adjoint of A with respect to the hermitian inner product <u,v> = v^H Gram u.
CMat gram_adjoint(const CMat& a, const CMat& gram);

// Cholesky-based change of basis to an orthonormal frame of a Gram matrix.
// For an operator A that is self-adjoint w.r.t. Gram, to_orthonormal(A) is
// hermitian in the ordinary sense and shares A's spectrum.
class OrthonormalFrame {
 public:
  explicit OrthonormalFrame(const CMat& gram);
  CMat to_orthonormal(const CMat& a) const;  // L^H A L^{-H}
  CMat vectors_from_orthonormal(const CMat& w) const;  // L^{-H} w
  CMat vectors_to_orthonormal(const CMat& v) const;    // L^H v
  const CMat& lower() const { return l_; }

 private:
  CMat l_;
  CMat l_inv_h_;
};

struct HermitianEigen {
  RVec values;   // ascending
  CMat vectors;  // orthonormal columns
};

HermitianEigen hermitian_eigen(const CMat& h);

// Spectral norm of an operator in the orthonormal frame of a Gram matrix.
double operator_norm(const CMat& a, const CMat& gram);

// Numerical rank via singular values above rel_tol * max(sigma_max, 1).
int numerical_rank(const CMat& a, double rel_tol);

// Deterministic data-parallel loop: body(i) for i in [0, count), each index
// processed exactly once; callers write into pre-sized per-index slots.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

// Thread count used by parallel_for (0 = hardware concurrency).
void set_thread_count(unsigned threads) noexcept;
unsigned thread_count() noexcept;

}  // namespace tsig
