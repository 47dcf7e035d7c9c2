#include "tsig/linalg.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

#include "tsig/error.hpp"

namespace tsig {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::TruncationOverflow: return "TruncationOverflow";
    case ErrorCode::AmbientMismatch: return "AmbientMismatch";
    case ErrorCode::FluxNotClosed: return "FluxNotClosed";
    case ErrorCode::NonConstantFlux: return "NonConstantFlux";
    case ErrorCode::NotPurelyImaginary: return "NotPurelyImaginary";
    case ErrorCode::AmbiguousKernel: return "AmbiguousKernel";
    case ErrorCode::AdjointMismatch: return "AdjointMismatch";
    case ErrorCode::ZeroLambda: return "ZeroLambda";
    case ErrorCode::OddDimension: return "OddDimension";
    case ErrorCode::EvenDimension: return "EvenDimension";
    case ErrorCode::DegenerateForm: return "DegenerateForm";
    case ErrorCode::TauNotPreserving: return "TauNotPreserving";
    case ErrorCode::SymmetryNotDetected: return "SymmetryNotDetected";
    case ErrorCode::TrackingAmbiguity: return "TrackingAmbiguity";
    case ErrorCode::UnsupportedDimension: return "UnsupportedDimension";
    case ErrorCode::IdentityViolated: return "IdentityViolated";
    case ErrorCode::TailTooLarge: return "TailTooLarge";
    case ErrorCode::IllConditionedFit: return "IllConditionedFit";
    case ErrorCode::ConstancyViolated: return "ConstancyViolated";
    case ErrorCode::CommutatorCheckFailed: return "CommutatorCheckFailed";
    case ErrorCode::ConfigInvalid: return "ConfigInvalid";
  }
  return "Unknown";
}

cplx ipow(long e) noexcept {
  switch (((e % 4) + 4) % 4) {
    case 0: return {1.0, 0.0};
    case 1: return {0.0, 1.0};
    case 2: return {-1.0, 0.0};
    default: return {0.0, -1.0};
  }
}

double max_abs(const CMat& m) noexcept {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

CMat gram_adjoint(const CMat& a, const CMat& gram) {
  return gram.ldlt().solve(a.adjoint() * gram);
}

OrthonormalFrame::OrthonormalFrame(const CMat& gram) {
  Eigen::LLT<CMat> llt(gram);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::InvalidArgument, "linalg", "OrthonormalFrame",
                "Gram matrix is not positive definite");
  }
  l_ = llt.matrixL();
  l_inv_h_ = l_.adjoint().triangularView<Eigen::Upper>().solve(
      CMat::Identity(gram.rows(), gram.cols()));
}

CMat OrthonormalFrame::to_orthonormal(const CMat& a) const {
  return l_.adjoint() * a * l_inv_h_;
}

CMat OrthonormalFrame::vectors_from_orthonormal(const CMat& w) const {
  return l_inv_h_ * w;
}

CMat OrthonormalFrame::vectors_to_orthonormal(const CMat& v) const {
  return l_.adjoint() * v;
}

HermitianEigen hermitian_eigen(const CMat& h) {
  // Symmetrize first: tiny anti-hermitian noise would otherwise leak into
  // the solver's assumptions.
  const CMat sym = 0.5 * (h + h.adjoint());
  Eigen::SelfAdjointEigenSolver<CMat> es(sym);
  return {es.eigenvalues(), es.eigenvectors()};
}

double operator_norm(const CMat& a, const CMat& gram) {
  OrthonormalFrame frame(gram);
  const CMat x = frame.to_orthonormal(a);
  if (x.size() == 0) return 0.0;
  Eigen::JacobiSVD<CMat> svd(x);
  return svd.singularValues()(0);
}

int numerical_rank(const CMat& a, double rel_tol) {
  if (a.size() == 0) return 0;
  Eigen::JacobiSVD<CMat> svd(a);
  const RVec& s = svd.singularValues();
  const double cut = rel_tol * std::max(s(0), 1.0);
  int r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) r += s(i) > cut ? 1 : 0;
  return r;
}

namespace {
std::atomic<unsigned> g_threads{0};
}

void set_thread_count(unsigned threads) noexcept { g_threads = threads; }

unsigned thread_count() noexcept {
  const unsigned t = g_threads.load();
  if (t != 0) return t;
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body) {
  const std::size_t workers = std::min<std::size_t>(thread_count(), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  // The failure with the smallest index wins so error reports do not depend
  // on scheduling.
  std::exception_ptr first_error;
  std::size_t first_index = count;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= count) return;
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (i < first_index) {
            first_index = i;
            first_error = std::current_exception();
          }
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace tsig
