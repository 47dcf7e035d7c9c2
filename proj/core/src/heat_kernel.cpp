#include "tsig/heat_kernel.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "tsig/error.hpp"
#include "tsig/signature.hpp"

namespace tsig {

namespace {

constexpr const char* kModule = "heat_kernel";
constexpr double kTailLimit = 1e-14;

void validate_grid(const std::vector<double>& t, const char* op) {
  if (t.empty()) throw Error(ErrorCode::InvalidArgument, kModule, op, "empty t-grid");
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (!(t[i] > 0.0) || !std::isfinite(t[i]) || (i > 0 && !(t[i] > t[i - 1]))) {
      throw Error(ErrorCode::InvalidArgument, kModule, op, "t-grid must be positive and strictly increasing");
    }
  }
}

double shell_count(int n, int s) { return std::pow(2.0 * s + 1.0, n) - std::pow(2.0 * s - 1.0, n); }

// Bound on sum over |k|_inf > K of e^{-t lambda}: every block on the shell
// |k|_inf = s has |k + theta|_inf >= s - 1 and lambda >= (|xi|_{G*} - 2|H|)_+^2.
double eigen_tail(int n, int truncation, double t, double sqrt_dual_min, double flux_norm, double per_block) {
  double total = 0.0;
  for (int s = truncation + 1;; ++s) {
    const double gap = std::max(0.0, 2.0 * kPi * (s - 1) * sqrt_dual_min - 2.0 * flux_norm);
    const double term = per_block * shell_count(n, s) * std::exp(-t * gap * gap);
    total += term;
    if (gap > 0.0 && (term == 0.0 || term < 1e-30 * total)) break;
    if (s > truncation + 100000) return std::numeric_limits<double>::infinity();
  }
  return total;
}

// Image sum over |gamma|_inf <= radius plus a certified bound for the rest.
struct ImageSum {
  double total = 0.0;      // all gamma
  double remainder = 0.0;  // gamma != 0
  double tail = 0.0;
};

ImageSum image_sum(const FlatMetric& metric, const RMat& theta, double t, double per_channel) {
  const int n = metric.dim();
  const double gmin = Eigen::SelfAdjointEigenSolver<RMat>(metric.g()).eigenvalues()(0);
  // e^{-gmin s^2 / 4t} < e^{-80} beyond the radius
  const int radius = static_cast<int>(std::ceil(std::sqrt(4.0 * t * 80.0 / gmin))) + 1;
  const double pref = per_channel * metric.sqrt_det() * std::pow(4.0 * kPi * t, -0.5 * n);
  // With holonomy the characters cancel down to e^{-t lambda_min}, so terms
  // and sums are carried in long double with the phases reduced mod 1.
  constexpr long double two_pi = 6.283185307179586476925286766559L;
  long double total = 0.0L, remainder = 0.0L;
  for (const auto& k : lattice_box(n, radius)) {
    long double quad = 0.0L;
    bool zero = true;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        quad += static_cast<long double>(metric.g()(i, j)) * k[static_cast<std::size_t>(i)] * k[static_cast<std::size_t>(j)];
    for (int v : k) zero = zero && v == 0;
    long double character = 0.0L;
    for (Eigen::Index a = 0; a < theta.rows(); ++a) {
      long double phase = 0.0L;
      for (int j = 0; j < n; ++j) phase += static_cast<long double>(theta(a, j)) * k[static_cast<std::size_t>(j)];
      character += std::cos(two_pi * (phase - std::floor(phase)));
    }
    const long double term = std::exp(-quad / (4.0L * t)) * character;
    total += term;
    if (!zero) remainder += term;
  }
  ImageSum out;
  out.total = static_cast<double>(pref * total);
  out.remainder = static_cast<double>(pref * remainder);
  const double rank = static_cast<double>(theta.rows());
  for (int s = radius + 1;; ++s) {
    const double term = pref * rank * shell_count(n, s) * std::exp(-gmin * s * s / (4.0 * t));
    out.tail += term;
    if (term == 0.0 || term < 1e-30 * out.tail) break;
  }
  return out;
}

}  // namespace

std::vector<double> default_heat_grid() {
  std::vector<double> t;
  for (int j = 0; j < 12; ++j) t.push_back(0.05 * std::pow(2.0, 0.5 * j));
  return t;
}

HeatTrace heat_trace_eigen(const FlatMetric& metric, const FlatBundle& bundle, const FluxForm& h,
                           const std::vector<double>& t, int truncation, HeatGrading grading, bool functions_only) {
  validate_grid(t, "heat_trace_eigen");
  const int n = metric.dim();
  if (functions_only && !h.is_zero()) {
    throw Error(ErrorCode::InvalidArgument, kModule, "heat_trace_eigen",
                "the flux couples form degrees; a functions-only trace needs H = 0");
  }
  const TwistedComplex tc(metric, bundle, h);
  const double flux_norm = h.is_zero() ? 0.0 : flux_operator_norm(metric, h);
  const double per_block = bundle.rank() * (functions_only ? 1.0 : std::pow(2.0, n));
  const double sqrt_dual_min = std::sqrt(metric.min_dual_eigenvalue());

  const double tail0 = eigen_tail(n, truncation, t.front(), sqrt_dual_min, flux_norm, per_block);
  if (tail0 > kTailLimit) {
    int required = truncation;
    while (eigen_tail(n, required, t.front(), sqrt_dual_min, flux_norm, per_block) > kTailLimit) ++required;
    std::ostringstream os;
    os << "tail bound " << tail0 << " at t = " << t.front() << " exceeds " << kTailLimit
       << "; truncation " << required << " is required";
    throw Error(ErrorCode::TailTooLarge, kModule, "heat_trace_eigen", os.str());
  }

  const OrthonormalFrame frame(tc.gram());
  CMat grade;
  switch (grading) {
    case HeatGrading::None: grade = CMat::Identity(1 << n, 1 << n); break;
    case HeatGrading::Parity:
      grade = degree_diagonal(n, [](int p) { return cplx{p % 2 == 0 ? 1.0 : -1.0, 0.0}; });
      break;
    case HeatGrading::Tau: grade = frame.to_orthonormal(tau_matrix(metric)); break;
  }

  const auto modes = truncated_modes(bundle, truncation);
  std::vector<std::vector<double>> per_mode(modes.size());
  parallel_for(modes.size(), [&](std::size_t i) {
    const CMat lap = tc.laplacian(tc.frequency(modes[i]));
    RVec values;
    RVec weights;
    if (functions_only) {
      values = RVec::Constant(1, lap(0, 0).real());
      weights = RVec::Ones(1);
    } else {
      const HermitianEigen es = hermitian_eigen(frame.to_orthonormal(lap));
      values = es.values;
      weights = (es.vectors.adjoint() * grade * es.vectors).diagonal().real();
    }
    std::vector<double> out(t.size(), 0.0);
    for (std::size_t s = 0; s < t.size(); ++s)
      for (Eigen::Index j = 0; j < values.size(); ++j) out[s] += weights(j) * std::exp(-t[s] * values(j));
    per_mode[i] = std::move(out);
  });
  HeatTrace r;
  r.method = "eigen";
  r.t = t;
  r.values.assign(t.size(), 0.0);
  for (const auto& v : per_mode)
    for (std::size_t s = 0; s < t.size(); ++s) r.values[s] += v[s];
  for (double ts : t) r.tail_bound.push_back(eigen_tail(n, truncation, ts, sqrt_dual_min, flux_norm, per_block));
  return r;
}

HeatTrace heat_trace_images(const FlatMetric& metric, const FlatBundle& bundle, const std::vector<double>& t,
                            bool functions_only) {
  validate_grid(t, "heat_trace_images");
  if (bundle.dim() != metric.dim()) {
    throw Error(ErrorCode::AmbientMismatch, kModule, "heat_trace_images", "bundle and torus dimensions differ");
  }
  const double per_channel = functions_only ? 1.0 : std::pow(2.0, metric.dim());
  HeatTrace r;
  r.method = "images";
  r.t = t;
  r.values.resize(t.size());
  r.tail_bound.resize(t.size());
  parallel_for(t.size(), [&](std::size_t s) {
    const ImageSum sum = image_sum(metric, bundle.theta(), t[s], per_channel);
    if (sum.tail > kTailLimit) {
      throw Error(ErrorCode::TailTooLarge, kModule, "heat_trace_images", "image tail exceeds 1e-14");
    }
    r.values[s] = sum.total;
    r.tail_bound[s] = sum.tail;
  });
  return r;
}

ImageRemainderFit image_remainder_fit(const FlatMetric& metric, const FlatBundle& bundle) {
  const int n = metric.dim();
  ImageRemainderFit r;
  for (int j = 0; j < 8; ++j) r.t.push_back(0.01 * std::pow(4.0, j / 7.0));
  r.remainder.resize(r.t.size());
  parallel_for(r.t.size(), [&](std::size_t s) {
    r.remainder[s] = image_sum(metric, bundle.theta(), r.t[s], 1.0).remainder;
  });
  RMat design(static_cast<Eigen::Index>(r.t.size()), 2);
  RVec rhs(static_cast<Eigen::Index>(r.t.size()));
  for (std::size_t s = 0; s < r.t.size(); ++s) {
    const auto i = static_cast<Eigen::Index>(s);
    design(i, 0) = 1.0;
    design(i, 1) = -1.0 / r.t[s];
    const double scaled = std::abs(r.remainder[s]) * std::pow(4.0 * kPi * r.t[s], 0.5 * n) / metric.sqrt_det();
    if (!(scaled > 0.0)) {
      throw Error(ErrorCode::IllConditionedFit, kModule, "image_remainder_fit",
                  "the image remainder vanishes on the fit grid");
    }
    rhs(i) = std::log(scaled);
  }
  const RVec coef = design.colPivHouseholderQr().solve(rhs);
  r.amplitude = coef(0);
  r.decay = coef(1);
  double dmin = std::numeric_limits<double>::infinity();
  for (const auto& k : lattice_box(n, 2)) {
    RVec gamma(n);
    for (int j = 0; j < n; ++j) gamma(j) = k[static_cast<std::size_t>(j)];
    if (gamma.cwiseAbs().maxCoeff() == 0.0) continue;
    dmin = std::min(dmin, gamma.dot(metric.g() * gamma));
  }
  r.required_decay = dmin / 4.0;
  r.bounded = r.decay >= r.required_decay - 1e-6;
  return r;
}

Alpha0Result alpha0_extract(const std::vector<double>& t, const std::vector<double>& values, int n) {
  validate_grid(t, "alpha0_extract");
  if (values.size() != t.size()) {
    throw Error(ErrorCode::InvalidArgument, kModule, "alpha0_extract", "t-grid and values differ in length");
  }
  if (n < 1) throw Error(ErrorCode::InvalidArgument, kModule, "alpha0_extract", "dimension must be positive");
  Alpha0Result r;
  for (int j = -n; j <= 2; ++j) r.powers.push_back(j);
  const auto rows = static_cast<Eigen::Index>(t.size());
  const auto cols = static_cast<Eigen::Index>(r.powers.size());
  if (rows < cols) {
    throw Error(ErrorCode::IllConditionedFit, kModule, "alpha0_extract", "fewer grid points than fit terms");
  }
  RMat design(rows, cols);
  RVec rhs(rows);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index c = 0; c < cols; ++c)
      design(i, c) = std::pow(t[static_cast<std::size_t>(i)], 0.5 * r.powers[static_cast<std::size_t>(c)]);
    rhs(i) = values[static_cast<std::size_t>(i)];
  }
  Eigen::JacobiSVD<RMat> svd(design, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const RVec sv = svd.singularValues();
  r.condition = sv(sv.size() - 1) > 0.0 ? sv(0) / sv(sv.size() - 1) : std::numeric_limits<double>::infinity();
  if (r.condition > 1e10) {
    std::ostringstream os;
    os << "design matrix condition " << r.condition << " exceeds 1e10";
    throw Error(ErrorCode::IllConditionedFit, kModule, "alpha0_extract", os.str());
  }
  r.coefficients = svd.solve(rhs);
  r.alpha0 = r.coefficients(n);  // power j = 0
  r.residual = std::sqrt((design * r.coefficients - rhs).squaredNorm() / static_cast<double>(rows));
  return r;
}

McKeanSingerReport mckean_singer_check(const FlatMetric& metric, const FlatBundle& bundle, const FluxForm& h,
                                       const std::vector<double>& t, int truncation) {
  const HeatTrace str = heat_trace_eigen(metric, bundle, h, t, truncation, HeatGrading::Parity);
  const CohomologyResult coh = twisted_cohomology(metric, bundle, h, 1);
  McKeanSingerReport r;
  r.t = t;
  r.supertrace = str.values;
  r.euler = coh.b_even - coh.b_odd;
  for (double v : str.values) r.mean += v;
  r.mean /= static_cast<double>(str.values.size());
  for (double v : str.values) r.variance += (v - r.mean) * (v - r.mean);
  r.variance /= static_cast<double>(str.values.size());
  r.holds = r.variance < 1e-8 && std::abs(r.mean - r.euler) < 1e-8;
  if (!r.holds) {
    std::ostringstream os;
    os << "supertrace mean " << r.mean << ", variance " << r.variance << ", Euler characteristic " << r.euler;
    throw Error(ErrorCode::ConstancyViolated, kModule, "mckean_singer_check", os.str());
  }
  return r;
}

}  // namespace tsig
