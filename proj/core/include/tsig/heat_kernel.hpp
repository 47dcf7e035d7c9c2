#pragma once

// Heat traces of the twisted Laplacian on a flat torus: spectral sums over
// Fourier blocks with a certified tail, and the method of images over the
// deck group Z^n for flat bundles without flux.

#include <string>
#include <vector>

#include "tsig/twisted_complex.hpp"

namespace tsig {

struct HeatTrace {
  std::vector<double> t;
  std::vector<double> values;
  std::vector<double> tail_bound;
  std::string method;  // "eigen" or "images"
};

enum class HeatGrading {
  None,    // Tr e^{-t Delta}
  Parity,  // sum (-1)^p Tr on p-forms
  Tau      // Tr(tau e^{-t Delta}), even dimension
};

// Geometric grid 0.05 * 2^{j/2}, j = 0..11.
std::vector<double> default_heat_grid();

// Spectral sum over |k|_inf <= K; TailTooLarge (with the required K in the
// message) when the discarded tail can exceed 1e-14 at the smallest t.
// functions_only restricts to 0-forms and needs H = 0.
HeatTrace heat_trace_eigen(const FlatMetric& metric, const FlatBundle& bundle, const FluxForm& h,
                           const std::vector<double>& t, int truncation,
                           HeatGrading grading = HeatGrading::None, bool functions_only = false);

// sqrt(det G) (4 pi t)^{-n/2} sum_gamma e^{-gamma^T G gamma / 4t} e^{-2 pi i theta_a . gamma}
// summed over channels and, unless functions_only, the 2^n form components.
HeatTrace heat_trace_images(const FlatMetric& metric, const FlatBundle& bundle, const std::vector<double>& t,
                            bool functions_only = false);

struct ImageRemainderFit {
  std::vector<double> t;
  std::vector<double> remainder;  // gamma != 0 part of the image sum
  double amplitude = 0.0;         // a in log(|R| (4 pi t)^{n/2} / sqrt det G) = a - c/t
  double decay = 0.0;             // c
  double required_decay = 0.0;    // min_{gamma != 0} gamma^T G gamma / 4
  bool bounded = false;           // c >= required - 1e-6
};

// Fit on 8 geometric points of [0.01, 0.04].
ImageRemainderFit image_remainder_fit(const FlatMetric& metric, const FlatBundle& bundle);

struct Alpha0Result {
  std::vector<int> powers;  // j in t^{j/2}
  RVec coefficients;
  double alpha0 = 0.0;
  double residual = 0.0;   // RMS of the fit
  double condition = 0.0;  // of the design matrix
};

// Least squares fit of sum_{j=-n..2} a_j t^{j/2}; IllConditionedFit above 1e10.
Alpha0Result alpha0_extract(const std::vector<double>& t, const std::vector<double>& values, int n);

struct McKeanSingerReport {
  std::vector<double> t;
  std::vector<double> supertrace;
  double mean = 0.0;
  double variance = 0.0;
  int euler = 0;  // b_even - b_odd
  bool holds = false;
};

// Parity supertrace against the twisted Euler characteristic; throws
// ConstancyViolated when the variance exceeds 1e-8 or the mean misses chi.
McKeanSingerReport mckean_singer_check(const FlatMetric& metric, const FlatBundle& bundle, const FluxForm& h,
                                       const std::vector<double>& t, int truncation);

}  // namespace tsig
