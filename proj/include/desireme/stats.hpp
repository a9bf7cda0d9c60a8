#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>

#include "desireme/errors.hpp"

namespace desireme {

namespace detail {

// Continued fraction for the incomplete beta function, evaluated with the
// modified Lentz method. Converges quickly for x < (a + 1) / (a + b + 2).
inline double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIterations = 10000;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIterations; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < kEps) return h;
  }
  throw NumericalError("incomplete beta continued fraction did not converge");
}

}  // namespace detail

/// Regularized incomplete beta I_x(a, b), a, b > 0, x in [0, 1].
inline double regularized_incomplete_beta(double a, double b, double x) {
  require(a > 0.0 && b > 0.0, "incomplete beta: a and b must be positive");
  require(x >= 0.0 && x <= 1.0, "incomplete beta: x must lie in [0, 1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                           a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return front * detail::beta_continued_fraction(a, b, x) / a;
  }
  return 1.0 - front * detail::beta_continued_fraction(b, a, 1.0 - x) / b;
}

/// P(|T| >= |t|) for Student's t with `dof` degrees of freedom.
inline double student_t_two_sided_p(double t, double dof) {
  require(dof > 0.0, "student t: degrees of freedom must be positive");
  if (std::isinf(t)) return 0.0;
  return regularized_incomplete_beta(0.5 * dof, 0.5, dof / (dof + t * t));
}

struct PairedTTest {
  std::size_t n = 0;
  double mean_difference = 0.0;
  double t = 0.0;
  double raw_p = 1.0;
  double corrected_p = 1.0;
  bool significant = false;
};

/// Two-sided paired Student's t-test on a[i] - b[i] with n - 1 degrees of
/// freedom; the p-value is Bonferroni-corrected by `num_comparisons`.
inline PairedTTest paired_ttest_bonferroni(std::span<const double> a, std::span<const double> b,
                                           std::size_t num_comparisons, double alpha = 0.001) {
  require(a.size() == b.size(), "paired t-test: samples differ in length (" +
                                    std::to_string(a.size()) + " vs " + std::to_string(b.size()) +
                                    ")");
  require(a.size() >= 2, "paired t-test: need at least 2 paired observations");
  require(num_comparisons >= 1, "paired t-test: num_comparisons must be at least 1");
  const std::size_t n = a.size();
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean += a[i] - b[i];
  mean /= static_cast<double>(n);
  double ss = 0.0;
  bool all_zero = true;
  for (std::size_t i = 0; i < n; ++i) {
    const double diff = a[i] - b[i];
    all_zero = all_zero && diff == 0.0;
    ss += (diff - mean) * (diff - mean);
  }
  PairedTTest r;
  r.n = n;
  r.mean_difference = mean;
  if (all_zero) return r;
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  if (!(sd > 0.0)) {
    throw NumericalError("paired t-test: differences are constant and non-zero (zero variance)");
  }
  r.t = mean / (sd / std::sqrt(static_cast<double>(n)));
  r.raw_p = student_t_two_sided_p(r.t, static_cast<double>(n - 1));
  r.corrected_p = std::min(1.0, r.raw_p * static_cast<double>(num_comparisons));
  r.significant = r.corrected_p < alpha;
  return r;
}

/// Correction and threshold applied to an already computed raw p-value.
inline PairedTTest bonferroni(double raw_p, std::size_t num_comparisons, double alpha = 0.001) {
  PairedTTest r;
  r.raw_p = raw_p;
  r.corrected_p = std::min(1.0, raw_p * static_cast<double>(num_comparisons));
  r.significant = r.corrected_p < alpha;
  return r;
}

}  // namespace desireme
