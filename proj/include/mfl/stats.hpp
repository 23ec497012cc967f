/** @file stats.hpp
 *  Least-squares fits, Monte Carlo standard errors and Kolmogorov–Smirnov statistics.
 */
#ifndef MFL_STATS_HPP
#define MFL_STATS_HPP

#include <vector>

namespace mfl {

struct LinearFit {
  double slope = 0, intercept = 0;
  double slope_se = 0;
  double ci_lo = 0, ci_hi = 0;  ///< 95% interval for the slope
  double residual = 0;          ///< root-mean-square residual
  int n = 0;
};

LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y);
/// Fit of log y against log x.
LinearFit loglog_fit(const std::vector<double>& x, const std::vector<double>& y);

/// Two-sided 97.5% Student quantile (Cornish–Fisher expansion; normal limit for large dof).
double student_t975(int dof);

struct MeanSE {
  double mean = 0, se = 0;
  int n = 0;
};

MeanSE mean_se(const std::vector<double>& v);
/// Standard error of the mean of a correlated series by non-overlapping batch means.
MeanSE batch_means(const std::vector<double>& v, int batches = 50);

struct KsResult {
  double statistic = 0;
  double p_value = 1;
  int n = 0;
};

/// Asymptotic survival function of the Kolmogorov distribution.
double kolmogorov_q(double lambda);

/// One-sample statistic of the samples against Exp(1).
KsResult ks_exponential(const std::vector<double>& samples);
KsResult ks_two_sample(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace mfl

#endif
