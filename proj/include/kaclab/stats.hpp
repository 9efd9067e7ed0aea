#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "kaclab/rng.hpp"

namespace kaclab {

/// Outcome of one statistical check. The verdict is a pure function of the
/// statistic (or p-value) and the threshold.
struct TestReport {
  std::string name;
  double statistic = 0.0;
  std::optional<double> p_value;
  double threshold = 0.0;
  bool pass = false;
  long num_samples = 0;
  std::uint64_t seed = 0;
};

double normal_cdf(double x);
double normal_quantile(double p);

/// Asymptotic p-value of the one-sample two-sided KS statistic d at sample
/// size n (Stephens' effective-size correction).
double ks_p_value(double d, long n);

/// One-sample Kolmogorov-Smirnov test against a given CDF. Requires at
/// least 8 samples; throws std::invalid_argument on a degenerate
/// (all-equal) sample. Passes iff p >= alpha.
TestReport ks_test(std::vector<double> sample,
                   const std::function<double(double)>& cdf, double alpha,
                   const std::string& name, std::uint64_t seed);

/// Pass iff |mean(samples) - target| <= multiplier * sd / sqrt(size).
/// The statistic is the deviation in MC-sigma units.
TestReport moment_test(const std::vector<double>& samples, double target,
                       double multiplier, const std::string& name,
                       std::uint64_t seed);

/// Two-sample version: |mean(a) - mean(b)| against the pooled standard
/// error, in MC-sigma units.
TestReport two_sample_moment_test(const std::vector<double>& a,
                                  const std::vector<double>& b,
                                  double multiplier, const std::string& name,
                                  std::uint64_t seed);

/// Freedman-Diaconis bin edges on the pooled sample. Shared bins keep the
/// two-sample histogram distance unbiased between the samples.
std::vector<double> fd_bin_edges(std::vector<double> pooled);

struct ProjectionTvEstimate {
  double estimate = 0.0;   // max over projections of the binned L1/2 distance
  double ci_lo = 0.0;      // basic bootstrap interval
  double ci_hi = 0.0;
  std::vector<double> per_projection;
};

/// Lower-bound TV estimate between the laws of the rows of x and y: max
/// over random unit projections of the half-L1 histogram distance, with a
/// basic bootstrap confidence interval over data resamples.
ProjectionTvEstimate projection_tv(const Eigen::MatrixXd& x,
                                   const Eigen::MatrixXd& y,
                                   int num_projections, RngStream& rng,
                                   int bootstrap = 200);

/// Permutation p-value for H0: both sample sets share one law, using the
/// projection-TV statistic. Large p means indistinguishable.
double projection_tv_permutation_pvalue(const Eigen::MatrixXd& x,
                                        const Eigen::MatrixXd& y,
                                        int num_projections,
                                        int num_permutations, RngStream& rng);

}  // namespace kaclab
