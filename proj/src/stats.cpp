#include "kaclab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace kaclab {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0))
    throw std::invalid_argument("normal_quantile: p in (0,1) required");
  // Bisection on the CDF; plenty accurate for test thresholds.
  double lo = -40.0, hi = 40.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (normal_cdf(mid) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double ks_p_value(double d, long n) {
  const double sn = std::sqrt(static_cast<double>(n));
  const double lambda = (sn + 0.12 + 0.11 / sn) * d;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1 ? term : -term);
    if (term < 1e-16) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

TestReport ks_test(std::vector<double> sample,
                   const std::function<double(double)>& cdf, double alpha,
                   const std::string& name, std::uint64_t seed) {
  const long n = static_cast<long>(sample.size());
  if (n < 8) throw std::invalid_argument("ks_test: need at least 8 samples");
  std::sort(sample.begin(), sample.end());
  if (sample.front() == sample.back())
    throw std::invalid_argument("ks_test: degenerate sample (all values equal)");
  double d = 0.0;
  for (long i = 0; i < n; ++i) {
    const double f = cdf(sample[i]);
    d = std::max(d, std::max((i + 1.0) / n - f, f - static_cast<double>(i) / n));
  }
  TestReport report;
  report.name = name;
  report.statistic = d;
  report.p_value = ks_p_value(d, n);
  report.threshold = alpha;
  report.pass = *report.p_value >= alpha;
  report.num_samples = n;
  report.seed = seed;
  return report;
}

namespace {

std::pair<double, double> mean_sd(const std::vector<double>& v) {
  const double n = static_cast<double>(v.size());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  const double sd = v.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  return {mean, sd};
}

}  // namespace

TestReport moment_test(const std::vector<double>& samples, double target,
                       double multiplier, const std::string& name,
                       std::uint64_t seed) {
  if (samples.size() < 100)
    throw std::invalid_argument("moment_test: need at least 100 samples");
  auto [mean, sd] = mean_sd(samples);
  const double se = sd / std::sqrt(static_cast<double>(samples.size()));
  const double dev = std::abs(mean - target);
  TestReport report;
  report.name = name;
  report.statistic = se > 0.0 ? dev / se : (dev == 0.0 ? 0.0 : HUGE_VAL);
  report.threshold = multiplier;
  report.pass = dev <= multiplier * se || dev == 0.0;
  report.num_samples = static_cast<long>(samples.size());
  report.seed = seed;
  return report;
}

TestReport two_sample_moment_test(const std::vector<double>& a,
                                  const std::vector<double>& b,
                                  double multiplier, const std::string& name,
                                  std::uint64_t seed) {
  if (a.size() < 100 || b.size() < 100)
    throw std::invalid_argument("two_sample_moment_test: need >= 100 samples");
  auto [ma, sa] = mean_sd(a);
  auto [mb, sb] = mean_sd(b);
  const double se = std::sqrt(sa * sa / a.size() + sb * sb / b.size());
  const double dev = std::abs(ma - mb);
  TestReport report;
  report.name = name;
  report.statistic = se > 0.0 ? dev / se : (dev == 0.0 ? 0.0 : HUGE_VAL);
  report.threshold = multiplier;
  report.pass = dev <= multiplier * se || dev == 0.0;
  report.num_samples = static_cast<long>(a.size() + b.size());
  report.seed = seed;
  return report;
}

std::vector<double> fd_bin_edges(std::vector<double> pooled) {
  if (pooled.size() < 4)
    throw std::invalid_argument("fd_bin_edges: need at least 4 values");
  std::sort(pooled.begin(), pooled.end());
  const std::size_t n = pooled.size();
  const double q1 = pooled[n / 4];
  const double q3 = pooled[(3 * n) / 4];
  const double lo = pooled.front();
  const double hi = pooled.back();
  double width = 2.0 * (q3 - q1) * std::pow(static_cast<double>(n), -1.0 / 3.0);
  if (width <= 0.0) width = (hi - lo) > 0.0 ? (hi - lo) : 1.0;
  long bins = std::lround(std::ceil((hi - lo) / width));
  bins = std::clamp(bins, 1l, 4096l);
  std::vector<double> edges(bins + 1);
  for (long k = 0; k <= bins; ++k)
    edges[k] = lo + (hi - lo) * static_cast<double>(k) / bins;
  return edges;
}

namespace {

std::vector<long> histogram(const std::vector<double>& values,
                            const std::vector<double>& edges) {
  const long bins = static_cast<long>(edges.size()) - 1;
  std::vector<long> counts(bins, 0);
  const double lo = edges.front();
  const double hi = edges.back();
  const double span = hi - lo;
  for (double v : values) {
    long k;
    if (v <= lo)
      k = 0;
    else if (v >= hi)
      k = bins - 1;
    else
      k = std::min(bins - 1, static_cast<long>((v - lo) / span * bins));
    ++counts[k];
  }
  return counts;
}

double binned_tv(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> pooled;
  pooled.reserve(a.size() + b.size());
  pooled.insert(pooled.end(), a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  const std::vector<double> edges = fd_bin_edges(std::move(pooled));
  const std::vector<long> ca = histogram(a, edges);
  const std::vector<long> cb = histogram(b, edges);
  double tv = 0.0;
  for (std::size_t k = 0; k < ca.size(); ++k)
    tv += std::abs(static_cast<double>(ca[k]) / a.size() -
                   static_cast<double>(cb[k]) / b.size());
  return 0.5 * tv;
}

std::vector<std::vector<double>> project_rows(const Eigen::MatrixXd& x,
                                              const std::vector<Eigen::VectorXd>& dirs) {
  std::vector<std::vector<double>> out(dirs.size());
  for (std::size_t p = 0; p < dirs.size(); ++p) {
    const Eigen::VectorXd proj = x * dirs[p];
    out[p].assign(proj.data(), proj.data() + proj.size());
  }
  return out;
}

double max_projection_tv(const std::vector<std::vector<double>>& px,
                         const std::vector<std::vector<double>>& py) {
  double best = 0.0;
  for (std::size_t p = 0; p < px.size(); ++p)
    best = std::max(best, binned_tv(px[p], py[p]));
  return best;
}

}  // namespace

ProjectionTvEstimate projection_tv(const Eigen::MatrixXd& x,
                                   const Eigen::MatrixXd& y,
                                   int num_projections, RngStream& rng,
                                   int bootstrap) {
  if (x.cols() != y.cols())
    throw std::invalid_argument("projection_tv: dimension mismatch");
  const Eigen::Index dim = x.cols();
  std::vector<Eigen::VectorXd> dirs(num_projections);
  for (int p = 0; p < num_projections; ++p) dirs[p] = rng.unit_vector(dim);

  const auto px = project_rows(x, dirs);
  const auto py = project_rows(y, dirs);

  ProjectionTvEstimate est;
  est.per_projection.resize(num_projections);
  for (int p = 0; p < num_projections; ++p)
    est.per_projection[p] = binned_tv(px[p], py[p]);
  est.estimate =
      *std::max_element(est.per_projection.begin(), est.per_projection.end());

  if (bootstrap > 0) {
    const std::size_t nx = px[0].size();
    const std::size_t ny = py[0].size();
    std::vector<double> stats(bootstrap);
    std::vector<std::vector<double>> rx(dirs.size()), ry(dirs.size());
    for (int b = 0; b < bootstrap; ++b) {
      RngStream boot = rng.fork(0x626f6f74ull + b);
      std::vector<std::size_t> ix(nx), iy(ny);
      for (auto& i : ix) i = boot.uniform_below(nx);
      for (auto& i : iy) i = boot.uniform_below(ny);
      for (std::size_t p = 0; p < dirs.size(); ++p) {
        rx[p].resize(nx);
        ry[p].resize(ny);
        for (std::size_t i = 0; i < nx; ++i) rx[p][i] = px[p][ix[i]];
        for (std::size_t i = 0; i < ny; ++i) ry[p][i] = py[p][iy[i]];
      }
      stats[b] = max_projection_tv(rx, ry);
    }
    std::sort(stats.begin(), stats.end());
    const double q_lo = stats[static_cast<std::size_t>(0.025 * (bootstrap - 1))];
    const double q_hi = stats[static_cast<std::size_t>(0.975 * (bootstrap - 1))];
    // Basic bootstrap interval; corrects the first-order bias of the
    // binned statistic.
    est.ci_lo = 2.0 * est.estimate - q_hi;
    est.ci_hi = 2.0 * est.estimate - q_lo;
  }
  return est;
}

double projection_tv_permutation_pvalue(const Eigen::MatrixXd& x,
                                        const Eigen::MatrixXd& y,
                                        int num_projections,
                                        int num_permutations, RngStream& rng) {
  if (x.cols() != y.cols())
    throw std::invalid_argument("projection_tv: dimension mismatch");
  const Eigen::Index dim = x.cols();
  std::vector<Eigen::VectorXd> dirs(num_projections);
  for (int p = 0; p < num_projections; ++p) dirs[p] = rng.unit_vector(dim);

  const auto px = project_rows(x, dirs);
  const auto py = project_rows(y, dirs);
  const double observed = max_projection_tv(px, py);

  const std::size_t nx = px[0].size();
  const std::size_t ny = py[0].size();
  std::vector<std::size_t> labels(nx + ny);
  std::iota(labels.begin(), labels.end(), 0);

  long exceed = 0;
  std::vector<std::vector<double>> sx(dirs.size()), sy(dirs.size());
  for (int b = 0; b < num_permutations; ++b) {
    RngStream perm = rng.fork(0x7065726dull + b);
    // Fisher-Yates shuffle of the pooled labels.
    for (std::size_t i = labels.size() - 1; i > 0; --i)
      std::swap(labels[i], labels[perm.uniform_below(i + 1)]);
    for (std::size_t p = 0; p < dirs.size(); ++p) {
      sx[p].resize(nx);
      sy[p].resize(ny);
      for (std::size_t i = 0; i < nx + ny; ++i) {
        const std::size_t src = labels[i];
        const double v = src < nx ? px[p][src] : py[p][src - nx];
        if (i < nx)
          sx[p][i] = v;
        else
          sy[p][i - nx] = v;
      }
    }
    if (max_projection_tv(sx, sy) >= observed) ++exceed;
  }
  return (1.0 + exceed) / (1.0 + num_permutations);
}

}  // namespace kaclab
