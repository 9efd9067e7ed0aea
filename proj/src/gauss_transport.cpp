#include "kaclab/gauss_transport.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "kaclab/parallel.hpp"

namespace kaclab {

GaussianLaw::GaussianLaw(Vector mean_, Matrix covariance_)
    : mean(std::move(mean_)), covariance(std::move(covariance_)) {
  if (covariance.rows() != covariance.cols() ||
      covariance.rows() != mean.size())
    throw std::invalid_argument("GaussianLaw: shape mismatch");
  const double asym = (covariance - covariance.transpose()).norm();
  if (asym > 1e-12 * std::max(1.0, covariance.norm()))
    throw std::invalid_argument("GaussianLaw: covariance not symmetric");
  covariance = 0.5 * (covariance + covariance.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(covariance);
  const double lmin = eig.eigenvalues()[0];
  if (lmin < -1e-12)
    throw std::invalid_argument("GaussianLaw: covariance not PSD");
  if (lmin < 0.0) {
    Vector clipped = eig.eigenvalues().cwiseMax(0.0);
    covariance = eig.eigenvectors() * clipped.asDiagonal() *
                 eig.eigenvectors().transpose();
  }
}

namespace {

Matrix sym_power(const Matrix& s, double p, double floor) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (s + s.transpose()));
  const Vector& ev = eig.eigenvalues();
  if (ev[0] <= floor)
    throw std::domain_error("sym_power: matrix not positive definite");
  Vector powered(ev.size());
  for (Eigen::Index i = 0; i < ev.size(); ++i) powered[i] = std::pow(ev[i], p);
  return eig.eigenvectors() * powered.asDiagonal() *
         eig.eigenvectors().transpose();
}

}  // namespace

Matrix sym_sqrt(const Matrix& s) { return sym_power(s, 0.5, -1.0); }

Matrix sym_inv_sqrt(const Matrix& s) { return sym_power(s, -0.5, 0.0); }

double CutoffFn::operator()(const Vector& x) const {
  const double s = x.squaredNorm() / (radius * radius);
  const double w = std::clamp((s - 4.0) / 5.0, 0.0, 1.0);
  return 1.0 - (3.0 * w * w - 2.0 * w * w * w);
}

Vector CutoffFn::gradient(const Vector& x) const {
  const double s = x.squaredNorm() / (radius * radius);
  const double w = (s - 4.0) / 5.0;
  if (w <= 0.0 || w >= 1.0) return Vector::Zero(x.size());
  const double deta = -(6.0 * w - 6.0 * w * w) / 5.0;
  return deta * 2.0 / (radius * radius) * x;
}

ShiftTv gaussian_shift_tv_bound(const GaussianLaw& law, const Vector& h) {
  const Matrix w = sym_inv_sqrt(law.covariance);  // throws if singular
  ShiftTv out;
  out.whitened_norm = (w * h).norm();
  out.bound = out.whitened_norm / std::numbers::sqrt2;
  out.exact_tv = 2.0 * normal_cdf(out.whitened_norm / 2.0) - 1.0;
  return out;
}

SkewVector bch_remainder(const SkewVector& xi, const SkewVector& h) {
  if (xi.n != h.n) throw std::invalid_argument("bch_remainder: n mismatch");
  if (xi.norm() > kBchChartRadius || h.norm() > kBchChartRadius)
    throw std::domain_error("bch_remainder: argument outside chart radius");
  const Matrix prod = mat_exp(xi) * mat_exp(h);
  SkewVector beta = principal_log(prod);
  beta.coords -= xi.coords + h.coords;
  return beta;
}

KlEstimate pushforward_kl(
    int dim, const std::function<Vector(const Vector&)>& residual,
    const std::function<Matrix(const Vector&)>& residual_jacobian,
    long num_samples, RngStream& rng) {
  double sum = 0.0, sumsq = 0.0;
  const Matrix id = Matrix::Identity(dim, dim);
  for (long s = 0; s < num_samples; ++s) {
    const Vector x = rng.normal_vector(dim);
    const Vector tx = x + residual(x);
    const Matrix b = residual_jacobian(x);
    Eigen::SelfAdjointEigenSolver<Matrix> btb(b.transpose() * b);
    const double op = std::sqrt(std::max(0.0, btb.eigenvalues().maxCoeff()));
    if (op > 0.5 + 1e-12)
      throw std::domain_error(
          "pushforward_kl: ||dR||_op exceeds 1/2 on a sample");
    const double det = (id + b).determinant();
    if (det <= 0.0)
      throw std::domain_error("pushforward_kl: non-invertible Jacobian");
    const double g =
        0.5 * (tx.squaredNorm() - x.squaredNorm()) - std::log(det);
    sum += g;
    sumsq += g * g;
  }
  KlEstimate est;
  est.num_samples = num_samples;
  est.estimate = sum / num_samples;
  const double var =
      std::max(0.0, sumsq / num_samples - est.estimate * est.estimate);
  est.std_error = std::sqrt(var / num_samples);
  return est;
}

namespace {

// Samples of U_A = log H_A(Delta) conditioned on E, as rows. Also reports
// the acceptance rate of E.
Matrix sample_block_law(const UpdateBlock& a, const Scales& scales,
                        long num_samples, RngStream& rng, int workers,
                        double* acceptance_rate) {
  const long m = a.m();
  const double sigma = scales.sigma();
  const double e_radius = 2.0 * sigma * std::sqrt(static_cast<double>(m));
  Matrix rows(num_samples, scales.N());
  std::vector<long> attempts(num_samples, 0);
  parallel_for(num_samples, workers, [&](long s) {
    RngStream local = rng.fork(static_cast<std::uint64_t>(s));
    for (;;) {
      ++attempts[s];
      const Vector delta = sigma * local.normal_vector(m);
      if (delta.norm() > e_radius) continue;
      rows.row(s) = block_log(scales.n, a, delta).coords.transpose();
      break;
    }
  });
  if (acceptance_rate) {
    long total = 0;
    for (long c : attempts) total += c;
    *acceptance_rate = static_cast<double>(num_samples) / total;
  }
  return rows;
}

}  // namespace

LawTestReport log_coordinate_law_test(const UpdateBlock& a,
                                      const Scales& scales,
                                      const BlockAnalysis& an,
                                      long num_samples, int num_projections,
                                      double family_alpha, RngStream& rng,
                                      int workers) {
  if (!in_spectrum_event(an))
    throw RegimeRefusal("log_coordinate_law_test: block outside spectrum event");

  const int nn = scales.N();
  const double sigma = scales.sigma();
  const Matrix sigma_a = sigma * sigma * an.covariance;
  const Matrix whiten = sym_inv_sqrt(sigma_a);

  LawTestReport report;
  report.family_alpha = family_alpha;
  const Matrix u_rows =
      sample_block_law(a, scales, num_samples, rng, workers,
                       &report.acceptance_rate);

  // (a) KS on whitened 1D projections; Bonferroni across projections.
  const Matrix whitened = u_rows * whiten;  // rows: Sigma^{-1/2} U
  const double per_test_alpha = family_alpha / num_projections;
  RngStream dir_rng = rng.fork(0x6469727eull);
  for (int p = 0; p < num_projections; ++p) {
    const Vector dir = dir_rng.unit_vector(nn);
    const Vector proj = whitened * dir;
    std::vector<double> sample(proj.data(), proj.data() + proj.size());
    TestReport ks = ks_test(sample, normal_cdf, per_test_alpha,
                            "whitened-projection-" + std::to_string(p),
                            rng.seed());
    report.min_p_value = std::min(report.min_p_value, *ks.p_value);
    report.ks_reports.push_back(std::move(ks));
  }

  // (b) sample covariance against Sigma_A in relative operator norm.
  const Vector mean = u_rows.colwise().mean();
  const Matrix centered = u_rows.rowwise() - mean.transpose();
  const Matrix sample_cov =
      centered.transpose() * centered / static_cast<double>(num_samples - 1);
  Eigen::SelfAdjointEigenSolver<Matrix> dev(sample_cov - sigma_a);
  Eigen::SelfAdjointEigenSolver<Matrix> ref(sigma_a);
  report.cov_rel_op_error = dev.eigenvalues().cwiseAbs().maxCoeff() /
                            ref.eigenvalues().cwiseAbs().maxCoeff();
  report.cov_tolerance =
      5.0 * std::sqrt(static_cast<double>(nn) / num_samples);

  const bool ks_pass = report.min_p_value >= per_test_alpha;
  report.pass = ks_pass && report.cov_rel_op_error <= report.cov_tolerance;
  return report;
}

double translate_regime_bound(const Scales& scales) {
  // omega-scale regime with slack for the unknown log constant; far below
  // the BCH chart radius at every desk scale.
  return 8.0 * scales.omega();
}

TranslateCost translate_cost_experiment(const UpdateBlock& a,
                                        const Scales& scales,
                                        const BlockAnalysis& an,
                                        const SkewVector& h, long num_samples,
                                        int num_projections, RngStream& rng,
                                        int workers) {
  if (!in_spectrum_event(an))
    throw RegimeRefusal("translate_cost: block outside spectrum event");
  const double h_norm = h.norm();
  if (h_norm > translate_regime_bound(scales))
    throw RegimeRefusal("translate_cost: ||h|| outside the omega-scale regime");

  const int n = scales.n;
  const long m = a.m();
  const double sigma = scales.sigma();
  const double ratio = static_cast<double>(m) / scales.N();
  const Matrix sigma_a = sigma * sigma * an.covariance;

  TranslateCost out;
  out.num_samples = num_samples;
  out.condition_number = an.lambda_max / an.lambda_min;

  // Remainder constant at the Gaussian scale: max ||u - J delta|| over
  // draws conditioned on E, normalized by m ||delta||^2.
  {
    RngStream local = rng.fork(0x72656d31ull);
    const double e_radius = 2.0 * sigma * std::sqrt(static_cast<double>(m));
    double c0 = 0.0;
    for (int k = 0; k < 200; ++k) {
      Vector delta = sigma * local.normal_vector(m);
      if (delta.norm() > e_radius) delta *= e_radius / delta.norm();
      const SkewVector u = block_log(n, a, delta);
      const double rnorm = (u.coords - an.jacobian * delta).norm();
      c0 = std::max(c0, rnorm / (m * delta.squaredNorm()));
    }
    out.c0_measured = c0;
    // sup ||r|| on supp(chi) is 9 C0 sigma^2 m^2; dividing by sigma rho_A
    // with rho_A >= sqrt(m/N) gives the bound term.
    out.gaussian_approx_term = 9.0 * c0 * sigma * m * m / std::sqrt(ratio);
  }

  // Shift term, exact.
  const GaussianLaw gamma_a(Vector::Zero(scales.N()), sigma_a);
  const ShiftTv shift = gaussian_shift_tv_bound(gamma_a, h.coords);
  out.whitened_shift = shift.whitened_norm;
  out.shift_term = shift.bound;
  out.exact_gaussian_tv = shift.exact_tv;

  // BCH constant measured at a capped scale (the ratio is scale-stable),
  // then applied at ||h||.
  {
    RngStream local = rng.fork(0x62636831ull);
    const Matrix half = sym_sqrt(sigma_a);
    const double cap = 0.5 * kBchChartRadius;
    double cstar = 0.0;
    const double h_scale = std::min(h_norm, cap);
    if (h_scale > 0.0) {
      SkewVector hh{n, h.coords * (h_scale / h_norm)};
      for (int k = 0; k < 200; ++k) {
        Vector xi_coords = half * local.normal_vector(scales.N());
        const double xnorm = xi_coords.norm();
        if (xnorm == 0.0) continue;
        const double scale = std::min(xnorm, cap);
        SkewVector xi{n, xi_coords * (scale / xnorm)};
        const SkewVector beta = bch_remainder(xi, hh);
        cstar = std::max(cstar, beta.norm() / (xi.norm() * hh.norm()));
      }
    }
    out.bch_constant_measured = cstar;
    out.bch_term = cstar * std::sqrt(out.condition_number * scales.N()) * h_norm;
  }

  // Empirical projection-TV between the block law and its right translate.
  {
    const Matrix g = mat_exp(h);
    Matrix sx(num_samples, n * n), sy(num_samples, n * n);
    parallel_for(num_samples, workers, [&](long s) {
      RngStream local = rng.fork(0x74760000ull + static_cast<std::uint64_t>(s));
      const Vector d1 = sigma * local.normal_vector(m);
      const Vector d2 = sigma * local.normal_vector(m);
      const Matrix h1 = relative_perturbation(n, a, d1);
      const Matrix h2 = relative_perturbation(n, a, d2) * g;
      sx.row(s) = Eigen::Map<const Vector>(h1.data(), n * n).transpose();
      sy.row(s) = Eigen::Map<const Vector>(h2.data(), n * n).transpose();
    });
    RngStream proj_rng = rng.fork(0x74767072ull);
    out.projection = projection_tv(sx, sy, num_projections, proj_rng);
  }
  return out;
}

CoupledPair reflection_maximal_couple(const Matrix& cov_sqrt,
                                      const Matrix& cov_inv_sqrt,
                                      const Vector& mu1, const Vector& mu2,
                                      RngStream& rng) {
  const Eigen::Index d = mu1.size();
  const Vector xi = rng.normal_vector(d);
  CoupledPair out;
  out.first = mu1 + cov_sqrt * xi;
  const Vector z = cov_inv_sqrt * (mu1 - mu2);
  const double znorm = z.norm();
  if (znorm < 1e-14) {
    out.second = out.first;
    out.met = true;
    return out;
  }
  const Vector e = z / znorm;
  const double along = e.dot(xi);
  // log of the 1D density ratio phi(t + |z|) / phi(t)
  const double log_ratio = -0.5 * (along + znorm) * (along + znorm) +
                           0.5 * along * along;
  if (std::log(rng.uniform01() + 1e-300) <= log_ratio) {
    out.second = mu2 + cov_sqrt * (xi + z);  // equals out.first: coalesce
    out.met = true;
  } else {
    const Vector reflected = xi - 2.0 * along * e;
    out.second = mu2 + cov_sqrt * reflected;
    out.met = false;
  }
  return out;
}

}  // namespace kaclab
