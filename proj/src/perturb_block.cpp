#include "kaclab/perturb_block.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include <Eigen/Eigenvalues>

#include "kaclab/parallel.hpp"

namespace kaclab {

namespace {
constexpr double kSqrt2 = std::numbers::sqrt2;
}

Scales::Scales(int n_, double c1_) : n(n_), c1(c1_) {
  if (n < 2) throw std::domain_error("Scales: n >= 2 required");
  if (!(c1 > 10.0)) throw std::domain_error("Scales: C1 > 10 required");
}

long Scales::m() const {
  const double nn = static_cast<double>(N());
  return static_cast<long>(std::ceil(c1 * nn * std::log(nn)));
}

double Scales::sigma() const { return std::pow(static_cast<double>(N()), -3.0); }

double Scales::omega() const { return std::pow(static_cast<double>(N()), -4.0); }

UpdateBlock sample_block(int n, long length, RngStream& rng) {
  UpdateBlock block;
  block.updates.reserve(length);
  for (long t = 0; t < length; ++t) block.updates.push_back(sample_update(n, rng));
  return block;
}

UpdateBlock sample_block(const Scales& scales, RngStream& rng) {
  return sample_block(scales.n, scales.m(), rng);
}

Matrix perturbed_product(int n, const UpdateBlock& a, const Vector& delta) {
  if (delta.size() != a.m())
    throw std::domain_error("perturbed_product: delta length " +
                            std::to_string(delta.size()) +
                            " does not match block length " +
                            std::to_string(a.m()));
  ChainState state{Matrix::Identity(n, n), 0};
  for (long t = 0; t < a.m(); ++t) {
    const Update& upd = a.updates[t];
    step_in_place(state, Update{upd.plane, upd.angle + delta[t]});
  }
  return state.position;
}

Matrix unperturbed_product(int n, const UpdateBlock& a) {
  return perturbed_product(n, a, Vector::Zero(a.m()));
}

Matrix relative_perturbation(int n, const UpdateBlock& a,
                             const Vector& delta) {
  return perturbed_product(n, a, delta) * unperturbed_product(n, a).transpose();
}

namespace {

// Right-multiply p by R(plane, theta) in place: a column-pair update.
void absorb_right(Matrix& p, int n, int plane, double theta) {
  auto [a, b] = plane_pair(n, plane);
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  for (int i = 0; i < n; ++i) {
    const double pa = p(i, a);
    const double pb = p(i, b);
    p(i, a) = c * pa - s * pb;
    p(i, b) = s * pa + c * pb;
  }
}

// Ad(p) a_i for a basis element via two columns of p:
// p a_i p^T = (p_a p_b^T - p_b p_a^T)/sqrt(2), with (a, b) the plane of i.
SkewVector adjoint_basis(const Matrix& p, int plane) {
  const int n = static_cast<int>(p.rows());
  auto [a, b] = plane_pair(n, plane);
  SkewVector v{n, Vector(plane_count(n))};
  int i = 0;
  for (int r = 0; r < n; ++r)
    for (int c = r + 1; c < n; ++c, ++i)
      v.coords[i] = (p(r, a) * p(c, b) - p(r, b) * p(c, a));
  // (E_ab - E_ba)/sqrt(2) sandwiched and re-expanded in the sqrt(2) basis
  // leaves the coefficients above unchanged; both factors of sqrt(2) cancel.
  return v;
}

}  // namespace

BlockAnalysis analyze_block(int n, const UpdateBlock& a) {
  const long m = a.m();
  const int nn = plane_count(n);
  BlockAnalysis an;
  an.n = n;
  an.m = m;
  an.jacobian.resize(nn, m);
  an.directions.resize(m);
  const bool store = n <= 32;
  if (store) an.suffix_products.resize(m);

  // One backward pass: maintain P = P_{t+1}, starting from P_{m+1} = Id.
  Matrix p = Matrix::Identity(n, n);
  for (long t = m - 1; t >= 0; --t) {
    if (store) an.suffix_products[t] = p;
    SkewVector v = adjoint_basis(p, a.updates[t].plane);
    an.jacobian.col(t) = kSqrt2 * v.coords;
    an.directions[t] = std::move(v);
    absorb_right(p, n, a.updates[t].plane, a.updates[t].angle);
  }

  an.covariance = an.jacobian * an.jacobian.transpose();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(an.covariance);
  an.eigenvalues = eig.eigenvalues();
  an.lambda_min = an.eigenvalues[0];
  an.lambda_max = an.eigenvalues[nn - 1];
  return an;
}

Matrix covariance_from_directions(const BlockAnalysis& an) {
  const int nn = plane_count(an.n);
  Matrix c = Matrix::Zero(nn, nn);
  for (const SkewVector& v : an.directions)
    c.noalias() += 2.0 * (v.coords * v.coords.transpose());
  return c;
}

bool in_spectrum_event(const BlockAnalysis& an) {
  const double ratio = static_cast<double>(an.m) / plane_count(an.n);
  return ratio <= an.lambda_min && an.lambda_max <= 3.0 * ratio;
}

double block_radius(long m) { return 1.0 / (8.0 * std::sqrt(2.0 * m)); }

LogCoordinates log_coordinates(const UpdateBlock& a, const Vector& delta,
                               const BlockAnalysis& an) {
  const long m = a.m();
  if (delta.size() != m)
    throw std::domain_error("log_coordinates: delta length mismatch");
  if (delta.norm() > block_radius(m))
    throw std::domain_error(
        "log_coordinates: ||delta|| exceeds the admissible radius " +
        std::to_string(block_radius(m)));
  SkewVector u = block_log(an.n, a, delta);
  SkewVector r{an.n, u.coords - an.jacobian * delta};
  return LogCoordinates{std::move(u), std::move(r)};
}

SkewVector block_log(int n, const UpdateBlock& a, const Vector& delta) {
  return principal_log(relative_perturbation(n, a, delta));
}

Matrix isotropy_mean_exact(const Matrix& g) {
  const int n = static_cast<int>(g.rows());
  const int nn = plane_count(n);
  Matrix mean = Matrix::Zero(nn, nn);
  for (int i = 0; i < nn; ++i) {
    const SkewVector v = adjoint_basis(g, i);
    mean.noalias() += v.coords * v.coords.transpose();
  }
  return mean / nn;
}

Matrix isotropy_mean_sampled(const Matrix& g, long num_samples,
                             RngStream& rng) {
  const int n = static_cast<int>(g.rows());
  const int nn = plane_count(n);
  Matrix mean = Matrix::Zero(nn, nn);
  for (long s = 0; s < num_samples; ++s) {
    const int i = static_cast<int>(rng.uniform_below(nn));
    const SkewVector v = adjoint_basis(g, i);
    mean.noalias() += v.coords * v.coords.transpose();
  }
  return mean / static_cast<double>(num_samples);
}

SpectrumExperiment spectrum_event_experiment(const Scales& scales, int trials,
                                             RngStream& rng, int workers) {
  const int nn = scales.N();
  const double ratio = static_cast<double>(scales.m()) / nn;

  SpectrumExperiment ex;
  ex.trials.resize(trials);
  std::vector<Matrix> covs(trials);
  parallel_for(trials, workers, [&](long k) {
    RngStream local = rng.fork(static_cast<std::uint64_t>(k));
    const UpdateBlock block = sample_block(scales, local);
    const BlockAnalysis an = analyze_block(scales.n, block);
    SpectrumTrial& tr = ex.trials[k];
    tr.lambda_min_norm = an.lambda_min / ratio;
    tr.lambda_max_norm = an.lambda_max / ratio;
    tr.op_deviation = std::max(std::abs(0.5 * an.lambda_min - ratio),
                               std::abs(0.5 * an.lambda_max - ratio));
    tr.in_event = in_spectrum_event(an);
    covs[k] = an.covariance;
  });

  long hits = 0;
  Matrix mean = Matrix::Zero(nn, nn);
  for (int k = 0; k < trials; ++k) {
    hits += ex.trials[k].in_event ? 1 : 0;
    mean += covs[k];
  }
  mean /= static_cast<double>(trials);
  ex.fraction_in_event = static_cast<double>(hits) / trials;
  ex.mean_covariance = mean;

  const Matrix target = 2.0 * ratio * Matrix::Identity(nn, nn);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(mean - target);
  ex.mean_op_deviation = eig.eigenvalues().cwiseAbs().maxCoeff();

  // MC scale of the averaged deviation: per-trial operator fluctuation of
  // M_A around its exact expectation, reduced by sqrt(trials).
  double s1 = 0.0;
  for (const SpectrumTrial& tr : ex.trials) s1 += 2.0 * tr.op_deviation;
  ex.mean_op_deviation_sigma = (s1 / trials) / std::sqrt(trials);
  return ex;
}

}  // namespace kaclab
