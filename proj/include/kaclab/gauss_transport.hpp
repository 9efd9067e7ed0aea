#pragma once

#include <functional>
#include <vector>

#include "kaclab/lie.hpp"
#include "kaclab/perturb_block.hpp"
#include "kaclab/rng.hpp"
#include "kaclab/stats.hpp"

namespace kaclab {

/// Chart radius for the BCH remainder: e^{2 r} - 1 <= 1/2 holds at 0.2.
inline constexpr double kBchChartRadius = 0.2;

/// Thrown when an experiment's scale-regime precondition fails; callers
/// must refuse rather than extrapolate (CLI exit code 3).
struct RegimeRefusal : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Centered or shifted Gaussian on R^d. The covariance is symmetrized on
/// construction and eigenvalues below -1e-12 are rejected, tiny negatives
/// are clipped to zero.
struct GaussianLaw {
  Vector mean;
  Matrix covariance;

  GaussianLaw(Vector mean, Matrix covariance);
};

Matrix sym_sqrt(const Matrix& s);
/// Inverse square root of a symmetric PD matrix; std::domain_error when
/// the smallest eigenvalue is not strictly positive.
Matrix sym_inv_sqrt(const Matrix& s);

/// Smooth radial cutoff: 1 on ||x|| <= 2R, 0 on ||x|| >= 3R, built from the
/// C^2 ramp eta(s) = 1 - (3w^2 - 2w^3), w = clamp((s-4)/5, 0, 1) applied to
/// s = ||x||^2/R^2. Gradient norm stays below grad_bound().
struct CutoffFn {
  int dim;
  double radius;

  double operator()(const Vector& x) const;
  Vector gradient(const Vector& x) const;
  double grad_bound() const { return 1.8 / radius; }
};

struct ShiftTv {
  double whitened_norm = 0.0;  // d = ||Sigma^{-1/2} h||_2
  double bound = 0.0;          // d / sqrt(2)
  double exact_tv = 0.0;       // 2 Phi(d/2) - 1
};

/// Total-variation cost of shifting N(0, Sigma) by h: the Pinsker-type
/// bound together with the exact value for comparison.
ShiftTv gaussian_shift_tv_bound(const GaussianLaw& law, const Vector& h);

/// beta_h(xi) = log(exp(xi) exp(h)) - xi - h. Both arguments must lie in
/// the HS ball of radius kBchChartRadius.
SkewVector bch_remainder(const SkewVector& xi, const SkewVector& h);

struct KlEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
  long num_samples = 0;
};

/// Monte Carlo estimate of KL(T_# gamma_d || gamma_d) for T = Id + R via
/// the exact change-of-variables identity
///   KL = E[ (||T(X)||^2 - ||X||^2)/2 - log det dT(X) ].
/// Requires sup ||dR||_op <= 1/2; checked on every sample.
KlEstimate pushforward_kl(
    int dim, const std::function<Vector(const Vector&)>& residual,
    const std::function<Matrix(const Vector&)>& residual_jacobian,
    long num_samples, RngStream& rng);

struct LawTestReport {
  std::vector<TestReport> ks_reports;  // whitened 1D projections
  double min_p_value = 1.0;
  double family_alpha = 0.0;           // Bonferroni-corrected family level
  double cov_rel_op_error = 0.0;
  double cov_tolerance = 0.0;
  double acceptance_rate = 0.0;        // of the conditioning event E
  bool pass = false;
};

/// Compares the conditional law of U_A = log H_A(Delta) given
/// E = {||Delta|| <= 2 sigma sqrt(m)} against N(0, sigma^2 M_A): KS tests
/// on whitened random projections (Bonferroni at family_alpha) and the
/// sample covariance in relative operator norm. Throws RegimeRefusal when
/// the block is outside the spectrum event.
LawTestReport log_coordinate_law_test(const UpdateBlock& a,
                                      const Scales& scales,
                                      const BlockAnalysis& an,
                                      long num_samples, int num_projections,
                                      double family_alpha, RngStream& rng,
                                      int workers = 0);

struct TranslateCost {
  double gaussian_approx_term = 0.0;  // 9 C0_meas sigma m^2 / sqrt(m/N)
  double c0_measured = 0.0;           // max ||r|| / (m ||delta||^2)
  double shift_term = 0.0;            // ||Sigma^{-1/2} h|| / sqrt(2), exact
  double whitened_shift = 0.0;
  double exact_gaussian_tv = 0.0;     // 2 Phi(d/2) - 1 for the shift
  double bch_term = 0.0;              // C*_meas sqrt(kappa N) ||h||
  double bch_constant_measured = 0.0;
  double condition_number = 0.0;      // kappa(Sigma_A)
  ProjectionTvEstimate projection;    // empirical TV between the two laws
  long num_samples = 0;
};

/// Evaluates each term of the translation-cost budget for right
/// multiplication by exp(h), plus a projection-TV estimate between the
/// block law and its translate. Throws RegimeRefusal when the block is
/// outside the spectrum event or ||h|| is outside the omega-scale regime.
TranslateCost translate_cost_experiment(const UpdateBlock& a,
                                        const Scales& scales,
                                        const BlockAnalysis& an,
                                        const SkewVector& h, long num_samples,
                                        int num_projections, RngStream& rng,
                                        int workers = 0);

/// ||h|| gate used by translate_cost_experiment and the two-stage
/// experiment: the omega_n scale regime with a fixed slack factor.
double translate_regime_bound(const Scales& scales);

struct CoupledPair {
  Vector first;
  Vector second;
  bool met = false;
};

/// Reflection-maximal coupling of N(mu1, Sigma) and N(mu2, Sigma) given
/// Sigma^{1/2} and Sigma^{-1/2}. The meeting probability equals
/// 1 - TV(N(mu1, Sigma), N(mu2, Sigma)).
CoupledPair reflection_maximal_couple(const Matrix& cov_sqrt,
                                      const Matrix& cov_inv_sqrt,
                                      const Vector& mu1, const Vector& mu2,
                                      RngStream& rng);

}  // namespace kaclab
