#pragma once

#include <vector>

#include "kaclab/kac_chain.hpp"
#include "kaclab/lie.hpp"
#include "kaclab/rng.hpp"

namespace kaclab {

/// Polynomial scale choices tied to (n, C1): N = n(n-1)/2,
/// m = ceil(C1 N log N), sigma = N^-3, omega = N^-4. Derived quantities are
/// always recomputed, never stored.
struct Scales {
  int n;
  double c1;

  Scales(int n, double c1);

  int N() const { return plane_count(n); }
  long m() const;
  double sigma() const;
  double omega() const;
};

/// Ordered update block A = ((i_1, theta_1), ..., (i_m, theta_m)).
struct UpdateBlock {
  std::vector<Update> updates;

  long m() const { return static_cast<long>(updates.size()); }
};

UpdateBlock sample_block(int n, long length, RngStream& rng);
UpdateBlock sample_block(const Scales& scales, RngStream& rng);

/// L_A(delta) = R(i_m, theta_m + delta_m) ... R(i_1, theta_1 + delta_1).
Matrix perturbed_product(int n, const UpdateBlock& a, const Vector& delta);
Matrix unperturbed_product(int n, const UpdateBlock& a);

/// H_A(delta) = L_A(delta) L_A(0)^{-1}.
Matrix relative_perturbation(int n, const UpdateBlock& a, const Vector& delta);

/// Derived quantities of a block: suffix products P_{t+1}, transported
/// directions v_t = Ad(P_{t+1}) a_{i_t}, the Jacobian with columns
/// sqrt(2) v_t, the covariance M_A = J_A J_A^T, and its spectrum.
struct BlockAnalysis {
  int n = 0;
  long m = 0;
  // suffix_products[t] = P_{t+2} for t = 0..m-1 in paper indexing, i.e. the
  // product applied to the right of update t+1; identity at t = m-1.
  // Stored only for n <= 32 (O(m n^2) memory); empty otherwise.
  std::vector<Matrix> suffix_products;
  std::vector<SkewVector> directions;  // v_t, unit HS norm
  Matrix jacobian;                     // N x m
  Matrix covariance;                   // M_A, N x N symmetric PSD
  Vector eigenvalues;                  // ascending
  double lambda_min = 0.0;
  double lambda_max = 0.0;
};

BlockAnalysis analyze_block(int n, const UpdateBlock& a);

/// Second computation path for M_A: 2 sum_t v_t v_t^T.
Matrix covariance_from_directions(const BlockAnalysis& an);

/// Spectrum event G_A: m/N <= lambda_min(M_A) and lambda_max(M_A) <= 3 m/N,
/// with m the block length.
bool in_spectrum_event(const BlockAnalysis& an);

/// Admissible perturbation radius: accept delta iff
/// sqrt(2 m) ||delta||_2 <= 1/8, the sufficient condition for the principal
/// logarithm of H_A(delta) and its quadratic expansion.
double block_radius(long m);

struct LogCoordinates {
  SkewVector u;          // log H_A(delta)
  SkewVector remainder;  // r_A(delta) = u - J_A delta
};

/// Logarithmic coordinates with the explicit remainder of the expansion
/// u_A(delta) = J_A delta + r_A(delta). Throws std::domain_error outside
/// block_radius (no silent extrapolation).
LogCoordinates log_coordinates(const UpdateBlock& a, const Vector& delta,
                               const BlockAnalysis& an);

/// log H_A(delta) gated only by the principal-log chart, not by
/// block_radius; for sampling the block law at desk scale where typical
/// Gaussian perturbations exceed the conservative radius.
SkewVector block_log(int n, const UpdateBlock& a, const Vector& delta);

/// Exact average over all N planes of (Ad(g) a_i)(Ad(g) a_i)^T; equals
/// I_N / N for every rotation g.
Matrix isotropy_mean_exact(const Matrix& g);

/// Monte Carlo version with i sampled uniformly.
Matrix isotropy_mean_sampled(const Matrix& g, long num_samples,
                             RngStream& rng);

struct SpectrumTrial {
  double lambda_min_norm = 0.0;  // lambda_min(M_A) * N / m
  double lambda_max_norm = 0.0;
  double op_deviation = 0.0;     // ||C_A - (m/N) I||_op, C_A = M_A / 2
  bool in_event = false;
};

struct SpectrumExperiment {
  std::vector<SpectrumTrial> trials;
  double fraction_in_event = 0.0;
  Matrix mean_covariance;        // empirical mean of M_A
  double mean_op_deviation = 0.0;       // ||mean - (2m/N) I||_op
  double mean_op_deviation_sigma = 0.0; // MC sigma of that deviation
};

SpectrumExperiment spectrum_event_experiment(const Scales& scales, int trials,
                                             RngStream& rng, int workers = 0);

}  // namespace kaclab
