#pragma once

#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace kaclab {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Orthogonality budget for SO(n) membership, measured as ||M^T M - I||_HS.
inline constexpr double kOrthTol = 1e-9;

/// principal_log refuses rotation angles within this margin of pi.
inline constexpr double kLogAngleMargin = 1e-6;

// Coordinate planes (a, b), 0 <= a < b < n, ordered lexicographically.
// plane_index and plane_pair are mutually inverse bijections with
// {0, ..., n(n-1)/2 - 1}.
int plane_count(int n);
std::pair<int, int> plane_pair(int n, int index);
int plane_index(int n, int a, int b);
std::vector<std::pair<int, int>> plane_pairs(int n);

/// Element of so(n) stored as coordinates in the orthonormal basis
/// a_i = (E_ab - E_ba)/sqrt(2) under the trace inner product, so the
/// Euclidean norm of `coords` equals the HS norm of the reconstruction.
struct SkewVector {
  int n = 0;
  Vector coords;

  static SkewVector zero(int n);
  double norm() const { return coords.norm(); }
};

/// Basis element a_i as a dense n x n matrix; unit HS norm.
Matrix basis_matrix(int n, int index);

Matrix skew_to_matrix(const SkewVector& u);

/// Coordinates of the skew part (M - M^T)/2; exact for skew input.
SkewVector skew_from_matrix(const Matrix& m);

/// Rotation by `theta` in coordinate plane `index`: identity outside the
/// plane, [[cos, sin], [-sin, cos]] inside; equals exp(sqrt(2) theta a_i).
Matrix plane_rotation(int n, int index, double theta);

/// Matrix exponential of a skew-symmetric matrix, via real Schur reduction
/// to 2x2 rotation blocks. exp(0) is exactly the identity.
Matrix mat_exp(const SkewVector& u);

/// Principal logarithm of a rotation matrix. Throws std::domain_error when
/// any rotation angle lies within kLogAngleMargin of pi (no branch is ever
/// chosen silently) or when the input fails the orthogonality check.
SkewVector principal_log(const Matrix& g);

/// Ad(g) u = g u g^T, returned in basis coordinates. Orthogonal on so(n).
SkewVector adjoint(const Matrix& g, const SkewVector& u);

/// Bi-invariant Riemannian distance ||log(x^T y)||_HS. Same domain
/// restriction as principal_log.
double riem_dist(const Matrix& x, const Matrix& y);

double orthogonality_defect(const Matrix& m);
bool is_rotation(const Matrix& m, double tol = kOrthTol);

/// Nearest rotation (polar factor); used to control drift in long products.
Matrix project_to_rotation(const Matrix& m);

}  // namespace kaclab
