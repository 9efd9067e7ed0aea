#include "kaclab/lie.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace kaclab {

namespace {
constexpr double kSqrt2 = std::numbers::sqrt2;
constexpr double kPi = std::numbers::pi;

// Block boundaries of a real quasi-triangular Schur factor. Eigen leaves
// exact zeros on the subdiagonal outside 2x2 blocks.
bool is_two_by_two(const Matrix& t, int k) {
  return k + 1 < t.rows() && std::abs(t(k + 1, k)) > 1e-12;
}
}  // namespace

int plane_count(int n) { return n * (n - 1) / 2; }

std::pair<int, int> plane_pair(int n, int index) {
  if (n < 2 || index < 0 || index >= plane_count(n))
    throw std::domain_error("plane_pair: index " + std::to_string(index) +
                            " out of range for n=" + std::to_string(n));
  int a = 0;
  int rem = index;
  while (rem >= n - 1 - a) {
    rem -= n - 1 - a;
    ++a;
  }
  return {a, a + 1 + rem};
}

int plane_index(int n, int a, int b) {
  if (!(0 <= a && a < b && b < n))
    throw std::domain_error("plane_index: need 0 <= a < b < n");
  return a * (n - 1) - a * (a - 1) / 2 + (b - a - 1);
}

std::vector<std::pair<int, int>> plane_pairs(int n) {
  std::vector<std::pair<int, int>> pairs;
  pairs.reserve(plane_count(n));
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b) pairs.emplace_back(a, b);
  return pairs;
}

SkewVector SkewVector::zero(int n) {
  return SkewVector{n, Vector::Zero(plane_count(n))};
}

Matrix basis_matrix(int n, int index) {
  auto [a, b] = plane_pair(n, index);
  Matrix m = Matrix::Zero(n, n);
  m(a, b) = 1.0 / kSqrt2;
  m(b, a) = -1.0 / kSqrt2;
  return m;
}

Matrix skew_to_matrix(const SkewVector& u) {
  const int n = u.n;
  Matrix m = Matrix::Zero(n, n);
  int i = 0;
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b, ++i) {
      const double v = u.coords[i] / kSqrt2;
      m(a, b) = v;
      m(b, a) = -v;
    }
  return m;
}

SkewVector skew_from_matrix(const Matrix& m) {
  const int n = static_cast<int>(m.rows());
  SkewVector u{n, Vector(plane_count(n))};
  int i = 0;
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b, ++i)
      u.coords[i] = (m(a, b) - m(b, a)) / kSqrt2;
  return u;
}

Matrix plane_rotation(int n, int index, double theta) {
  auto [a, b] = plane_pair(n, index);
  Matrix r = Matrix::Identity(n, n);
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  r(a, a) = c;
  r(b, b) = c;
  r(a, b) = s;
  r(b, a) = -s;
  return r;
}

Matrix mat_exp(const SkewVector& u) {
  const int n = u.n;
  const Matrix m = skew_to_matrix(u);
  if (m.isZero(0.0)) return Matrix::Identity(n, n);

  Eigen::RealSchur<Matrix> schur(m);
  const Matrix& t = schur.matrixT();
  const Matrix& q = schur.matrixU();

  Matrix e = Matrix::Identity(n, n);
  for (int k = 0; k < n;) {
    if (is_two_by_two(t, k)) {
      // Skew 2x2 block [[~0, b], [-b, ~0]].
      const double b = 0.5 * (t(k, k + 1) - t(k + 1, k));
      const double c = std::cos(b);
      const double s = std::sin(b);
      e(k, k) = c;
      e(k + 1, k + 1) = c;
      e(k, k + 1) = s;
      e(k + 1, k) = -s;
      k += 2;
    } else {
      k += 1;  // zero eigenvalue, exp = 1
    }
  }
  return q * e * q.transpose();
}

namespace {

// Shared core of principal_log and riem_dist: reduce g to 2x2 rotation
// blocks, extract per-block angles, refuse the cut locus.
Matrix rotation_log_matrix(const Matrix& g) {
  const int n = static_cast<int>(g.rows());
  if (g.cols() != n) throw std::domain_error("principal_log: square input required");
  if (!is_rotation(g, 1e-6))
    throw std::domain_error("principal_log: input is not a rotation matrix");
  if (g.isIdentity(0.0)) return Matrix::Zero(n, n);

  Eigen::RealSchur<Matrix> schur(g);
  const Matrix& t = schur.matrixT();
  const Matrix& q = schur.matrixU();

  Matrix l = Matrix::Zero(n, n);
  for (int k = 0; k < n;) {
    if (is_two_by_two(t, k)) {
      const double c = 0.5 * (t(k, k) + t(k + 1, k + 1));
      const double s = 0.5 * (t(k, k + 1) - t(k + 1, k));
      const double theta = std::atan2(s, c);
      if (std::abs(theta) >= kPi - kLogAngleMargin)
        throw std::domain_error(
            "principal_log: rotation angle within margin of pi");
      l(k, k + 1) = theta;
      l(k + 1, k) = -theta;
      k += 2;
    } else {
      if (t(k, k) < 0.0)
        throw std::domain_error(
            "principal_log: rotation angle within margin of pi");
      k += 1;  // eigenvalue +1, log = 0
    }
  }
  return q * l * q.transpose();
}

}  // namespace

SkewVector principal_log(const Matrix& g) {
  return skew_from_matrix(rotation_log_matrix(g));
}

SkewVector adjoint(const Matrix& g, const SkewVector& u) {
  const Matrix m = g * skew_to_matrix(u) * g.transpose();
  return skew_from_matrix(m);
}

double riem_dist(const Matrix& x, const Matrix& y) {
  if (x.rows() != y.rows() || x.cols() != y.cols())
    throw std::domain_error("riem_dist: dimension mismatch");
  const Matrix rel = x.transpose() * y;
  return skew_from_matrix(rotation_log_matrix(rel)).norm();
}

double orthogonality_defect(const Matrix& m) {
  const int n = static_cast<int>(m.rows());
  return (m.transpose() * m - Matrix::Identity(n, n)).norm();
}

bool is_rotation(const Matrix& m, double tol) {
  if (m.rows() != m.cols()) return false;
  return orthogonality_defect(m) <= tol && m.determinant() > 0.0;
}

Matrix project_to_rotation(const Matrix& m) {
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return svd.matrixU() * svd.matrixV().transpose();
}

}  // namespace kaclab
