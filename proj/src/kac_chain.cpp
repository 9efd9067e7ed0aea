#include "kaclab/kac_chain.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include <Eigen/QR>

namespace kaclab {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr long kReprojectEvery = 1000;
constexpr long kReprojectThreshold = 10000;
}  // namespace

double reduce_angle(double theta) {
  double r = std::fmod(theta, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  return r;
}

Update sample_update(int n, RngStream& rng) {
  const int plane = static_cast<int>(rng.uniform_below(plane_count(n)));
  const double angle = rng.uniform01() * kTwoPi;
  return Update{plane, angle};
}

void step_in_place(ChainState& state, const Update& upd) {
  const int n = static_cast<int>(state.position.rows());
  auto [a, b] = plane_pair(n, upd.plane);
  const double c = std::cos(upd.angle);
  const double s = std::sin(upd.angle);
  double* data = state.position.data();
  // Column-major: elements (a, j) and (b, j) sit n*j apart from row offsets.
  for (int j = 0; j < n; ++j) {
    const double xa = data[a + n * j];
    const double xb = data[b + n * j];
    data[a + n * j] = c * xa + s * xb;
    data[b + n * j] = -s * xa + c * xb;
  }
  ++state.step_count;
}

ChainState step(const ChainState& state, const Update& upd) {
  ChainState out = state;
  step_in_place(out, upd);
  return out;
}

namespace {

void advance(ChainState& state, const Update& upd, long total_steps) {
  step_in_place(state, upd);
  if (total_steps > kReprojectThreshold &&
      state.step_count % kReprojectEvery == 0)
    state.position = project_to_rotation(state.position);
}

}  // namespace

ChainState run(const Matrix& start, long t, RngStream& rng) {
  if (t < 0) throw std::domain_error("run: negative step count");
  const int n = static_cast<int>(start.rows());
  ChainState state{start, 0};
  for (long s = 0; s < t; ++s) advance(state, sample_update(n, rng), t);
  return state;
}

Vector sphere_projection(const ChainState& state) {
  return state.position.col(0);
}

CouplingTrace synchronous_couple(const Matrix& x0, const Matrix& y0, long t,
                                 RngStream& rng) {
  if (x0.rows() != y0.rows())
    throw std::domain_error("synchronous_couple: dimension mismatch");
  const int n = static_cast<int>(x0.rows());
  CouplingTrace trace{{x0, 0}, {y0, 0}, {}};
  trace.distances.emplace_back(0, riem_dist(x0, y0));
  long next_sample = 1;
  for (long s = 1; s <= t; ++s) {
    const Update upd = sample_update(n, rng);
    advance(trace.x, upd, t);
    advance(trace.y, upd, t);
    if (s == next_sample || s == t) {
      trace.distances.emplace_back(
          s, riem_dist(trace.x.position, trace.y.position));
      if (s == next_sample) next_sample *= 2;
    }
  }
  return trace;
}

Matrix haar_sample(int n, RngStream& rng) {
  Matrix z(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) z(i, j) = rng.normal();
  Eigen::HouseholderQR<Matrix> qr(z);
  Matrix q = qr.householderQ() * Matrix::Identity(n, n);
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < n; ++j)
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  if (q.determinant() < 0.0) q.col(n - 1) = -q.col(n - 1);
  return q;
}

}  // namespace kaclab
