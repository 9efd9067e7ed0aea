#pragma once

#include <utility>
#include <vector>

#include "kaclab/lie.hpp"
#include "kaclab/rng.hpp"

namespace kaclab {

/// One Kac update: a coordinate plane and an angle stored in [0, 2pi).
struct Update {
  int plane = 0;
  double angle = 0.0;
};

struct ChainState {
  Matrix position;
  long step_count = 0;
};

double reduce_angle(double theta);  // to [0, 2pi)

/// Plane uniform on {0..N-1}, angle uniform on [0, 2pi).
Update sample_update(int n, RngStream& rng);

/// Left-multiplies position by R(plane, angle), touching only two rows.
void step_in_place(ChainState& state, const Update& upd);
ChainState step(const ChainState& state, const Update& upd);

/// t sampled updates from `start`. Chains longer than 10^4 steps are
/// re-orthonormalized by polar projection every 10^3 steps.
ChainState run(const Matrix& start, long t, RngStream& rng);

/// First column of the position; the companion walk on the sphere.
Vector sphere_projection(const ChainState& state);

struct CouplingTrace {
  ChainState x;
  ChainState y;
  // (step, D_HS) at step 0, powers of two, and the final step.
  std::vector<std::pair<long, double>> distances;
};

/// Drives both chains with one shared update stream and records the
/// bi-invariant distance on a logarithmic step grid.
CouplingTrace synchronous_couple(const Matrix& x0, const Matrix& y0, long t,
                                 RngStream& rng);

/// Exact Haar sample on SO(n): QR of a Gaussian matrix with the R-diagonal
/// sign correction, then a last-column flip to land in determinant +1.
Matrix haar_sample(int n, RngStream& rng);

}  // namespace kaclab
