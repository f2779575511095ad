#pragma once

// Generators and independent oracles shared by the unit tests.

#include <cmath>
#include <cstdint>

#include "mne/ensemble.hpp"
#include "mne/games.hpp"
#include "mne/rng.hpp"

namespace mne::testing {

inline Vector unit(int D, int k) {
  Vector v = Vector::Zero(D);
  v[k] = 1.0;
  return v;
}

inline Vector random_simplex(Index n, Rng& rng) {
  Vector w(n);
  for (Index i = 0; i < n; ++i) w[i] = -std::log(1.0 - rng.uniform());
  return w / w.sum();
}

inline WeightedEnsemble random_ensemble(const Manifold& m, Index n, Rng& rng) {
  Matrix pos(n, m.dim());
  for (Index i = 0; i < n; ++i) pos.row(i) = m.sample_uniform(rng).transpose();
  return {m, pos, random_simplex(n, rng)};
}

inline WeightedEnsemble dirac(const Manifold& m, const Vector& p) {
  return {m, p.transpose(), Vector::Ones(1)};
}

// Opponent-averaged potentials by explicit pairwise sums over the loss.
inline Vector pairwise_potential_x(const Game& g, const WeightedEnsemble& ey, const Matrix& X) {
  Vector out = Vector::Zero(X.rows());
  for (Index i = 0; i < X.rows(); ++i)
    for (Index j = 0; j < ey.size(); ++j) out[i] += ey.weights()[j] * g.loss(X.row(i).transpose(), ey.position(j));
  return out;
}

inline Vector pairwise_potential_y(const Game& g, const WeightedEnsemble& ex, const Matrix& Y) {
  Vector out = Vector::Zero(Y.rows());
  for (Index i = 0; i < Y.rows(); ++i)
    for (Index j = 0; j < ex.size(); ++j) out[i] += ex.weights()[j] * g.loss(ex.position(j), Y.row(i).transpose());
  return out;
}

inline Matrix pairwise_grad_x(const Game& g, const WeightedEnsemble& ey, const Matrix& X) {
  Matrix out = Matrix::Zero(X.rows(), X.cols());
  for (Index i = 0; i < X.rows(); ++i)
    for (Index j = 0; j < ey.size(); ++j)
      out.row(i) += ey.weights()[j] * g.loss_grad_x(X.row(i).transpose(), ey.position(j)).transpose();
  return out;
}

inline Matrix pairwise_grad_y(const Game& g, const WeightedEnsemble& ex, const Matrix& Y) {
  Matrix out = Matrix::Zero(Y.rows(), Y.cols());
  for (Index i = 0; i < Y.rows(); ++i)
    for (Index j = 0; j < ex.size(); ++j)
      out.row(i) += ex.weights()[j] * g.loss_grad_y(ex.position(j), Y.row(i).transpose()).transpose();
  return out;
}

}  // namespace mne::testing
