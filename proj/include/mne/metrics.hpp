#pragma once

// Exploitability (Nikaido-Isoda error) and exact oracles.
//
//   NI(mu_x, mu_y) = sup_y V_y(mu_x, y) - inf_x V_x(mu_y, x)
//
// The sup/inf over measures are attained at Diracs because the expected loss
// is linear in each measure, so NI reduces to two nonconvex problems over
// single strategies.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "mne/core.hpp"
#include "mne/ensemble.hpp"
#include "mne/games.hpp"
#include "mne/manifold.hpp"
#include "mne/rng.hpp"

namespace mne {

struct NiEstimatorConfig {
  int starts = 200;
  int ascent_iters = 500;
  // Iteration t uses step / max(1, L), divided by sqrt(t) when step_decay is
  // set; L is the game's Lipschitz estimate.
  double step = 0.5;
  std::uint64_t seed = 0;
  // Extra runs started from the player's own atoms with the best potential.
  int warm_starts = 50;
  bool step_decay = false;
  bool keep_per_start = false;

  void validate() const {
    if (starts < 1) throw std::invalid_argument("NI estimator: starts must be >= 1");
    if (warm_starts < 0) throw std::invalid_argument("NI estimator: warm_starts must be >= 0");
    if (ascent_iters < 0) throw std::invalid_argument("NI estimator: ascent_iters must be >= 0");
    if (!(step > 0.0)) throw std::invalid_argument("NI estimator: step must be > 0");
  }
};

struct NiResult {
  double estimate = 0.0;
  double sup_value = 0.0;  // best V_y found (max over starts)
  double inf_value = 0.0;  // best V_x found (min over starts)
  std::vector<double> per_start_sup;
  std::vector<double> per_start_inf;
  double wall_ms = 0.0;
};

namespace detail {

// Projected gradient ascent (sign=+1) or descent (sign=-1) of a potential
// from `starts` uniform points plus the best `warm_starts` rows of `own`, all
// advanced together. Returns the final potential value of every run.
template <class Potential, class Gradient>
Vector multistart_ascent(const Manifold& m, double sign, Potential&& potential, Gradient&& gradient,
                         const NiEstimatorConfig& cfg, double smoothness, std::uint64_t stream_tag,
                         const Matrix& own) {
  Rng rng = Rng::substream(cfg.seed, {stream_tag});
  const Index warm = std::min<Index>(cfg.warm_starts, own.rows());
  Matrix P(cfg.starts + warm, m.dim());
  for (int s = 0; s < cfg.starts; ++s) P.row(s) = m.sample_uniform(rng).transpose();
  if (warm > 0) {
    const Vector v = sign * potential(own);
    std::vector<Index> order(static_cast<std::size_t>(own.rows()));
    std::iota(order.begin(), order.end(), Index{0});
    std::partial_sort(order.begin(), order.begin() + warm, order.end(),
                      [&](Index a, Index b) { return v[a] > v[b] || (v[a] == v[b] && a < b); });
    for (Index k = 0; k < warm; ++k) P.row(cfg.starts + k) = own.row(order[static_cast<std::size_t>(k)]);
  }
  const double base = sign * cfg.step / std::max(1.0, smoothness);
  for (int t = 1; t <= cfg.ascent_iters; ++t) {
    const Matrix G = gradient(P);
    const double step = cfg.step_decay ? base / std::sqrt(static_cast<double>(t)) : base;
    for (Index s = 0; s < P.rows(); ++s) {
      const Vector p = P.row(s).transpose();
      const Vector v = m.project_tangent(p, step * G.row(s).transpose());
      if (!v.allFinite()) continue;
      P.row(s) = m.retract(p, v).transpose();
    }
  }
  return potential(P);
}

}  // namespace detail

// Multi-start lower bound on NI. For matrix games the sup/inf run over atoms
// exactly, which is what the Dirac optimizer reduces to.
inline NiResult ni_estimate(const WeightedEnsemble& mx, const WeightedEnsemble& my, const Game& g,
                            const NiEstimatorConfig& cfg) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  if (!(mx.space() == g.space_x()) || !(my.space() == g.space_y()))
    throw std::invalid_argument("ni_estimate: measures are not on the game's spaces");
  NiResult r;
  Vector sup_vals, inf_vals;
  if (g.kind() == GameKind::matrix) {
    const Matrix& A = g.matrix_params().A;
    sup_vals = g.potential_y(mx, Game::atom_positions(A.cols()));
    inf_vals = g.potential_x(my, Game::atom_positions(A.rows()));
  } else {
    const double L = g.lipschitz_estimate().value_or(1.0);
    sup_vals = detail::multistart_ascent(
        g.space_y(), +1.0, [&](const Matrix& P) { return g.potential_y(mx, P); },
        [&](const Matrix& P) { return g.potential_grad_y(mx, P); }, cfg, L, stream::kNiSup, my.positions());
    inf_vals = detail::multistart_ascent(
        g.space_x(), -1.0, [&](const Matrix& P) { return g.potential_x(my, P); },
        [&](const Matrix& P) { return g.potential_grad_x(my, P); }, cfg, L, stream::kNiInf, mx.positions());
  }
  r.sup_value = sup_vals.maxCoeff();
  r.inf_value = inf_vals.minCoeff();
  r.estimate = std::max(0.0, r.sup_value - r.inf_value);
  if (cfg.keep_per_start) {
    r.per_start_sup.assign(sup_vals.data(), sup_vals.data() + sup_vals.size());
    r.per_start_inf.assign(inf_vals.data(), inf_vals.data() + inf_vals.size());
  }
  r.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

// Exact NI for l = <x, y> on spheres: |m_x| + |m_y| with m the mean embeddings.
inline double ni_exact_bilinear(const WeightedEnsemble& ex, const WeightedEnsemble& ey) {
  if (ex.space().kind() != ManifoldKind::sphere || ey.space().kind() != ManifoldKind::sphere ||
      ex.dim() != ey.dim())
    throw std::invalid_argument("ni_exact_bilinear: needs two ensembles on the same sphere");
  return mean_embedding(ex).norm() + mean_embedding(ey).norm();
}

inline double ni_exact_bilinear(const Game& g, const WeightedEnsemble& ex, const WeightedEnsemble& ey) {
  if (g.kind() != GameKind::bilinear) throw std::invalid_argument("ni_exact_bilinear: game is not bilinear");
  return ni_exact_bilinear(ex, ey);
}

// max_j (w_x^T A)_j - min_i (A w_y)_i
inline double ni_exact_finite(const Vector& wx, const Vector& wy, const Matrix& A) {
  if (wx.size() != A.rows() || wy.size() != A.cols())
    throw std::invalid_argument("ni_exact_finite: weight sizes do not match the payoff matrix");
  return std::max(0.0, (A.transpose() * wx).maxCoeff() - (A * wy).minCoeff());
}

// Exact NI of ensembles on a matrix game (weights pooled per atom).
inline double ni_exact_finite(const Game& g, const WeightedEnsemble& ex, const WeightedEnsemble& ey) {
  if (g.kind() != GameKind::matrix) throw std::invalid_argument("ni_exact_finite: game is not a matrix game");
  const Matrix& A = g.matrix_params().A;
  return ni_exact_finite(Game::atom_mass(ex.positions(), ex.weights(), A.rows()),
                         Game::atom_mass(ey.positions(), ey.weights(), A.cols()), A);
}

struct MatrixGameSolution {
  Vector x;  // minimizer's mixed strategy
  Vector y;  // maximizer's mixed strategy
  double value = 0.0;
};

namespace detail {

// min v  s.t.  M^T w <= v 1,  w >= 0,  1^T w = 1   (w in R^p, M is p x q)
//
// Vertex enumeration: a vertex of the feasible polyhedron in (w, v) makes p
// of the q + p inequalities tight together with the equality. Every subset
// is solved and the feasible vertex with smallest v wins.
inline std::pair<Vector, double> min_max_lp(const Matrix& M) {
  const Index p = M.rows(), q = M.cols();
  const Index nineq = q + p;
  constexpr double kFeasTol = 1e-9;
  Vector best_w;
  double best_v = std::numeric_limits<double>::infinity();
  std::vector<int> pick(static_cast<std::size_t>(nineq), 0);
  std::fill(pick.end() - p, pick.end(), 1);
  do {
    Matrix S = Matrix::Zero(p + 1, p + 1);
    Vector rhs = Vector::Zero(p + 1);
    Index r = 0;
    for (Index k = 0; k < nineq; ++k) {
      if (!pick[static_cast<std::size_t>(k)]) continue;
      if (k < q) {  // (M^T w)_k - v = 0
        S.row(r).head(p) = M.col(k).transpose();
        S(r, p) = -1.0;
      } else {  // w_{k-q} = 0
        S(r, k - q) = 1.0;
      }
      ++r;
    }
    S.row(p).head(p).setOnes();
    rhs[p] = 1.0;
    Eigen::FullPivLU<Matrix> lu(S);
    if (!lu.isInvertible()) continue;
    const Vector sol = lu.solve(rhs);
    const Vector w = sol.head(p);
    const double v = sol[p];
    if ((w.array() < -kFeasTol).any()) continue;
    if (((M.transpose() * w).array() > v + kFeasTol).any()) continue;
    if (v < best_v - 1e-12) {
      best_v = v;
      best_w = w.cwiseMax(0.0);
    }
  } while (std::next_permutation(pick.begin(), pick.end()));
  if (best_w.size() == 0) throw std::runtime_error("matrix_game_solve: no feasible vertex found");
  best_w /= best_w.sum();
  return {best_w, best_v};
}

}  // namespace detail

// Exact equilibrium of a zero-sum matrix game (x minimizes x^T A y) up to 8x8.
inline MatrixGameSolution matrix_game_solve(const Matrix& A) {
  if (A.rows() < 1 || A.cols() < 1) throw std::invalid_argument("matrix_game_solve: empty matrix");
  if (A.rows() > 8 || A.cols() > 8) throw std::invalid_argument("matrix_game_solve: sizes above 8x8 are not supported");
  MatrixGameSolution s;
  auto [wx, vx] = detail::min_max_lp(A);
  // max_y min_x x^T A y = -(min_y max_x x^T (-A) y)
  const Matrix neg = -A.transpose();
  auto [wy, vy] = detail::min_max_lp(neg);
  s.x = std::move(wx);
  s.y = std::move(wy);
  s.value = 0.5 * (vx - vy);
  return s;
}

// Discretized entropic fixed point on Torus(1) x Torus(1).
struct GibbsGrid {
  Vector bin_centers;
  Vector rho_x;
  Vector rho_y;
  double beta = 0.0;
  double damping = 1.0;
  double residual = std::numeric_limits<double>::infinity();
  int iterations = 0;
};

namespace detail {

inline Vector softmax(const Vector& logits) {
  const double top = logits.maxCoeff();
  Vector e = (logits.array() - top).exp();
  return e / e.sum();
}

inline Matrix gibbs_loss_table(const Game& g, const Vector& centers) {
  const Index N = centers.size();
  Matrix R(N, N);
  Vector x(1), y(1);
  for (Index a = 0; a < N; ++a)
    for (Index b = 0; b < N; ++b) {
      x[0] = centers[a];
      y[0] = centers[b];
      R(a, b) = g.loss(x, y);
    }
  return R;
}

}  // namespace detail

// Undamped image of (rho_x, rho_y) under rho_x <- softmax(-beta R rho_y),
// rho_y <- softmax(beta R^T rho_x).
inline std::pair<Vector, Vector> gibbs_map(const Matrix& R, double beta, const Vector& rho_x, const Vector& rho_y) {
  return {detail::softmax(-beta * (R * rho_y)), detail::softmax(beta * (R.transpose() * rho_x))};
}

// Damped fixed-point iteration. Stops once the larger L1 change of the two
// densities in an iteration is <= tol, or after max_iters.
inline GibbsGrid gibbs_fixed_point(const Game& g, double beta, int bins, double damping, int max_iters, double tol,
                                   const Vector& init_x = {}, const Vector& init_y = {}) {
  if (g.space_x().kind() != ManifoldKind::torus || g.space_x().dim() != 1 ||
      g.space_y().kind() != ManifoldKind::torus || g.space_y().dim() != 1)
    throw std::invalid_argument("gibbs_fixed_point: game must live on Torus(1) x Torus(1)");
  if (!(g.space_x() == g.space_y())) throw std::invalid_argument("gibbs_fixed_point: players need the same torus");
  if (bins < 8) throw std::invalid_argument("gibbs_fixed_point: bins must be >= 8");
  if (!(beta >= 0.0)) throw std::invalid_argument("gibbs_fixed_point: beta must be >= 0");
  if (!(damping > 0.0 && damping <= 1.0)) throw std::invalid_argument("gibbs_fixed_point: damping must be in (0, 1]");
  const double P = g.space_x().period();
  GibbsGrid grid;
  grid.beta = beta;
  grid.damping = damping;
  grid.bin_centers.resize(bins);
  for (int b = 0; b < bins; ++b) grid.bin_centers[b] = (b + 0.5) * P / bins;
  const Vector uniform = Vector::Constant(bins, 1.0 / bins);
  grid.rho_x = init_x.size() == bins ? normalize_weights(init_x) : uniform;
  grid.rho_y = init_y.size() == bins ? normalize_weights(init_y) : uniform;
  const Matrix R = detail::gibbs_loss_table(g, grid.bin_centers);
  for (int it = 0; it < max_iters; ++it) {
    auto [tx, ty] = gibbs_map(R, beta, grid.rho_x, grid.rho_y);
    const Vector nx = (1.0 - damping) * grid.rho_x + damping * tx;
    const Vector ny = (1.0 - damping) * grid.rho_y + damping * ty;
    grid.residual = std::max((nx - grid.rho_x).lpNorm<1>(), (ny - grid.rho_y).lpNorm<1>());
    grid.rho_x = nx / nx.sum();
    grid.rho_y = ny / ny.sum();
    grid.iterations = it + 1;
    if (!grid.rho_x.allFinite() || !grid.rho_y.allFinite()) throw NumericalAbort("gibbs iteration diverged", it + 1);
    if (grid.residual <= tol) break;
  }
  return grid;
}

// L1 change of each density when the undamped map is applied once more; the
// larger of the two. Zero exactly at a fixed point.
inline double gibbs_map_residual(const Game& g, const GibbsGrid& grid) {
  const Matrix R = detail::gibbs_loss_table(g, grid.bin_centers);
  auto [tx, ty] = gibbs_map(R, grid.beta, grid.rho_x, grid.rho_y);
  return std::max((tx - grid.rho_x).lpNorm<1>(), (ty - grid.rho_y).lpNorm<1>());
}

// Inverse temperature from the ball-volume bound V:
//   beta >= (4 / eps) log(2 (1 - V) / V (2 K / eps - 1))
inline double required_beta_from_volume(double epsilon, double range_length, double volume) {
  if (!(epsilon > 0.0) || !(range_length > 0.0)) throw std::invalid_argument("required_beta: epsilon and K must be > 0");
  if (!(volume > 0.0 && volume <= 1.0)) throw std::invalid_argument("required_beta: volume must be in (0, 1]");
  const double ratio = 2.0 * range_length / epsilon - 1.0;
  if (!(ratio > 0.0)) throw std::invalid_argument("required_beta: 2K/epsilon <= 1, epsilon is too large for the bound");
  const double arg = 2.0 * (1.0 - volume) / volume * ratio;
  if (!(arg > 0.0)) throw std::invalid_argument("required_beta: ball volume bound is 1, log argument is not positive");
  return std::max(0.0, 4.0 / epsilon * std::log(arg));
}

// Same bound with V = ball_volume_fraction_lower_bound(eps / (2 lip)).
inline double required_beta(double epsilon, double range_length, double lipschitz, const Manifold& m) {
  if (!(lipschitz > 0.0)) throw std::invalid_argument("required_beta: lipschitz constant must be > 0");
  if (!(epsilon > 0.0)) throw std::invalid_argument("required_beta: epsilon must be > 0");
  const double delta = epsilon / (2.0 * lipschitz);
  return required_beta_from_volume(epsilon, range_length, m.ball_volume_fraction_lower_bound(delta));
}

// Weighted histogram of a 1-D torus ensemble on `bins` equal bins.
inline Vector histogram(const WeightedEnsemble& e, int bins) {
  if (e.space().kind() != ManifoldKind::torus || e.dim() != 1)
    throw std::invalid_argument("histogram: ensemble must live on Torus(1)");
  if (bins < 1) throw std::invalid_argument("histogram: bins must be >= 1");
  const double P = e.space().period();
  Vector h = Vector::Zero(bins);
  for (Index i = 0; i < e.size(); ++i) {
    auto b = static_cast<Index>(e.positions()(i, 0) / P * bins);
    h[std::clamp<Index>(b, 0, bins - 1)] += e.weights()[i];
  }
  return h;
}

inline double tv_distance(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw std::invalid_argument("tv_distance: histograms have different bin counts");
  return 0.5 * (a - b).lpNorm<1>();
}

}  // namespace mne
