#pragma once

// Closed-form two-player zero-sum losses l(x, y): x minimizes, y maximizes.
//
// Besides pointwise evaluation, every game computes the opponent-averaged
// potentials
//
//   V_x(mu_y, x) = sum_j w_y^j l(x, y_j)      V_y(mu_x, y) = sum_i w_x^i l(x_i, y)
//
// and their ambient gradients for a whole batch of points at once. The
// polynomial, bilinear and trigonometric games only depend on the opponent
// through a few moments (mean, mean of squares, mean of cos/sin), which keeps
// a step at O(n D^2) instead of O(n^2 D^2).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "mne/core.hpp"
#include "mne/ensemble.hpp"
#include "mne/manifold.hpp"
#include "mne/rng.hpp"

namespace mne {

enum class GameKind { poly_a, poly_b, bilinear, doublewell, matrix, torus_trig };

inline const char* to_string(GameKind k) {
  switch (k) {
    case GameKind::poly_a: return "poly_a";
    case GameKind::poly_b: return "poly_b";
    case GameKind::bilinear: return "bilinear";
    case GameKind::doublewell: return "doublewell";
    case GameKind::matrix: return "matrix";
    case GameKind::torus_trig: return "torus_trig";
  }
  return "?";
}

// Raw normal draws for the sphere polynomial games. A3 is empty for poly_b.
struct PolyGameParams {
  Matrix A0, A1, A2, A3;
  Vector a0, a1;
  std::uint64_t seed = 0;
};

// Entries are filled row-major, matrix by matrix, in the order
// A0, A1, A2, [A3], a0, a1 from Rng::substream(seed, {kGameParams}).
inline PolyGameParams sample_poly_params(int D, std::uint64_t seed, bool with_cubic) {
  if (D < 2) throw std::invalid_argument("polynomial game: D must be >= 2");
  Rng rng = Rng::substream(seed, {stream::kGameParams});
  auto fill = [&](Index rows, Index cols) {
    Matrix m(rows, cols);
    for (Index r = 0; r < rows; ++r)
      for (Index c = 0; c < cols; ++c) m(r, c) = rng.normal();
    return m;
  };
  PolyGameParams p;
  p.seed = seed;
  p.A0 = fill(D, D);
  p.A1 = fill(D, D);
  p.A2 = fill(D, D);
  if (with_cubic) p.A3 = fill(D, D);
  p.a0 = fill(D, 1);
  p.a1 = fill(D, 1);
  return p;
}

struct DoubleWellParams {
  double halfwidth = 1.5;
};

// f(z) = 5 z^4 - 10 z^2 - 2 z, an asymmetric double well with its global
// minimum near z = 1.05 and a local one near z = -0.95.
inline double doublewell_f(double z) { return 5.0 * z * z * z * z - 10.0 * z * z - 2.0 * z; }
inline double doublewell_df(double z) { return 20.0 * z * z * z - 20.0 * z - 2.0; }

struct MatrixGameParams {
  Matrix A;
};

// l(x, y) = coupling cos(2 pi (x - y)) + f(x) - f(y) on the unit circle
// Torus(1, P=1), with f(z) = f_cos cos(2 pi z) + f_sin2 sin(4 pi z).
struct TorusTrigParams {
  double coupling = 1.0;
  double f_cos = 0.0;
  double f_sin2 = 0.0;
};

class Game {
 public:
  using Params = std::variant<PolyGameParams, std::monostate, DoubleWellParams, MatrixGameParams,
                              TorusTrigParams>;

  GameKind kind() const { return kind_; }
  const Manifold& space_x() const { return space_x_; }
  const Manifold& space_y() const { return space_y_; }
  // Smoothness bound L with |grad l(x,y) - grad l(x',y')| <= L (d(x,x') + d(y,y')).
  std::optional<double> lipschitz_estimate() const { return lipschitz_; }
  // Upper bound on max l - min l.
  std::optional<double> range_length() const { return range_; }
  const Params& params() const { return params_; }

  const PolyGameParams& poly_params() const { return std::get<PolyGameParams>(params_); }
  const MatrixGameParams& matrix_params() const { return std::get<MatrixGameParams>(params_); }
  const DoubleWellParams& doublewell_params() const { return std::get<DoubleWellParams>(params_); }
  const TorusTrigParams& torus_trig_params() const { return std::get<TorusTrigParams>(params_); }

  // Checked pointwise evaluation; points must lie on the game's manifolds.
  double eval_loss(const Vector& x, const Vector& y) const {
    space_x_.require_member(x, "x");
    space_y_.require_member(y, "y");
    return loss(x, y);
  }
  Vector grad_x(const Vector& x, const Vector& y) const {
    space_x_.require_member(x, "x");
    space_y_.require_member(y, "y");
    return loss_grad_x(x, y);
  }
  Vector grad_y(const Vector& x, const Vector& y) const {
    space_x_.require_member(x, "x");
    space_y_.require_member(y, "y");
    return loss_grad_y(x, y);
  }

  // Unchecked formulas, valid on the ambient extension (used by finite
  // differences, which step off the sphere).
  double loss(const Vector& x, const Vector& y) const {
    switch (kind_) {
      case GameKind::poly_a:
      case GameKind::poly_b: {
        double v = x.dot(Q0_ * x) + x.dot(A1_ * y) + y.dot(Q2_ * y) + a0_.dot(x) + a1_.dot(y);
        if (has_cubic_) v += y.dot(A3_ * x.cwiseProduct(x));
        return v;
      }
      case GameKind::bilinear: return x.dot(y);
      case GameKind::doublewell: return doublewell_f(x[0]) - doublewell_f(y[0]);
      case GameKind::matrix: return A_(atom_index(x[0], A_.rows()), atom_index(y[0], A_.cols()));
      case GameKind::torus_trig: {
        const auto& p = torus_trig_params();
        return p.coupling * std::cos(2.0 * std::numbers::pi * (x[0] - y[0])) + trig_f(x[0]) -
               trig_f(y[0]);
      }
    }
    return 0.0;
  }

  Vector loss_grad_x(const Vector& x, const Vector& y) const {
    switch (kind_) {
      case GameKind::poly_a:
      case GameKind::poly_b: {
        Vector g = Q0sym_ * x + A1_ * y + a0_;
        if (has_cubic_) g += 2.0 * x.cwiseProduct(A3_.transpose() * y);
        return g;
      }
      case GameKind::bilinear: return y;
      case GameKind::doublewell: return Vector::Constant(1, doublewell_df(x[0]));
      case GameKind::matrix: return Vector::Zero(1);
      case GameKind::torus_trig: {
        const double c = torus_trig_params().coupling;
        return Vector::Constant(
            1, -2.0 * std::numbers::pi * c * std::sin(2.0 * std::numbers::pi * (x[0] - y[0])) +
                   trig_df(x[0]));
      }
    }
    return {};
  }

  Vector loss_grad_y(const Vector& x, const Vector& y) const {
    switch (kind_) {
      case GameKind::poly_a:
      case GameKind::poly_b: {
        Vector g = A1_.transpose() * x + Q2sym_ * y + a1_;
        if (has_cubic_) g += A3_ * x.cwiseProduct(x);
        return g;
      }
      case GameKind::bilinear: return x;
      case GameKind::doublewell: return Vector::Constant(1, -doublewell_df(y[0]));
      case GameKind::matrix: return Vector::Zero(1);
      case GameKind::torus_trig: {
        const double c = torus_trig_params().coupling;
        return Vector::Constant(
            1, 2.0 * std::numbers::pi * c * std::sin(2.0 * std::numbers::pi * (x[0] - y[0])) -
                   trig_df(y[0]));
      }
    }
    return {};
  }

  // V_x(mu_y, X_i) for every row X_i.
  Vector potential_x(const WeightedEnsemble& ey, const Matrix& X) const {
    check_batch(X, space_x_);
    const Vector& w = ey.weights();
    const Matrix& Y = ey.positions();
    switch (kind_) {
      case GameKind::poly_a:
      case GameKind::poly_b: {
        const Vector my = Y.transpose() * w;
        const double yy = w.dot((Y * Q2_).cwiseProduct(Y).rowwise().sum());
        Vector v = (X * Q0_).cwiseProduct(X).rowwise().sum() + X * (A1_ * my + a0_);
        v.array() += yy + a1_.dot(my);
        if (has_cubic_) v += X.cwiseProduct(X) * (A3_.transpose() * my);
        return v;
      }
      case GameKind::bilinear: return X * (Y.transpose() * w);
      case GameKind::doublewell: {
        const double fy = w.dot(Y.col(0).unaryExpr([](double z) { return doublewell_f(z); }));
        return X.col(0).unaryExpr([](double z) { return doublewell_f(z); }).array() - fy;
      }
      case GameKind::matrix: {
        const Vector col = atom_mass(Y, w, A_.cols());
        Vector v(X.rows());
        for (Index i = 0; i < X.rows(); ++i) v[i] = A_.row(atom_index(X(i, 0), A_.rows())).dot(col);
        return v;
      }
      case GameKind::torus_trig: {
        const auto [cy, sy] = trig_moments(Y, w);
        const double fy = w.dot(Y.col(0).unaryExpr([this](double z) { return trig_f(z); }));
        const double c = torus_trig_params().coupling;
        Vector v(X.rows());
        for (Index i = 0; i < X.rows(); ++i) {
          const double t = 2.0 * std::numbers::pi * X(i, 0);
          v[i] = c * (std::cos(t) * cy + std::sin(t) * sy) + trig_f(X(i, 0)) - fy;
        }
        return v;
      }
    }
    return {};
  }

  // V_y(mu_x, Y_i) for every row Y_i.
  Vector potential_y(const WeightedEnsemble& ex, const Matrix& Y) const {
    check_batch(Y, space_y_);
    const Vector& w = ex.weights();
    const Matrix& X = ex.positions();
    switch (kind_) {
      case GameKind::poly_a:
      case GameKind::poly_b: {
        const Vector mx = X.transpose() * w;
        const double xx = w.dot((X * Q0_).cwiseProduct(X).rowwise().sum());
        Vector v = (Y * Q2_).cwiseProduct(Y).rowwise().sum() + Y * (A1_.transpose() * mx + a1_);
        v.array() += xx + a0_.dot(mx);
        if (has_cubic_) v += Y * (A3_ * (X.cwiseProduct(X).transpose() * w));
        return v;
      }
      case GameKind::bilinear: return Y * (X.transpose() * w);
      case GameKind::doublewell: {
        const double fx = w.dot(X.col(0).unaryExpr([](double z) { return doublewell_f(z); }));
        return fx - Y.col(0).unaryExpr([](double z) { return doublewell_f(z); }).array();
      }
      case GameKind::matrix: {
        const Vector row = atom_mass(X, w, A_.rows());
        Vector v(Y.rows());
        for (Index j = 0; j < Y.rows(); ++j) v[j] = A_.col(atom_index(Y(j, 0), A_.cols())).dot(row);
        return v;
      }
      case GameKind::torus_trig: {
        const auto [cx, sx] = trig_moments(X, w);
        const double fx = w.dot(X.col(0).unaryExpr([this](double z) { return trig_f(z); }));
        const double c = torus_trig_params().coupling;
        Vector v(Y.rows());
        for (Index j = 0; j < Y.rows(); ++j) {
          const double t = 2.0 * std::numbers::pi * Y(j, 0);
          v[j] = c * (cx * std::cos(t) + sx * std::sin(t)) + fx - trig_f(Y(j, 0));
        }
        return v;
      }
    }
    return {};
  }

  // Ambient gradient of V_x(mu_y, .) at every row of X.
  Matrix potential_grad_x(const WeightedEnsemble& ey, const Matrix& X) const {
    check_batch(X, space_x_);
    const Vector& w = ey.weights();
    const Matrix& Y = ey.positions();
    switch (kind_) {
      case GameKind::poly_a:
      case GameKind::poly_b: {
        const Vector my = Y.transpose() * w;
        Matrix G = X * Q0sym_.transpose();
        G.rowwise() += (A1_ * my + a0_).transpose();
        if (has_cubic_) G += 2.0 * X.cwiseProduct((A3_.transpose() * my).transpose().replicate(X.rows(), 1));
        return G;
      }
      case GameKind::bilinear: return (Y.transpose() * w).transpose().replicate(X.rows(), 1);
      case GameKind::doublewell: return X.unaryExpr([](double z) { return doublewell_df(z); });
      case GameKind::matrix: return Matrix::Zero(X.rows(), X.cols());
      case GameKind::torus_trig: {
        const auto [cy, sy] = trig_moments(Y, w);
        const double c = torus_trig_params().coupling;
        Matrix G(X.rows(), 1);
        for (Index i = 0; i < X.rows(); ++i) {
          const double t = 2.0 * std::numbers::pi * X(i, 0);
          G(i, 0) = 2.0 * std::numbers::pi * c * (-std::sin(t) * cy + std::cos(t) * sy) + trig_df(X(i, 0));
        }
        return G;
      }
    }
    return {};
  }

  // Ambient gradient of V_y(mu_x, .) at every row of Y.
  Matrix potential_grad_y(const WeightedEnsemble& ex, const Matrix& Y) const {
    check_batch(Y, space_y_);
    const Vector& w = ex.weights();
    const Matrix& X = ex.positions();
    switch (kind_) {
      case GameKind::poly_a:
      case GameKind::poly_b: {
        const Vector mx = X.transpose() * w;
        Matrix G = Y * Q2sym_.transpose();
        Vector shift = A1_.transpose() * mx + a1_;
        if (has_cubic_) shift += A3_ * (X.cwiseProduct(X).transpose() * w);
        G.rowwise() += shift.transpose();
        return G;
      }
      case GameKind::bilinear: return (X.transpose() * w).transpose().replicate(Y.rows(), 1);
      case GameKind::doublewell: return -Y.unaryExpr([](double z) { return doublewell_df(z); });
      case GameKind::matrix: return Matrix::Zero(Y.rows(), Y.cols());
      case GameKind::torus_trig: {
        const auto [cx, sx] = trig_moments(X, w);
        const double c = torus_trig_params().coupling;
        Matrix G(Y.rows(), 1);
        for (Index j = 0; j < Y.rows(); ++j) {
          const double t = 2.0 * std::numbers::pi * Y(j, 0);
          G(j, 0) = 2.0 * std::numbers::pi * c * (-cx * std::sin(t) + sx * std::cos(t)) - trig_df(Y(j, 0));
        }
        return G;
      }
    }
    return {};
  }

  // Atom index of a matrix-game coordinate (nearest integer, clamped).
  static Index atom_index(double coord, Index count) {
    const auto k = static_cast<Index>(std::llround(coord));
    return std::clamp<Index>(k, 0, count - 1);
  }

  // Atom positions for a matrix game player: rows 0..count-1 at coordinate k.
  static Matrix atom_positions(Index count) {
    Matrix p(count, 1);
    for (Index k = 0; k < count; ++k) p(k, 0) = static_cast<double>(k);
    return p;
  }

  // Per-atom probability mass of an ensemble on a matrix game's atom space.
  static Vector atom_mass(const Matrix& pos, const Vector& w, Index count) {
    Vector m = Vector::Zero(count);
    for (Index i = 0; i < pos.rows(); ++i) m[atom_index(pos(i, 0), count)] += w[i];
    return m;
  }

  friend Game make_poly_game_a(const PolyGameParams& p);
  friend Game make_poly_game_b(const PolyGameParams& p);
  friend Game make_bilinear_game(int D);
  friend Game make_doublewell_game(double halfwidth);
  friend Game make_matrix_game(const Matrix& A);
  friend Game make_torus_trig_game(const TorusTrigParams& p);

 private:
  Game(GameKind kind, Manifold sx, Manifold sy, Params params)
      : kind_(kind), space_x_(std::move(sx)), space_y_(std::move(sy)), params_(std::move(params)) {}

  static void check_batch(const Matrix& P, const Manifold& m) {
    if (P.cols() != m.dim())
      throw std::invalid_argument("potential: points have dimension " + std::to_string(P.cols()) +
                                  ", manifold expects " + std::to_string(m.dim()));
  }

  double trig_f(double z) const {
    const auto& p = torus_trig_params();
    return p.f_cos * std::cos(2.0 * std::numbers::pi * z) + p.f_sin2 * std::sin(4.0 * std::numbers::pi * z);
  }
  double trig_df(double z) const {
    const auto& p = torus_trig_params();
    return -2.0 * std::numbers::pi * p.f_cos * std::sin(2.0 * std::numbers::pi * z) +
           4.0 * std::numbers::pi * p.f_sin2 * std::cos(4.0 * std::numbers::pi * z);
  }
  static std::pair<double, double> trig_moments(const Matrix& P, const Vector& w) {
    double c = 0.0, s = 0.0;
    for (Index i = 0; i < P.rows(); ++i) {
      const double t = 2.0 * std::numbers::pi * P(i, 0);
      c += w[i] * std::cos(t);
      s += w[i] * std::sin(t);
    }
    return {c, s};
  }

  GameKind kind_;
  Manifold space_x_;
  Manifold space_y_;
  Params params_;
  std::optional<double> lipschitz_;
  std::optional<double> range_;

  // Polynomial games in the common form
  //   x^T Q0 x + x^T A1 y + y^T Q2 y + y^T A3 (x*x) + a0^T x + a1^T y.
  Matrix Q0_, Q0sym_, A1_, Q2_, Q2sym_, A3_;
  Vector a0_, a1_;
  bool has_cubic_ = false;
  // Matrix games.
  Matrix A_;
};

namespace detail {
inline double spectral_norm(const Matrix& M) {
  if (M.size() == 0) return 0.0;
  return Eigen::JacobiSVD<Matrix>(M).singularValues()(0);
}
}  // namespace detail

// l_a(x,y) = x^T A0 x + x^T A1 y + y^T A2 y + y^T A3 (x*x) + a0^T x + a1^T y on S^{D-1} x S^{D-1}.
//
// Smoothness: with chordal <= geodesic distance and |x*x - x'*x'| <= 2|x - x'|
// on the sphere, each gradient moves by at most
//   2|A0| + |A1| + 2|A2| + 4|A3|   (spectral norms)
// per unit of d(x,x') + d(y,y'); the reported estimate is
//   2(|A0| + |A1| + |A2| + 2|A3|) + |a0| + |a1|.
inline Game make_poly_game_a(const PolyGameParams& p) {
  const auto D = static_cast<int>(p.A0.rows());
  if (D < 2) throw std::invalid_argument("make_poly_game_a: D must be >= 2");
  if (p.A3.rows() != D) throw std::invalid_argument("make_poly_game_a: A3 is required");
  Game g(GameKind::poly_a, Manifold::sphere(D), Manifold::sphere(D), p);
  g.Q0_ = p.A0;
  g.A1_ = p.A1;
  g.Q2_ = p.A2;
  g.A3_ = p.A3;
  g.a0_ = p.a0;
  g.a1_ = p.a1;
  g.has_cubic_ = true;
  g.Q0sym_ = g.Q0_ + g.Q0_.transpose();
  g.Q2sym_ = g.Q2_ + g.Q2_.transpose();
  using detail::spectral_norm;
  const double n0 = spectral_norm(p.A0), n1 = spectral_norm(p.A1), n2 = spectral_norm(p.A2),
               n3 = spectral_norm(p.A3);
  g.lipschitz_ = 2.0 * (n0 + n1 + n2 + 2.0 * n3) + p.a0.norm() + p.a1.norm();
  // |x*x| <= 1 on the unit sphere.
  g.range_ = 2.0 * (n0 + n1 + n2 + n3 + p.a0.norm() + p.a1.norm());
  return g;
}

inline Game make_poly_game_a(int D, std::uint64_t seed) {
  if (D < 2) throw std::invalid_argument("make_poly_game_a: D must be >= 2");
  return make_poly_game_a(sample_poly_params(D, seed, true));
}

// l_b(x,y) = x^T A0^T A0 x + x^T A1 y + y^T A2^T A2 y + a0^T x + a1^T y.
inline Game make_poly_game_b(const PolyGameParams& p) {
  const auto D = static_cast<int>(p.A0.rows());
  if (D < 2) throw std::invalid_argument("make_poly_game_b: D must be >= 2");
  Game g(GameKind::poly_b, Manifold::sphere(D), Manifold::sphere(D), p);
  g.Q0_ = p.A0.transpose() * p.A0;
  g.A1_ = p.A1;
  g.Q2_ = p.A2.transpose() * p.A2;
  g.a0_ = p.a0;
  g.a1_ = p.a1;
  g.has_cubic_ = false;
  g.Q0sym_ = 2.0 * g.Q0_;
  g.Q2sym_ = 2.0 * g.Q2_;
  using detail::spectral_norm;
  const double q0 = spectral_norm(g.Q0_), n1 = spectral_norm(p.A1), q2 = spectral_norm(g.Q2_);
  g.lipschitz_ = 2.0 * (q0 + n1 + q2) + p.a0.norm() + p.a1.norm();
  g.range_ = 2.0 * (q0 + n1 + q2 + p.a0.norm() + p.a1.norm());
  return g;
}

inline Game make_poly_game_b(int D, std::uint64_t seed) {
  if (D < 2) throw std::invalid_argument("make_poly_game_b: D must be >= 2");
  return make_poly_game_b(sample_poly_params(D, seed, false));
}

// l(x,y) = <x,y> on S^{D-1} x S^{D-1}.
inline Game make_bilinear_game(int D) {
  if (D < 2) throw std::invalid_argument("make_bilinear_game: D must be >= 2");
  Game g(GameKind::bilinear, Manifold::sphere(D), Manifold::sphere(D), std::monostate{});
  g.lipschitz_ = 1.0;
  g.range_ = 2.0;
  return g;
}

// l(x,y) = f(x) - f(y) on [-h, h]^2.
inline Game make_doublewell_game(double halfwidth) {
  if (!(halfwidth >= 1.5))
    throw std::invalid_argument("make_doublewell_game: halfwidth must be >= 1.5");
  Game g(GameKind::doublewell, Manifold::box(1, -halfwidth, halfwidth),
         Manifold::box(1, -halfwidth, halfwidth), DoubleWellParams{halfwidth});
  // f'' = 60 z^2 - 20 peaks at the box edge.
  g.lipschitz_ = 60.0 * halfwidth * halfwidth - 20.0;
  double fmin = doublewell_f(-halfwidth), fmax = fmin;
  for (int k = 0; k <= 4000; ++k) {
    const double f = doublewell_f(-halfwidth + 2.0 * halfwidth * k / 4000.0);
    fmin = std::min(fmin, f);
    fmax = std::max(fmax, f);
  }
  g.range_ = 2.0 * (fmax - fmin);
  return g;
}

// Finite game with payoff table A: strategy i of x sits at coordinate i of
// the box [-0.5, p - 0.5] (likewise for y); any coordinate plays its nearest
// atom, so the loss is piecewise constant with zero gradient.
inline Game make_matrix_game(const Matrix& A) {
  if (A.rows() < 1 || A.cols() < 1) throw std::invalid_argument("make_matrix_game: empty matrix");
  if (!A.allFinite()) throw std::invalid_argument("make_matrix_game: non-finite entry");
  Game g(GameKind::matrix, Manifold::box(1, -0.5, static_cast<double>(A.rows()) - 0.5),
         Manifold::box(1, -0.5, static_cast<double>(A.cols()) - 0.5), MatrixGameParams{A});
  g.A_ = A;
  g.lipschitz_ = 0.0;
  g.range_ = A.maxCoeff() - A.minCoeff();
  return g;
}

inline Game make_torus_trig_game(const TorusTrigParams& p) {
  Game g(GameKind::torus_trig, Manifold::torus(1, 1.0), Manifold::torus(1, 1.0), p);
  const double tau2 = 4.0 * std::numbers::pi * std::numbers::pi;
  g.lipschitz_ = tau2 * (std::abs(p.coupling) + std::abs(p.f_cos) + 4.0 * std::abs(p.f_sin2));
  g.range_ = 2.0 * std::abs(p.coupling) + 4.0 * (std::abs(p.f_cos) + std::abs(p.f_sin2));
  return g;
}

inline Matrix matching_pennies() {
  Matrix A(2, 2);
  A << 1, -1, -1, 1;
  return A;
}

inline Matrix rock_paper_scissors() {
  Matrix A(3, 3);
  A << 0, -1, 1, 1, 0, -1, -1, 1, 0;
  return A;
}

struct GradientCheckResult {
  double max_rel_error_x = 0.0;
  double max_rel_error_y = 0.0;
  int points = 0;
  double max_rel_error() const { return std::max(max_rel_error_x, max_rel_error_y); }
};

// Compares analytic ambient gradients with central differences at random
// points. Relative error is |g - g_fd| / max(|g_fd|, 1).
inline GradientCheckResult gradient_check(const Game& g, int points, std::uint64_t seed, double h = 1e-5) {
  GradientCheckResult r;
  r.points = points;
  Rng rng(seed);
  auto fd = [&](const Vector& x, const Vector& y, bool wrt_x) {
    const Vector& p = wrt_x ? x : y;
    Vector grad(p.size());
    for (Index k = 0; k < p.size(); ++k) {
      Vector plus = p, minus = p;
      plus[k] += h;
      minus[k] -= h;
      const double fp = wrt_x ? g.loss(plus, y) : g.loss(x, plus);
      const double fm = wrt_x ? g.loss(minus, y) : g.loss(x, minus);
      grad[k] = (fp - fm) / (2.0 * h);
    }
    return grad;
  };
  for (int t = 0; t < points; ++t) {
    const Vector x = g.space_x().sample_uniform(rng);
    const Vector y = g.space_y().sample_uniform(rng);
    const Vector fx = fd(x, y, true), fy = fd(x, y, false);
    r.max_rel_error_x = std::max(r.max_rel_error_x, (g.grad_x(x, y) - fx).norm() / std::max(fx.norm(), 1.0));
    r.max_rel_error_y = std::max(r.max_rel_error_y, (g.grad_y(x, y) - fy).norm() / std::max(fy.norm(), 1.0));
  }
  return r;
}

}  // namespace mne
