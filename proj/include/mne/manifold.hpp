#pragma once

// Compact strategy spaces: unit spheres, flat tori and axis-aligned boxes.
//
// Points are plain Eigen vectors in ambient coordinates. The sphere kind lives
// in R^D (points on S^{D-1}); torus and box points are coordinate vectors.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mne/core.hpp"
#include "mne/rng.hpp"

namespace mne {

enum class ManifoldKind { sphere, torus, box };

inline const char* to_string(ManifoldKind k) {
  switch (k) {
    case ManifoldKind::sphere: return "sphere";
    case ManifoldKind::torus: return "torus";
    case ManifoldKind::box: return "box";
  }
  return "?";
}

class Manifold {
 public:
  using Bounds = std::vector<std::pair<double, double>>;

  static Manifold sphere(int ambient_dim) {
    if (ambient_dim < 2) throw std::invalid_argument("sphere: ambient dimension must be >= 2");
    Manifold m;
    m.kind_ = ManifoldKind::sphere;
    m.dim_ = ambient_dim;
    return m;
  }

  static Manifold torus(int dim, double period = 1.0) {
    if (dim < 1) throw std::invalid_argument("torus: dimension must be >= 1");
    if (!(period > 0.0) || !std::isfinite(period))
      throw std::invalid_argument("torus: period must be positive");
    Manifold m;
    m.kind_ = ManifoldKind::torus;
    m.dim_ = dim;
    m.period_ = period;
    return m;
  }

  static Manifold box(Bounds bounds) {
    if (bounds.empty()) throw std::invalid_argument("box: needs at least one coordinate");
    for (const auto& [lo, hi] : bounds)
      if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi))
        throw std::invalid_argument("box: each coordinate needs lower < upper");
    Manifold m;
    m.kind_ = ManifoldKind::box;
    m.dim_ = static_cast<int>(bounds.size());
    m.bounds_ = std::move(bounds);
    return m;
  }

  static Manifold box(int dim, double lo, double hi) {
    if (dim < 1) throw std::invalid_argument("box: dimension must be >= 1");
    return box(Bounds(static_cast<std::size_t>(dim), {lo, hi}));
  }

  ManifoldKind kind() const { return kind_; }
  // Length of a coordinate vector (ambient dimension for spheres).
  int dim() const { return dim_; }
  double period() const { return period_; }
  const Bounds& bounds() const { return bounds_; }

  bool operator==(const Manifold&) const = default;

  bool contains(const Vector& x) const {
    if (x.size() != dim_ || !x.allFinite()) return false;
    switch (kind_) {
      case ManifoldKind::sphere: return std::abs(x.norm() - 1.0) <= kMembershipTol;
      case ManifoldKind::torus:
        for (Index k = 0; k < x.size(); ++k)
          if (x[k] < 0.0 || x[k] >= period_) return false;
        return true;
      case ManifoldKind::box:
        for (Index k = 0; k < x.size(); ++k) {
          const auto [lo, hi] = bounds_[static_cast<std::size_t>(k)];
          if (x[k] < lo - kAlgebraicTol || x[k] > hi + kAlgebraicTol) return false;
        }
        return true;
    }
    return false;
  }

  void require_member(const Vector& x, const char* what = "point") const {
    if (!contains(x))
      throw std::invalid_argument(std::string(what) + " is not on the " + to_string(kind_) +
                                  " manifold of dimension " + std::to_string(dim_));
  }

  Vector sample_uniform(Rng& rng) const {
    Vector x(dim_);
    switch (kind_) {
      case ManifoldKind::sphere: {
        double r = 0.0;
        do {
          x = rng.normal_vector(dim_);
          r = x.norm();
        } while (r < 1e-12);
        x /= r;
        break;
      }
      case ManifoldKind::torus:
        for (Index k = 0; k < dim_; ++k) x[k] = period_ * rng.uniform();
        break;
      case ManifoldKind::box:
        for (Index k = 0; k < dim_; ++k) {
          const auto [lo, hi] = bounds_[static_cast<std::size_t>(k)];
          x[k] = rng.uniform(lo, hi);
        }
        break;
    }
    return x;
  }

  Vector project_tangent(const Vector& x, const Vector& v) const {
    check_dim(x, "point");
    check_dim(v, "vector");
    if (kind_ == ManifoldKind::sphere) return v - v.dot(x) * x;
    return v;
  }

  // First-order map from a tangent step back onto the manifold.
  Vector retract(const Vector& x, const Vector& step) const {
    check_dim(x, "point");
    check_dim(step, "step");
    Vector y = x + step;
    switch (kind_) {
      case ManifoldKind::sphere: {
        const double r = y.norm();
        if (!(r > 1e-300)) throw std::domain_error("sphere retraction: x + step is zero");
        y /= r;
        break;
      }
      case ManifoldKind::torus:
        for (Index k = 0; k < y.size(); ++k) y[k] = wrap(y[k]);
        break;
      case ManifoldKind::box:
        for (Index k = 0; k < y.size(); ++k) {
          const auto [lo, hi] = bounds_[static_cast<std::size_t>(k)];
          y[k] = std::clamp(y[k], lo, hi);
        }
        break;
    }
    return y;
  }

  // Exact exponential map on the sphere (v is projected first); retraction
  // elsewhere, where the two coincide or the boundary is clamped anyway.
  Vector exp_map(const Vector& x, const Vector& v) const {
    if (kind_ != ManifoldKind::sphere) return retract(x, v);
    const Vector t = project_tangent(x, v);
    const double a = t.norm();
    if (a < 1e-300) return x;
    Vector y = std::cos(a) * x + (std::sin(a) / a) * t;
    return y / y.norm();
  }

  double geodesic_distance(const Vector& a, const Vector& b) const {
    check_dim(a, "point");
    check_dim(b, "point");
    switch (kind_) {
      case ManifoldKind::sphere: return std::acos(std::clamp(a.dot(b), -1.0, 1.0));
      case ManifoldKind::torus: {
        double s = 0.0;
        for (Index k = 0; k < a.size(); ++k) {
          const double d = std::fmod(std::abs(a[k] - b[k]), period_);
          const double m = std::min(d, period_ - d);
          s += m * m;
        }
        return std::sqrt(s);
      }
      case ManifoldKind::box: return (a - b).norm();
    }
    return 0.0;
  }

  // Lower bound on the normalized (total mass 1) volume of any geodesic ball
  // of radius delta, capped at 1.
  //
  //   sphere S^{D-1}: int_0^delta sin^{D-2} / int_0^pi sin^{D-2}, 129-point Simpson
  //   torus:          cube of half-side delta/sqrt(d) inscribed in the ball
  //   box:            orthant cube of side delta/sqrt(d) (ball centred at a corner)
  double ball_volume_fraction_lower_bound(double delta) const {
    if (!(delta > 0.0)) throw std::invalid_argument("ball volume: delta must be positive");
    switch (kind_) {
      case ManifoldKind::sphere: {
        if (delta >= std::numbers::pi) return 1.0;
        const int power = dim_ - 2;
        const double cap = simpson_sin_power(power, delta);
        const double whole = simpson_sin_power(power, std::numbers::pi);
        return std::clamp(cap / whole, 0.0, 1.0);
      }
      case ManifoldKind::torus: {
        const double side = 2.0 * delta / std::sqrt(static_cast<double>(dim_));
        const double frac = std::min(side, period_) / period_;
        return std::min(1.0, std::pow(frac, dim_));
      }
      case ManifoldKind::box: {
        const double side = delta / std::sqrt(static_cast<double>(dim_));
        double v = 1.0;
        for (const auto& [lo, hi] : bounds_) v *= std::min(side, hi - lo) / (hi - lo);
        return std::min(1.0, v);
      }
    }
    return 1.0;
  }

 private:
  Manifold() = default;

  void check_dim(const Vector& v, const char* what) const {
    if (v.size() != dim_)
      throw std::invalid_argument(std::string(what) + " has dimension " + std::to_string(v.size()) +
                                  ", manifold expects " + std::to_string(dim_));
  }

  double wrap(double c) const {
    double r = std::fmod(c, period_);
    if (r < 0.0) r += period_;
    if (r >= period_) r = 0.0;
    return r;
  }

  static double simpson_sin_power(int power, double upper) {
    constexpr int kIntervals = 128;  // 129 nodes
    const double h = upper / kIntervals;
    double s = 0.0;
    for (int k = 0; k <= kIntervals; ++k) {
      const double w = (k == 0 || k == kIntervals) ? 1.0 : (k % 2 == 1 ? 4.0 : 2.0);
      s += w * std::pow(std::sin(k * h), power);
    }
    return s * h / 3.0;
  }

  ManifoldKind kind_ = ManifoldKind::sphere;
  int dim_ = 2;
  double period_ = 1.0;
  Bounds bounds_;
};

}  // namespace mne
