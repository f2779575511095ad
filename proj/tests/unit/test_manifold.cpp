#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "mne/manifold.hpp"
#include "test_support.hpp"

using namespace mne;
using mne::testing::unit;

TEST(Manifold, FactoryValidation) {
  EXPECT_THROW(Manifold::sphere(1), std::invalid_argument);
  EXPECT_THROW(Manifold::torus(0), std::invalid_argument);
  EXPECT_THROW(Manifold::torus(1, 0.0), std::invalid_argument);
  EXPECT_THROW(Manifold::box(1, 1.0, 1.0), std::invalid_argument);
  EXPECT_NO_THROW(Manifold::box(2, -1.0, 1.0));
}

TEST(Manifold, SphereSamplesHaveUnitNorm) {
  const Manifold s = Manifold::sphere(3);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    EXPECT_NEAR(s.sample_uniform(rng).norm(), 1.0, 1e-12);
  }
}

TEST(Manifold, TorusSamplesInFundamentalDomain) {
  const Manifold t = Manifold::torus(2, 1.0);
  Rng rng(7);
  for (int k = 0; k < 1000; ++k) {
    const Vector p = t.sample_uniform(rng);
    EXPECT_GE(p.minCoeff(), 0.0);
    EXPECT_LT(p.maxCoeff(), 1.0);
    EXPECT_TRUE(t.contains(p));
  }
}

TEST(Manifold, CircleSampleMeanNearZero) {
  const Manifold s = Manifold::sphere(2);
  Rng rng(11);
  Vector mean = Vector::Zero(2);
  const int N = 100000;
  for (int k = 0; k < N; ++k) mean += s.sample_uniform(rng);
  EXPECT_LE((mean / N).norm(), 0.02);
}

TEST(Manifold, SamplingIsDeterministic) {
  const Manifold s = Manifold::sphere(5);
  Rng a(3), b(3);
  for (int k = 0; k < 10; ++k) EXPECT_EQ(s.sample_uniform(a), s.sample_uniform(b));
}

TEST(Manifold, ProjectTangentExamples) {
  const Manifold s = Manifold::sphere(3);
  EXPECT_LE(s.project_tangent(unit(3, 0), unit(3, 0)).norm(), 1e-15);
  EXPECT_EQ(s.project_tangent(unit(3, 0), unit(3, 1)), unit(3, 1));
  Rng rng(5);
  for (int k = 0; k < 100; ++k) {
    const Vector x = s.sample_uniform(rng);
    const Vector v = rng.normal_vector(3);
    EXPECT_NEAR(s.project_tangent(x, v).dot(x), 0.0, 1e-12);
  }
  const Manifold t = Manifold::torus(2);
  const Vector v = Vector::Constant(2, 0.3);
  EXPECT_EQ(t.project_tangent(Vector::Zero(2), v), v);
  EXPECT_THROW(s.project_tangent(unit(3, 0), Vector::Zero(2)), std::invalid_argument);
}

TEST(Manifold, ProjectTangentIdempotent) {
  Rng rng(9);
  for (int D : {2, 3, 10}) {
    const Manifold s = Manifold::sphere(D);
    for (int k = 0; k < 50; ++k) {
      const Vector x = s.sample_uniform(rng);
      const Vector once = s.project_tangent(x, rng.normal_vector(D));
      EXPECT_LE((s.project_tangent(x, once) - once).norm(), 1e-12);
    }
  }
}

TEST(Manifold, RetractExamples) {
  const Manifold s = Manifold::sphere(3);
  EXPECT_EQ(s.retract(unit(3, 0), Vector::Zero(3)), unit(3, 0));
  const Vector r = s.retract(unit(3, 0), 0.1 * unit(3, 1));
  EXPECT_NEAR(r.norm(), 1.0, 1e-15);
  EXPECT_GT(r[1], 0.0);
  EXPECT_NEAR(r[1], 0.1 / std::sqrt(1.01), 1e-15);
  EXPECT_THROW(s.retract(unit(3, 0), -unit(3, 0)), std::domain_error);

  const Manifold t = Manifold::torus(1, 1.0);
  EXPECT_NEAR(t.retract(Vector::Constant(1, 0.9), Vector::Constant(1, 0.3))[0], 0.2, 1e-12);
  EXPECT_NEAR(t.retract(Vector::Constant(1, 0.1), Vector::Constant(1, -0.3))[0], 0.8, 1e-12);

  const Manifold b = Manifold::box(1, -1.5, 1.5);
  EXPECT_EQ(b.retract(Vector::Constant(1, 1.4), Vector::Constant(1, 0.5))[0], 1.5);
  EXPECT_EQ(b.retract(Vector::Constant(1, -1.4), Vector::Constant(1, -0.5))[0], -1.5);
}

TEST(Manifold, RetractPreservesMembership) {
  Rng rng(13);
  const Manifold spaces[] = {Manifold::sphere(2), Manifold::sphere(7), Manifold::torus(3, 2.5),
                             Manifold::box({{-1.0, 2.0}, {0.0, 0.5}})};
  for (const Manifold& m : spaces) {
    for (int k = 0; k < 200; ++k) {
      const Vector x = m.sample_uniform(rng);
      const Vector step = 3.0 * rng.uniform() * rng.normal_vector(m.dim());
      EXPECT_TRUE(m.contains(m.retract(x, step))) << to_string(m.kind());
      EXPECT_TRUE(m.contains(m.exp_map(x, step))) << to_string(m.kind());
    }
  }
}

TEST(Manifold, ExpMapFollowsGreatCircle) {
  const Manifold s = Manifold::sphere(3);
  const Vector y = s.exp_map(unit(3, 0), (std::numbers::pi / 2) * unit(3, 1));
  EXPECT_LE((y - unit(3, 1)).norm(), 1e-12);
  Rng rng(2);
  const Vector x = s.sample_uniform(rng);
  const Vector v = 0.3 * s.project_tangent(x, rng.normal_vector(3)).normalized();
  EXPECT_NEAR(s.geodesic_distance(x, s.exp_map(x, v)), 0.3, 1e-12);
}

TEST(Manifold, GeodesicDistanceExamples) {
  const Manifold s = Manifold::sphere(3);
  EXPECT_NEAR(s.geodesic_distance(unit(3, 0), -unit(3, 0)), std::numbers::pi, 1e-12);
  EXPECT_EQ(s.geodesic_distance(unit(3, 1), unit(3, 1)), 0.0);
  const Manifold t = Manifold::torus(1, 1.0);
  EXPECT_NEAR(t.geodesic_distance(Vector::Constant(1, 0.1), Vector::Constant(1, 0.9)), 0.2, 1e-12);
  const Manifold b = Manifold::box(2, 0.0, 1.0);
  EXPECT_NEAR(b.geodesic_distance(Vector::Zero(2), Vector::Ones(2)), std::sqrt(2.0), 1e-15);
}

TEST(Manifold, GeodesicDistanceIsAMetric) {
  Rng rng(17);
  const Manifold spaces[] = {Manifold::sphere(3), Manifold::sphere(10), Manifold::torus(2, 1.0),
                             Manifold::box(3, -1.0, 1.0)};
  for (const Manifold& m : spaces) {
    for (int k = 0; k < 300; ++k) {
      const Vector a = m.sample_uniform(rng), b = m.sample_uniform(rng), c = m.sample_uniform(rng);
      const double ab = m.geodesic_distance(a, b);
      EXPECT_NEAR(ab, m.geodesic_distance(b, a), 1e-12);
      EXPECT_GT(ab, 0.0);
      EXPECT_LE(m.geodesic_distance(a, a), 1e-7);
      EXPECT_LE(m.geodesic_distance(a, c), ab + m.geodesic_distance(b, c) + 1e-9) << to_string(m.kind());
    }
  }
}

TEST(Manifold, TangentNoiseCovarianceIsProjector) {
  const Manifold s = Manifold::sphere(3);
  Rng rng(23);
  const Vector x = s.sample_uniform(rng);
  const int N = 100000;
  Vector mean = Vector::Zero(3);
  Matrix cov = Matrix::Zero(3, 3);
  for (int k = 0; k < N; ++k) {
    const Vector z = s.project_tangent(x, rng.normal_vector(3));
    mean += z;
    cov += z * z.transpose();
  }
  mean /= N;
  cov /= N;
  const Matrix projector = Matrix::Identity(3, 3) - x * x.transpose();
  EXPECT_LE(mean.cwiseAbs().maxCoeff(), 0.02);
  EXPECT_LE((cov - projector).cwiseAbs().maxCoeff(), 0.02);
}

TEST(Manifold, BallVolumeExamples) {
  const Manifold t = Manifold::torus(1, 1.0);
  EXPECT_NEAR(t.ball_volume_fraction_lower_bound(0.1), 0.2, 1e-15);
  EXPECT_EQ(t.ball_volume_fraction_lower_bound(1.0), 1.0);
  EXPECT_NEAR(Manifold::sphere(2).ball_volume_fraction_lower_bound(std::numbers::pi / 4), 0.25, 1e-12);
  EXPECT_THROW(t.ball_volume_fraction_lower_bound(0.0), std::invalid_argument);
  EXPECT_THROW(t.ball_volume_fraction_lower_bound(-1.0), std::invalid_argument);
}

TEST(Manifold, SphereCapMatchesClosedFormOnS2) {
  // Normalized cap area on S^2 is (1 - cos delta) / 2.
  const Manifold s = Manifold::sphere(3);
  for (double d : {0.05, 0.3, 1.0, 2.5})
    EXPECT_NEAR(s.ball_volume_fraction_lower_bound(d), 0.5 * (1.0 - std::cos(d)), 1e-8);
  EXPECT_EQ(s.ball_volume_fraction_lower_bound(4.0), 1.0);
}

TEST(Manifold, TorusVolumeBoundIsBelowMonteCarlo) {
  const Manifold t = Manifold::torus(2, 1.0);
  Rng rng(29);
  const double delta = 0.2;
  const Vector center = t.sample_uniform(rng);
  int inside = 0;
  const int N = 200000;
  for (int k = 0; k < N; ++k) inside += t.geodesic_distance(center, t.sample_uniform(rng)) <= delta;
  const double mc = static_cast<double>(inside) / N;  // about pi * 0.04
  EXPECT_LE(t.ball_volume_fraction_lower_bound(delta), mc);
}

TEST(Manifold, BallVolumeMonotoneInDelta) {
  for (const Manifold& m : {Manifold::sphere(4), Manifold::torus(3), Manifold::box(2, -1.0, 1.0)}) {
    double prev = 0.0;
    for (double d = 0.01; d < 4.0; d += 0.05) {
      const double v = m.ball_volume_fraction_lower_bound(d);
      EXPECT_GE(v, prev - 1e-12);
      EXPECT_GT(v, 0.0);
      EXPECT_LE(v, 1.0);
      prev = v;
    }
  }
}
