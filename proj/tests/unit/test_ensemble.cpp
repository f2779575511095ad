#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "mne/ensemble.hpp"
#include "test_support.hpp"

using namespace mne;
using namespace mne::testing;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

void expect_simplex(const Vector& w) {
  EXPECT_NEAR(w.sum(), 1.0, 1e-12);
  EXPECT_GE(w.minCoeff(), 0.0);
}

}  // namespace

TEST(Ensemble, InitUniformWeights) {
  const Manifold s = Manifold::sphere(3);
  EXPECT_EQ(init_uniform(s, 1, 0, stream::kInitX).weights(), vec({1.0}));
  EXPECT_EQ(init_uniform(s, 4, 0, stream::kInitX).weights(), Vector::Constant(4, 0.25));
  const WeightedEnsemble e = init_uniform(s, 50, 3, stream::kInitX);
  for (Index i = 0; i < e.size(); ++i) EXPECT_NEAR(e.position(i).norm(), 1.0, 1e-12);
  EXPECT_TRUE(e.has_uniform_weights());
  EXPECT_THROW(init_uniform(s, 0, 0, stream::kInitX), std::invalid_argument);
}

TEST(Ensemble, InitUniformPrefixStable) {
  const Manifold s = Manifold::sphere(4);
  const WeightedEnsemble a = init_uniform(s, 25, 9, stream::kInitY);
  const WeightedEnsemble b = init_uniform(s, 100, 9, stream::kInitY);
  EXPECT_EQ(a.positions(), b.positions().topRows(25));
  EXPECT_NE(init_uniform(s, 25, 9, stream::kInitX).positions(), a.positions());
}

TEST(Ensemble, NormalizeWeightsExamples) {
  EXPECT_EQ(normalize_weights(vec({2, 2})), vec({0.5, 0.5}));
  EXPECT_EQ(normalize_weights(vec({1, 0, 0})), vec({1, 0, 0}));
  const Vector w = normalize_weights(vec({std::exp(-1.0), std::exp(1.0)}));
  const double e2 = std::exp(2.0);
  EXPECT_NEAR(w[0], 1.0 / (1.0 + e2), 1e-15);
  EXPECT_NEAR(w[1], e2 / (1.0 + e2), 1e-15);
  EXPECT_NEAR(w[0], 0.1192, 1e-4);
  EXPECT_THROW(normalize_weights(vec({0, 0})), NumericalAbort);
  EXPECT_THROW(normalize_weights(vec({1, -0.5})), std::invalid_argument);
}

TEST(Ensemble, LogWeightNormalization) {
  const Vector lw = vec({-1.0, 1.0});
  const Vector w = normalize_log_weights(lw).array().exp();
  EXPECT_NEAR(w[1], std::exp(2.0) / (1.0 + std::exp(2.0)), 1e-15);
  // Huge exponents that overflow exp() directly.
  const Vector big = normalize_log_weights(vec({1000.0, 1000.0 + std::log(3.0)})).array().exp();
  EXPECT_NEAR(big[0], 0.25, 1e-12);
  const double inf = std::numeric_limits<double>::infinity();
  EXPECT_THROW(normalize_log_weights(vec({-inf, -inf})), NumericalAbort);
  EXPECT_THROW(normalize_log_weights(vec({std::nan(""), 0.0})), NumericalAbort);
}

TEST(Ensemble, LogSumExpShiftInvariance) {
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    Vector lw(20);
    for (Index i = 0; i < lw.size(); ++i) lw[i] = 10.0 * rng.normal();
    const double c = 100.0 * rng.normal();
    const Vector a = normalize_log_weights(lw).array().exp();
    const Vector b = normalize_log_weights(lw.array() + c).array().exp();
    EXPECT_LE((a - b).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Ensemble, ConstructorValidates) {
  const Manifold s = Manifold::sphere(2);
  Matrix pos(2, 2);
  pos << 1, 0, 0, 1;
  EXPECT_NO_THROW(WeightedEnsemble(s, pos, vec({0.5, 0.5})));
  EXPECT_THROW(WeightedEnsemble(s, pos, vec({0.5, 0.6})), std::invalid_argument);
  EXPECT_THROW(WeightedEnsemble(s, pos, vec({1.5, -0.5})), std::invalid_argument);
  EXPECT_THROW(WeightedEnsemble(s, pos, vec({1.0})), std::invalid_argument);
  Matrix off(1, 2);
  off << 1, 1;
  EXPECT_THROW(WeightedEnsemble(s, off, vec({1.0})), std::invalid_argument);
  EXPECT_THROW(WeightedEnsemble(s, Matrix(0, 2), Vector(0)), std::invalid_argument);
  WeightedEnsemble e(s, pos, vec({0.5, 0.5}));
  EXPECT_THROW(e.set_positions(off), std::invalid_argument);
}

TEST(Ensemble, SimplexHoldsAfterEveryOperation) {
  Rng rng(5);
  const Manifold m = Manifold::sphere(3);
  for (int trial = 0; trial < 50; ++trial) {
    WeightedEnsemble e = random_ensemble(m, 10, rng);
    expect_simplex(e.weights());
    Vector lw(10);
    for (Index i = 0; i < 10; ++i) lw[i] = 50.0 * rng.normal();
    e.set_log_weights(lw);
    expect_simplex(e.weights());
    e.set_weights(random_simplex(10, rng) * 7.0);
    expect_simplex(e.weights());
  }
}

TEST(Ensemble, MeanEmbeddingExamples) {
  const Manifold s = Manifold::sphere(2);
  EXPECT_EQ(mean_embedding(dirac(s, unit(2, 0))), unit(2, 0));
  Matrix pm(2, 2);
  pm << 1, 0, -1, 0;
  EXPECT_LE(mean_embedding(WeightedEnsemble(s, pm, vec({0.5, 0.5}))).norm(), 1e-15);
  Matrix e12(2, 2);
  e12 << 1, 0, 0, 1;
  const Vector m = mean_embedding(WeightedEnsemble(s, e12, vec({0.2, 0.8})));
  EXPECT_NEAR(m[0], 0.2, 1e-15);
  EXPECT_NEAR(m[1], 0.8, 1e-15);
}

TEST(Ensemble, MeanEmbeddingLinearInWeights) {
  Rng rng(7);
  const Manifold m = Manifold::sphere(4);
  for (int trial = 0; trial < 50; ++trial) {
    const WeightedEnsemble e = random_ensemble(m, 12, rng);
    const Vector w1 = random_simplex(12, rng), w2 = random_simplex(12, rng);
    const double a = rng.uniform();
    const Vector mix = a * mean_embedding(WeightedEnsemble(m, e.positions(), w1)) +
                       (1 - a) * mean_embedding(WeightedEnsemble(m, e.positions(), w2));
    const Vector direct = mean_embedding(WeightedEnsemble(m, e.positions(), a * w1 + (1 - a) * w2));
    EXPECT_LE((mix - direct).norm(), 1e-12);
  }
}

TEST(Ensemble, AverageExamples) {
  const Manifold b = Manifold::box(1, 0.0, 1.0);
  Matrix pos(2, 1);
  pos << 0.25, 0.75;
  const WeightedEnsemble e10(b, pos, vec({1, 0})), e01(b, pos, vec({0, 1}));

  AveragedMeasure one;
  one.update(e10, 0);
  EXPECT_EQ(one.measure(e10).weights(), e10.weights());

  AveragedMeasure two;
  two.update(e10, 0);
  two.update(e01, 1);
  EXPECT_EQ(two.measure(e01).weights(), vec({0.5, 0.5}));

  Rng rng(11);
  const WeightedEnsemble r = random_ensemble(b, 6, rng);
  AveragedMeasure ten;
  for (int t = 0; t < 10; ++t) ten.update(r, t);
  EXPECT_LE((ten.measure(r).weights() - r.weights()).cwiseAbs().maxCoeff(), 1e-14);

  AveragedMeasure mismatch;
  mismatch.update(r, 0);
  EXPECT_THROW(mismatch.update(e10, 1), std::invalid_argument);
}

TEST(Ensemble, AverageIsOrderIndependent) {
  Rng rng(13);
  const Manifold m = Manifold::torus(1);
  const WeightedEnsemble base = random_ensemble(m, 8, rng);
  std::vector<Vector> ws;
  for (int k = 0; k < 12; ++k) ws.push_back(random_simplex(8, rng));
  std::vector<int> order(ws.size());
  std::iota(order.begin(), order.end(), 0);
  AveragedMeasure fwd;
  for (int k : order) fwd.update(WeightedEnsemble(m, base.positions(), ws[k]), k);
  std::reverse(order.begin(), order.end());
  AveragedMeasure rev;
  for (int k : order) rev.update(WeightedEnsemble(m, base.positions(), ws[k]), k);
  EXPECT_LE((fwd.measure(base).weights() - rev.measure(base).weights()).cwiseAbs().maxCoeff(), 1e-14);
  expect_simplex(fwd.measure(base).weights());
}

TEST(Ensemble, SnapshotAveraging) {
  const Manifold b = Manifold::box(1, 0.0, 1.0);
  AveragedMeasure snap(AveragingMode::snapshot, 2);
  auto at = [&](double x) { return WeightedEnsemble(b, Matrix::Constant(1, 1, x), vec({1.0})); };
  snap.update(at(0.1), 0);
  snap.update(at(0.2), 1);
  snap.update(at(0.3), 2);
  EXPECT_EQ(snap.snapshots().size(), 2u);
  const WeightedEnsemble m = snap.measure(at(0.3));
  EXPECT_EQ(m.size(), 2);
  EXPECT_NEAR(m.weights()[0], 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(m.weights()[1], 1.0 / 3.0, 1e-15);
  EXPECT_EQ(m.positions()(1, 0), 0.3);
  EXPECT_THROW(AveragedMeasure(AveragingMode::snapshot, 0), std::invalid_argument);
}

TEST(Ensemble, CsvRoundTrip) {
  Rng rng(17);
  const Manifold m = Manifold::sphere(3);
  const WeightedEnsemble e = random_ensemble(m, 5, rng);
  std::stringstream ss;
  write_ensemble_csv(ss, e);
  EXPECT_EQ(ss.str().substr(0, ss.str().find('\n')), "particle_id,weight,coord_0,coord_1,coord_2");
  const WeightedEnsemble back = read_ensemble_csv(ss, m);
  EXPECT_LE((back.positions() - e.positions()).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LE((back.weights() - e.weights()).cwiseAbs().maxCoeff(), 1e-15);
  std::stringstream bad("particle_id,weight,coord_0\n0,1,0.5\n");
  EXPECT_THROW(read_ensemble_csv(bad, m), std::invalid_argument);
}

TEST(Ensemble, WeightEntropy) {
  const Manifold b = Manifold::box(1, 0.0, 1.0);
  EXPECT_NEAR(init_uniform(b, 8, 0, stream::kInitX).weight_entropy(), std::log(8.0), 1e-12);
  EXPECT_EQ(WeightedEnsemble(b, Matrix::Constant(2, 1, 0.5), vec({1, 0})).weight_entropy(), 0.0);
}
