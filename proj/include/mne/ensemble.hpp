#pragma once

// Weighted particle ensembles (discrete mixed strategies) and their time
// averages.

#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mne/core.hpp"
#include "mne/manifold.hpp"
#include "mne/rng.hpp"

namespace mne {

// Normalizes nonnegative raw weights onto the simplex. Throws on negative
// entries or zero total mass (underflow of an exponential update).
inline Vector normalize_weights(const Vector& raw) {
  if (raw.size() == 0) throw std::invalid_argument("normalize_weights: empty weight vector");
  if (!raw.allFinite()) throw NumericalAbort("normalize_weights: non-finite weight");
  if ((raw.array() < 0.0).any()) throw std::invalid_argument("normalize_weights: negative weight");
  const double total = raw.sum();
  if (!(total > 0.0)) throw NumericalAbort("normalize_weights: total weight mass is zero");
  return raw / total;
}

// log-sum-exp normalization: returns normalized log-weights.
inline Vector normalize_log_weights(const Vector& log_w) {
  if (log_w.size() == 0) throw std::invalid_argument("normalize_log_weights: empty vector");
  const double top = log_w.maxCoeff();
  if (std::isnan(top) || top == std::numeric_limits<double>::infinity())
    throw NumericalAbort("weight update produced a non-finite log-weight");
  if (top == -std::numeric_limits<double>::infinity())
    throw NumericalAbort("weight update underflowed: all weights are zero");
  const double lse = top + std::log((log_w.array() - top).exp().sum());
  return log_w.array() - lse;
}

class WeightedEnsemble {
 public:
  // Weights must already lie on the simplex (within kAlgebraicTol); they are
  // renormalized exactly on construction.
  WeightedEnsemble(Manifold space, Matrix positions, const Vector& weights)
      : space_(std::move(space)), positions_(std::move(positions)) {
    if (positions_.rows() < 1) throw std::invalid_argument("ensemble: needs at least one particle");
    if (positions_.cols() != space_.dim())
      throw std::invalid_argument("ensemble: position dimension does not match the manifold");
    if (weights.size() != positions_.rows())
      throw std::invalid_argument("ensemble: weight count does not match particle count");
    for (Index i = 0; i < positions_.rows(); ++i)
      space_.require_member(positions_.row(i).transpose(), "ensemble position");
    if ((weights.array() < 0.0).any()) throw std::invalid_argument("ensemble: negative weight");
    if (std::abs(weights.sum() - 1.0) > kAlgebraicTol)
      throw std::invalid_argument("ensemble: weights do not sum to 1");
    set_weights(weights);
  }

  static WeightedEnsemble uniform_weights(Manifold space, Matrix positions) {
    const Index n = positions.rows();
    if (n < 1) throw std::invalid_argument("ensemble: needs at least one particle");
    return {std::move(space), std::move(positions), Vector::Constant(n, 1.0 / static_cast<double>(n))};
  }

  Index size() const { return positions_.rows(); }
  int dim() const { return space_.dim(); }
  const Manifold& space() const { return space_; }
  const Matrix& positions() const { return positions_; }
  Vector position(Index i) const { return positions_.row(i).transpose(); }
  const Vector& weights() const { return weights_; }
  const Vector& log_weights() const { return log_weights_; }

  void set_positions(Matrix positions) {
    if (positions.rows() != size() || positions.cols() != dim())
      throw std::invalid_argument("ensemble: replacement positions have the wrong shape");
    for (Index i = 0; i < positions.rows(); ++i)
      space_.require_member(positions.row(i).transpose(), "ensemble position");
    positions_ = std::move(positions);
  }

  // Takes unnormalized log-weights and normalizes them with log-sum-exp.
  void set_log_weights(const Vector& log_w) {
    if (log_w.size() != size()) throw std::invalid_argument("ensemble: log-weight count mismatch");
    log_weights_ = normalize_log_weights(log_w);
    weights_ = log_weights_.array().exp();
    weights_ /= weights_.sum();
  }

  void set_weights(const Vector& w) {
    if (w.size() != size()) throw std::invalid_argument("ensemble: weight count mismatch");
    weights_ = normalize_weights(w);
    log_weights_ = weights_.array().log();
  }

  bool has_uniform_weights() const {
    const double u = 1.0 / static_cast<double>(size());
    return ((weights_.array() - u).abs() <= kAlgebraicTol).all();
  }

  // Shannon entropy of the weights in nats.
  double weight_entropy() const {
    double h = 0.0;
    for (Index i = 0; i < size(); ++i)
      if (weights_[i] > 0.0) h -= weights_[i] * std::log(weights_[i]);
    return h;
  }

  bool operator==(const WeightedEnsemble& o) const {
    return space_ == o.space_ && positions_ == o.positions_ && weights_ == o.weights_;
  }

 private:
  Manifold space_;
  Matrix positions_;
  Vector weights_;
  Vector log_weights_;
};

// n IID uniform positions with weights 1/n. Particle i draws from its own
// substream (seed, stream_tag, i), so the first k particles do not depend on n.
inline WeightedEnsemble init_uniform(const Manifold& m, Index n, std::uint64_t seed,
                                     std::uint64_t stream_tag) {
  if (n < 1) throw std::invalid_argument("init_uniform: n must be >= 1");
  Matrix pos(n, m.dim());
  for (Index i = 0; i < n; ++i) {
    Rng rng = Rng::substream(seed, {stream_tag, static_cast<std::uint64_t>(i)});
    pos.row(i) = m.sample_uniform(rng).transpose();
  }
  return WeightedEnsemble::uniform_weights(m, std::move(pos));
}

inline WeightedEnsemble init_uniform(const Manifold& m, Index n, Rng& rng) {
  if (n < 1) throw std::invalid_argument("init_uniform: n must be >= 1");
  Matrix pos(n, m.dim());
  for (Index i = 0; i < n; ++i) pos.row(i) = m.sample_uniform(rng).transpose();
  return WeightedEnsemble::uniform_weights(m, std::move(pos));
}

// sum_i w_i x_i in ambient coordinates.
inline Vector mean_embedding(const WeightedEnsemble& e) {
  return e.positions().transpose() * e.weights();
}

enum class AveragingMode { weights_only, snapshot };

inline const char* to_string(AveragingMode m) {
  return m == AveragingMode::weights_only ? "weights_only" : "snapshot";
}

// Running time average of an ensemble's measure.
//
// weights_only keeps the incremental mean of the weight vector and pairs it
// with whatever positions the caller supplies (memory O(n)). snapshot stores
// a copy every `stride` updates; each copy carries the number of updates it
// stands for, so the represented measure is a piecewise-constant time average.
class AveragedMeasure {
 public:
  explicit AveragedMeasure(AveragingMode mode = AveragingMode::weights_only, std::int64_t stride = 100)
      : mode_(mode), stride_(stride) {
    if (stride_ < 1) throw std::invalid_argument("averaged measure: stride must be >= 1");
  }

  AveragingMode mode() const { return mode_; }
  std::int64_t updates() const { return updates_; }
  const Vector& mean_weights() const { return mean_weights_; }
  const std::vector<std::pair<WeightedEnsemble, std::int64_t>>& snapshots() const { return snapshots_; }

  void update(const WeightedEnsemble& e, std::int64_t step_index) {
    if (mode_ == AveragingMode::weights_only) {
      if (updates_ == 0) {
        mean_weights_ = e.weights();
      } else {
        if (e.size() != mean_weights_.size())
          throw std::invalid_argument("averaged measure: particle count changed between updates");
        mean_weights_ += (e.weights() - mean_weights_) / static_cast<double>(updates_ + 1);
      }
    } else {
      if (snapshots_.empty() || step_index % stride_ == 0) {
        snapshots_.emplace_back(e, 1);
      } else {
        ++snapshots_.back().second;
      }
    }
    ++updates_;
  }

  // The averaged measure. weights_only needs the current ensemble for the
  // positions; snapshot ignores it.
  WeightedEnsemble measure(const WeightedEnsemble& current) const {
    if (updates_ == 0) return current;
    if (mode_ == AveragingMode::weights_only) {
      if (current.size() != mean_weights_.size())
        throw std::invalid_argument("averaged measure: particle count mismatch");
      return {current.space(), current.positions(), normalize_weights(mean_weights_)};
    }
    Index total = 0;
    for (const auto& [e, c] : snapshots_) total += e.size();
    Matrix pos(total, current.dim());
    Vector w(total);
    Index r = 0;
    for (const auto& [e, c] : snapshots_) {
      pos.middleRows(r, e.size()) = e.positions();
      w.segment(r, e.size()) = e.weights() * (static_cast<double>(c) / static_cast<double>(updates_));
      r += e.size();
    }
    return {current.space(), std::move(pos), normalize_weights(w)};
  }

 private:
  AveragingMode mode_;
  std::int64_t stride_;
  std::int64_t updates_ = 0;
  Vector mean_weights_;
  std::vector<std::pair<WeightedEnsemble, std::int64_t>> snapshots_;
};

// CSV: particle_id,weight,coord_0,...,coord_{D-1}
inline void write_ensemble_csv(std::ostream& out, const WeightedEnsemble& e) {
  out << "particle_id,weight";
  for (int k = 0; k < e.dim(); ++k) out << ",coord_" << k;
  out << '\n';
  const auto old_prec = out.precision(17);
  for (Index i = 0; i < e.size(); ++i) {
    out << i << ',' << e.weights()[i];
    for (int k = 0; k < e.dim(); ++k) out << ',' << e.positions()(i, k);
    out << '\n';
  }
  out.precision(old_prec);
}

// Reads the CSV layout above. Rows are ordered by particle_id as written;
// weights are renormalized.
inline WeightedEnsemble read_ensemble_csv(std::istream& in, const Manifold& space) {
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("ensemble csv: missing header");
  std::vector<double> weights;
  std::vector<std::vector<double>> coords;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> row;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    if (row.size() != static_cast<std::size_t>(space.dim()) + 2)
      throw std::invalid_argument("ensemble csv: row has " + std::to_string(row.size()) +
                                  " columns, expected " + std::to_string(space.dim() + 2));
    weights.push_back(row[1]);
    coords.emplace_back(row.begin() + 2, row.end());
  }
  if (weights.empty()) throw std::invalid_argument("ensemble csv: no particles");
  const auto n = static_cast<Index>(weights.size());
  Matrix pos(n, space.dim());
  Vector w(n);
  for (Index i = 0; i < n; ++i) {
    w[i] = weights[static_cast<std::size_t>(i)];
    for (int k = 0; k < space.dim(); ++k) pos(i, k) = coords[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
  }
  return {space, std::move(pos), normalize_weights(w)};
}

}  // namespace mne
