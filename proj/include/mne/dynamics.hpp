#pragma once

// Particle descent-ascent dynamics for mixed equilibria.
//
//   iwgf  transport only, uniform weights:   x_i -= eta * grad V_x(mu_y, x_i)
//   lda   iwgf plus projected Gaussian noise of scale sqrt(2 eta / beta)
//   wfr   transport with the opponent's weights plus multiplicative weights:
//           log w_x^i -= eta_w * V_x(mu_y, x_i), then log-sum-exp normalize
//   md    wfr with frozen positions (entropic mirror descent on atoms)
//
// y ascends symmetrically with the signs flipped. By default both players are
// updated from the iteration-t state (simultaneous); UpdateOrder::alternating
// lets y see the new x.

#include <chrono>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mne/core.hpp"
#include "mne/ensemble.hpp"
#include "mne/games.hpp"
#include "mne/manifold.hpp"
#include "mne/rng.hpp"

namespace mne {

enum class Algorithm { iwgf, lda, wfr, md };
enum class UpdateOrder { simultaneous, alternating };

inline const char* to_string(Algorithm a) {
  switch (a) {
    case Algorithm::iwgf: return "iwgf";
    case Algorithm::lda: return "lda";
    case Algorithm::wfr: return "wfr";
    case Algorithm::md: return "md";
  }
  return "?";
}

inline Algorithm parse_algorithm(const std::string& s) {
  if (s == "iwgf") return Algorithm::iwgf;
  if (s == "lda") return Algorithm::lda;
  if (s == "wfr") return Algorithm::wfr;
  if (s == "md") return Algorithm::md;
  throw std::invalid_argument("unknown algorithm '" + s + "' (expected iwgf|lda|wfr|md)");
}

struct DynamicsConfig {
  Algorithm algo = Algorithm::wfr;
  double eta = 0.01;    // position step (unused by md)
  double eta_w = 0.05;  // weight step (unused by iwgf, lda)
  double beta = 100.0;  // inverse temperature (lda only)
  std::int64_t iters = 1000;
  Index n = 50;
  std::uint64_t seed = 0;
  AveragingMode averaging = AveragingMode::weights_only;
  std::int64_t snapshot_stride = 100;
  // Checkpoint spacing; 0 means only the initial and final state.
  std::int64_t ni_eval_every = 0;
  UpdateOrder order = UpdateOrder::simultaneous;
  // Use the exact sphere exponential map instead of normalize(x + step).
  bool exact_exp_map = false;

  // Continuous-time transport/reweighting ratio gamma/alpha realized by the
  // discrete steps.
  double gamma_over_alpha() const { return eta / eta_w; }

  void validate() const {
    if (algo != Algorithm::md && !(eta >= 0.0)) throw std::invalid_argument("eta must be >= 0");
    if ((algo == Algorithm::wfr || algo == Algorithm::md) && !(eta_w >= 0.0))
      throw std::invalid_argument("eta_w must be >= 0");
    if (algo == Algorithm::lda && !(beta > 0.0)) throw std::invalid_argument("beta must be > 0");
    if (iters < 0) throw std::invalid_argument("iters must be >= 0");
    if (n < 1) throw std::invalid_argument("n must be >= 1");
    if (snapshot_stride < 1) throw std::invalid_argument("snapshot_stride must be >= 1");
    if (ni_eval_every < 0) throw std::invalid_argument("ni_eval_every must be >= 0");
  }
};

struct EnsemblePair {
  WeightedEnsemble x;
  WeightedEnsemble y;
};

// One noise stream per particle and player: (seed, kNoiseX|kNoiseY, i). A step
// draws from particle i's stream only, so results do not depend on loop order.
struct NoiseStreams {
  std::vector<Rng> x;
  std::vector<Rng> y;

  static NoiseStreams make(std::uint64_t seed, Index nx, Index ny) {
    NoiseStreams s;
    s.x.reserve(static_cast<std::size_t>(nx));
    s.y.reserve(static_cast<std::size_t>(ny));
    for (Index i = 0; i < nx; ++i) s.x.push_back(Rng::substream(seed, {stream::kNoiseX, static_cast<std::uint64_t>(i)}));
    for (Index i = 0; i < ny; ++i) s.y.push_back(Rng::substream(seed, {stream::kNoiseY, static_cast<std::uint64_t>(i)}));
    return s;
  }
};

namespace detail {

inline void require_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) throw NumericalAbort(std::string("non-finite ") + what);
}
inline void require_finite(const Vector& v, const char* what) {
  if (!v.allFinite()) throw NumericalAbort(std::string("non-finite ") + what);
}

inline void require_spaces(const WeightedEnsemble& ex, const WeightedEnsemble& ey, const Game& g) {
  if (!(ex.space() == g.space_x())) throw std::invalid_argument("x ensemble is not on the game's x space");
  if (!(ey.space() == g.space_y())) throw std::invalid_argument("y ensemble is not on the game's y space");
}

// Moves every particle along sign * grad (+ optional noise) and retracts.
// Positions are untouched when the step is exactly zero and no noise is drawn.
inline Matrix transport(const Manifold& m, const Matrix& P, const Matrix& grad, double step_sign_eta,
                        double noise_scale, std::vector<Rng>* noise, bool exact_exp_map) {
  if (step_sign_eta == 0.0 && noise_scale == 0.0) return P;
  Matrix out(P.rows(), P.cols());
  for (Index i = 0; i < P.rows(); ++i) {
    const Vector p = P.row(i).transpose();
    Vector move = m.project_tangent(p, step_sign_eta * grad.row(i).transpose());
    if (noise_scale != 0.0) {
      const Vector z = (*noise)[static_cast<std::size_t>(i)].normal_vector(P.cols());
      move += noise_scale * m.project_tangent(p, z);
    }
    out.row(i) = (exact_exp_map ? m.exp_map(p, move) : m.retract(p, move)).transpose();
  }
  return out;
}

// Shared body of iwgf/lda. noise == nullptr forces zero noise.
inline EnsemblePair langevin_like_step(const WeightedEnsemble& ex, const WeightedEnsemble& ey, const Game& g,
                                       const DynamicsConfig& cfg, NoiseStreams* noise) {
  require_spaces(ex, ey, g);
  if (!ex.has_uniform_weights() || !ey.has_uniform_weights())
    throw std::invalid_argument("iwgf/lda require uniform weights (they do not reweight particles)");
  const double sigma = noise ? std::sqrt(2.0 * cfg.eta / cfg.beta) : 0.0;
  if (noise && (noise->x.size() != static_cast<std::size_t>(ex.size()) ||
                noise->y.size() != static_cast<std::size_t>(ey.size())))
    throw std::invalid_argument("noise stream count does not match particle count");

  const Matrix gx = g.potential_grad_x(ey, ex.positions());
  require_finite(gx, "x gradient");
  WeightedEnsemble nx = ex;
  nx.set_positions(transport(g.space_x(), ex.positions(), gx, -cfg.eta, sigma, noise ? &noise->x : nullptr,
                             cfg.exact_exp_map));

  const WeightedEnsemble& x_for_y = cfg.order == UpdateOrder::alternating ? nx : ex;
  const Matrix gy = g.potential_grad_y(x_for_y, ey.positions());
  require_finite(gy, "y gradient");
  WeightedEnsemble ny = ey;
  ny.set_positions(transport(g.space_y(), ey.positions(), gy, cfg.eta, sigma, noise ? &noise->y : nullptr,
                             cfg.exact_exp_map));
  return {std::move(nx), std::move(ny)};
}

}  // namespace detail

// Langevin descent-ascent step (uniform weights).
inline EnsemblePair lda_step(const WeightedEnsemble& ex, const WeightedEnsemble& ey, const Game& g,
                             const DynamicsConfig& cfg, NoiseStreams& noise) {
  return detail::langevin_like_step(ex, ey, g, cfg, &noise);
}

// Noise-free descent-ascent (interacting Wasserstein gradient flow).
inline EnsemblePair iwgf_step(const WeightedEnsemble& ex, const WeightedEnsemble& ey, const Game& g,
                              const DynamicsConfig& cfg) {
  return detail::langevin_like_step(ex, ey, g, cfg, nullptr);
}

// Wasserstein-Fisher-Rao descent-ascent step.
inline EnsemblePair wfr_step(const WeightedEnsemble& ex, const WeightedEnsemble& ey, const Game& g,
                             const DynamicsConfig& cfg) {
  detail::require_spaces(ex, ey, g);
  const bool alternating = cfg.order == UpdateOrder::alternating;

  WeightedEnsemble nx = ex;
  {
    const Vector vx = g.potential_x(ey, ex.positions());
    detail::require_finite(vx, "x potential");
    if (cfg.eta != 0.0) {
      const Matrix gx = g.potential_grad_x(ey, ex.positions());
      detail::require_finite(gx, "x gradient");
      nx.set_positions(detail::transport(g.space_x(), ex.positions(), gx, -cfg.eta, 0.0, nullptr,
                                         cfg.exact_exp_map));
    }
    if (cfg.eta_w != 0.0) nx.set_log_weights(ex.log_weights() - cfg.eta_w * vx);
  }

  const WeightedEnsemble& x_for_y = alternating ? nx : ex;
  WeightedEnsemble ny = ey;
  {
    const Vector vy = g.potential_y(x_for_y, ey.positions());
    detail::require_finite(vy, "y potential");
    if (cfg.eta != 0.0) {
      const Matrix gy = g.potential_grad_y(x_for_y, ey.positions());
      detail::require_finite(gy, "y gradient");
      ny.set_positions(detail::transport(g.space_y(), ey.positions(), gy, cfg.eta, 0.0, nullptr,
                                         cfg.exact_exp_map));
    }
    if (cfg.eta_w != 0.0) ny.set_log_weights(ey.log_weights() + cfg.eta_w * vy);
  }
  return {std::move(nx), std::move(ny)};
}

// Entropic mirror descent: wfr with positions frozen.
inline EnsemblePair md_step(const WeightedEnsemble& ex, const WeightedEnsemble& ey, const Game& g,
                            const DynamicsConfig& cfg) {
  DynamicsConfig frozen = cfg;
  frozen.eta = 0.0;
  return wfr_step(ex, ey, g, frozen);
}

struct NiValue {
  double estimate = 0.0;
  std::optional<double> exact;
};

// Called with the measure to score (time-averaged for wfr/md, current for
// iwgf/lda), the iteration and whether it is the last checkpoint.
using MetricsHook =
    std::function<NiValue(const WeightedEnsemble& mx, const WeightedEnsemble& my, std::int64_t iter, bool final)>;

struct Checkpoint {
  std::int64_t iter = 0;
  double ni_estimate = 0.0;
  std::optional<double> ni_exact;
  double wall_ms = 0.0;
  double weight_entropy_x = 0.0;
  double weight_entropy_y = 0.0;
};

struct RunRecord {
  DynamicsConfig config;
  std::vector<Checkpoint> checkpoints;
  WeightedEnsemble final_x;
  WeightedEnsemble final_y;
  WeightedEnsemble averaged_x;
  WeightedEnsemble averaged_y;
};

// Whether NI is scored on the time-averaged measure (wfr, md) or the current
// empirical measure (iwgf, lda).
inline bool scores_time_average(Algorithm a) { return a == Algorithm::wfr || a == Algorithm::md; }

// Initial ensembles: uniform samples from per-particle substreams, or every
// atom once for matrix games.
inline EnsemblePair initial_ensembles(const Game& g, const DynamicsConfig& cfg) {
  if (g.kind() == GameKind::matrix) {
    const Matrix& A = g.matrix_params().A;
    return {WeightedEnsemble::uniform_weights(g.space_x(), Game::atom_positions(A.rows())),
            WeightedEnsemble::uniform_weights(g.space_y(), Game::atom_positions(A.cols()))};
  }
  return {init_uniform(g.space_x(), cfg.n, cfg.seed, stream::kInitX),
          init_uniform(g.space_y(), cfg.n, cfg.seed, stream::kInitY)};
}

// Runs cfg.iters steps of cfg.algo from the given ensembles.
inline RunRecord run_from(const Game& g, const DynamicsConfig& cfg, EnsemblePair init, const MetricsHook& hook) {
  cfg.validate();
  using Clock = std::chrono::steady_clock;
  const auto t0 = Clock::now();
  NoiseStreams noise = NoiseStreams::make(cfg.seed, init.x.size(), init.y.size());
  AveragedMeasure avg_x(cfg.averaging, cfg.snapshot_stride), avg_y(cfg.averaging, cfg.snapshot_stride);
  EnsemblePair state = std::move(init);
  avg_x.update(state.x, 0);
  avg_y.update(state.y, 0);

  RunRecord rec{cfg, {}, state.x, state.y, state.x, state.y};
  const bool averaged = scores_time_average(cfg.algo);
  auto checkpoint = [&](std::int64_t iter, bool final) {
    Checkpoint c;
    c.iter = iter;
    if (hook) {
      const WeightedEnsemble mx = averaged ? avg_x.measure(state.x) : state.x;
      const WeightedEnsemble my = averaged ? avg_y.measure(state.y) : state.y;
      const NiValue v = hook(mx, my, iter, final);
      c.ni_estimate = v.estimate;
      c.ni_exact = v.exact;
    }
    c.weight_entropy_x = state.x.weight_entropy();
    c.weight_entropy_y = state.y.weight_entropy();
    c.wall_ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
    rec.checkpoints.push_back(c);
  };

  checkpoint(0, cfg.iters == 0);
  for (std::int64_t t = 1; t <= cfg.iters; ++t) {
    try {
      switch (cfg.algo) {
        case Algorithm::iwgf: state = iwgf_step(state.x, state.y, g, cfg); break;
        case Algorithm::lda: state = lda_step(state.x, state.y, g, cfg, noise); break;
        case Algorithm::wfr: state = wfr_step(state.x, state.y, g, cfg); break;
        case Algorithm::md: state = md_step(state.x, state.y, g, cfg); break;
      }
    } catch (const NumericalAbort& e) {
      throw e.at_iteration(t);
    }
    avg_x.update(state.x, t);
    avg_y.update(state.y, t);
    const bool final = t == cfg.iters;
    if (final || (cfg.ni_eval_every > 0 && t % cfg.ni_eval_every == 0)) checkpoint(t, final);
  }
  rec.final_x = state.x;
  rec.final_y = state.y;
  rec.averaged_x = avg_x.measure(state.x);
  rec.averaged_y = avg_y.measure(state.y);
  return rec;
}

inline RunRecord run(const Game& g, const DynamicsConfig& cfg, const MetricsHook& hook) {
  cfg.validate();
  return run_from(g, cfg, initial_ensembles(g, cfg), hook);
}

}  // namespace mne
