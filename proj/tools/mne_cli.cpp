// mne_cli: single runs, sweeps, NI evaluation and the exact oracles.
//
// Exit codes: 0 success, 1 usage or input error, 2 numerical abort,
// 3 a gradcheck that exceeded its tolerance.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "mne/bench.hpp"
#include "mne/dynamics.hpp"
#include "mne/metrics.hpp"
#include "mne/record_io.hpp"
#include "mne/serialization.hpp"

namespace {

using namespace mne;

constexpr int kExitUsage = 1;
constexpr int kExitNumerical = 2;
constexpr int kExitCheckFailed = 3;

struct GameFlags {
  std::string spec = "bilinear";
  int dim = 3;
  std::optional<std::uint64_t> game_seed;

  void add(CLI::App* app) {
    app->add_option("--game", spec, "game name, JSON, .json file or .csv payoff matrix")->capture_default_str();
    app->add_option("--dim", dim, "ambient dimension for sphere games")->check(CLI::Range(2, 100000))->capture_default_str();
    app->add_option("--game-seed", game_seed, "seed for polynomial game coefficients (default: --seed)");
  }

  Game make(std::uint64_t fallback_seed) const { return game_from_spec(spec, dim, game_seed.value_or(fallback_seed)); }
};

struct RunFlags {
  GameFlags game;
  std::string config_path;
  std::optional<std::string> algo;
  std::optional<Index> n;
  std::optional<std::int64_t> iters;
  std::optional<double> eta, eta_w, beta;
  std::optional<std::uint64_t> seed;
  std::optional<std::int64_t> ni_every;
  std::optional<std::string> averaging;
  std::optional<int> starts, ascent_iters;
  std::string out;
};

void print_json(const Json& j) { std::cout << j.dump(2) << '\n'; }

int cmd_run(const RunFlags& f) {
  Json file_cfg = f.config_path.empty() ? Json::object() : load_json_file(f.config_path);
  DynamicsConfig cfg;
  update_from_json(cfg, file_cfg);
  NiEstimatorConfig during{50, 200, 0.5, 0};
  NiEstimatorConfig final_est;
  if (file_cfg.contains("checkpoint_estimator")) update_from_json(during, file_cfg.at("checkpoint_estimator"));
  if (file_cfg.contains("final_estimator")) update_from_json(final_est, file_cfg.at("final_estimator"));
  if (f.algo) cfg.algo = parse_algorithm(*f.algo);
  if (f.n) cfg.n = *f.n;
  if (f.iters) cfg.iters = *f.iters;
  if (f.eta) cfg.eta = *f.eta;
  if (f.eta_w) cfg.eta_w = *f.eta_w;
  if (f.beta) cfg.beta = *f.beta;
  if (f.seed) cfg.seed = *f.seed;
  if (f.ni_every) cfg.ni_eval_every = *f.ni_every;
  if (f.averaging) update_from_json(cfg, Json{{"averaging", *f.averaging}});
  if (f.starts) final_est.starts = *f.starts;
  if (f.ascent_iters) final_est.ascent_iters = *f.ascent_iters;
  cfg.validate();

  GameFlags gf = f.game;
  const bool game_from_file = file_cfg.contains("game") && f.game.spec == "bilinear";
  const Game g = game_from_file ? game_from_json(file_cfg.at("game")) : gf.make(cfg.seed);

  const MetricsHook inner = make_ni_hook(g, during, final_est, cfg.seed);
  const MetricsHook hook = [&](const WeightedEnsemble& mx, const WeightedEnsemble& my, std::int64_t iter,
                               bool final) {
    const NiValue v = inner(mx, my, iter, final);
    std::cerr << "iter=" << iter << " ni=" << v.estimate;
    if (v.exact) std::cerr << " ni_exact=" << *v.exact;
    std::cerr << '\n';
    return v;
  };
  const RunRecord rec = run(g, cfg, hook);

  std::string out = f.out;
  if (out.empty()) {
    const Json id{{"game", to_json(g)}, {"dynamics", to_json(cfg)}};
    out = "runs/" + std::string(to_string(cfg.algo)) + "_" + to_string(g.kind()) + "_s" + std::to_string(cfg.seed) +
          "_" + detail::fnv1a_hex(id.dump()).substr(0, 8);
  }
  save_run_record(out, rec, g,
                  Json{{"checkpoint_estimator", to_json(during)}, {"final_estimator", to_json(final_est)}});
  std::cout << out << '\n';
  return 0;
}

int cmd_sweep(const std::string& plan_path, std::optional<int> jobs, const std::string& out) {
  ExperimentPlan plan = plan_from_json(load_json_file(plan_path));
  if (jobs) plan.jobs = *jobs;
  if (!out.empty()) plan.output_dir = out;
  if (plan.output_dir.empty()) plan.output_dir = "sweeps/" + plan.name;
  const SweepResult r = run_plan(plan);
  for (const CellStatus& c : r.cells)
    if (!c.ok) std::cerr << "cell " << c.run_id << " failed: " << c.error << '\n';
  write_sweep_agg_csv(std::cout, r.aggregates);
  return 0;
}

int cmd_ni(const GameFlags& gf, const std::string& xs, const std::string& ys, NiEstimatorConfig est, bool per_start) {
  const Game g = gf.make(est.seed);
  auto load = [](const std::string& path, const Manifold& m, const char* flag) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument(std::string(flag) + ": cannot open '" + path + "'");
    return read_ensemble_csv(in, m);
  };
  const WeightedEnsemble ex = load(xs, g.space_x(), "--x");
  const WeightedEnsemble ey = load(ys, g.space_y(), "--y");
  est.keep_per_start = per_start;
  const NiResult r = ni_estimate(ex, ey, g, est);
  Json j{{"estimate", r.estimate}, {"sup", r.sup_value}, {"inf", r.inf_value}, {"wall_ms", r.wall_ms}};
  if (g.kind() == GameKind::bilinear) j["exact"] = ni_exact_bilinear(ex, ey);
  if (g.kind() == GameKind::matrix) j["exact"] = ni_exact_finite(g, ex, ey);
  if (per_start) {
    j["per_start_sup"] = r.per_start_sup;
    j["per_start_inf"] = r.per_start_inf;
  }
  print_json(j);
  return 0;
}

int cmd_gibbs(const GameFlags& gf, double beta, int bins, double damping, int max_iters, double tol,
              const std::string& out) {
  const Game g = gf.make(0);
  const GibbsGrid grid = gibbs_fixed_point(g, beta, bins, damping, max_iters, tol);
  std::ofstream file;
  if (!out.empty()) {
    file.open(out);
    if (!file) throw std::invalid_argument("--out: cannot write '" + out + "'");
  }
  std::ostream& os = out.empty() ? std::cout : file;
  os.precision(17);
  os << "bin_center,rho_x,rho_y\n";
  for (Index b = 0; b < grid.bin_centers.size(); ++b)
    os << grid.bin_centers[b] << ',' << grid.rho_x[b] << ',' << grid.rho_y[b] << '\n';
  std::cerr << "iterations=" << grid.iterations << " residual=" << grid.residual
            << (grid.residual <= tol ? "" : " (not converged)") << '\n';
  return 0;
}

int cmd_oracle(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("--matrix: cannot open '" + path + "'");
  const Matrix A = read_matrix_csv(in);
  const MatrixGameSolution s = matrix_game_solve(A);
  auto vec = [](const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  print_json({{"value", s.value}, {"x", vec(s.x)}, {"y", vec(s.y)}, {"ni", ni_exact_finite(s.x, s.y, A)}});
  return 0;
}

int cmd_gradcheck(const GameFlags& gf, int points, std::uint64_t seed, double tol) {
  const Game g = gf.make(seed);
  if (g.kind() == GameKind::matrix) throw std::invalid_argument("--game: matrix games have no gradients to check");
  const GradientCheckResult r = gradient_check(g, points, seed);
  print_json({{"game", to_string(g.kind())},
              {"points", points},
              {"max_rel_error_x", r.max_rel_error_x},
              {"max_rel_error_y", r.max_rel_error_y},
              {"tolerance", tol},
              {"pass", r.max_rel_error() <= tol}});
  return r.max_rel_error() <= tol ? 0 : kExitCheckFailed;
}

int cmd_beta(double eps, double kl, double lip, const std::string& manifold, double period) {
  const Manifold m = manifold_from_name(manifold, period);
  const double delta = eps / (2.0 * lip);
  const double beta = required_beta(eps, kl, lip, m);
  std::printf("%.10g\n", beta);
  std::fprintf(stderr, "delta=%.10g volume_bound=%.10g\n", delta, m.ball_volume_fraction_lower_bound(delta));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mixed Nash equilibria of continuous zero-sum games via particle dynamics"};
  app.require_subcommand(1, 1);

  RunFlags rf;
  auto* run = app.add_subcommand("run", "run one dynamics and write runs/<id>");
  rf.game.add(run);
  run->add_option("--config", rf.config_path, "JSON config; flags override its values")->check(CLI::ExistingFile);
  run->add_option("--algo", rf.algo, "iwgf | lda | wfr | md")->check(CLI::IsMember({"iwgf", "lda", "wfr", "md"}));
  run->add_option("--n", rf.n, "particles per player")->check(CLI::PositiveNumber);
  run->add_option("--iters", rf.iters, "number of steps T")->check(CLI::NonNegativeNumber);
  run->add_option("--eta", rf.eta, "position step")->check(CLI::NonNegativeNumber);
  run->add_option("--eta-w", rf.eta_w, "weight step")->check(CLI::NonNegativeNumber);
  run->add_option("--beta", rf.beta, "inverse temperature (lda)")->check(CLI::PositiveNumber);
  run->add_option("--seed", rf.seed, "master seed");
  run->add_option("--ni-every", rf.ni_every, "checkpoint spacing (0: first and last only)")
      ->check(CLI::NonNegativeNumber);
  run->add_option("--averaging", rf.averaging, "weights_only | snapshot")
      ->check(CLI::IsMember({"weights_only", "snapshot"}));
  run->add_option("--starts", rf.starts, "NI starts at the final checkpoint")->check(CLI::PositiveNumber);
  run->add_option("--ascent-iters", rf.ascent_iters, "NI ascent iterations at the final checkpoint")
      ->check(CLI::NonNegativeNumber);
  run->add_option("--out", rf.out, "output directory (default runs/<id>)");

  std::string plan_path, sweep_out;
  std::optional<int> jobs;
  auto* sweep = app.add_subcommand("sweep", "run an experiment plan");
  sweep->add_option("--plan", plan_path, "plan JSON")->required()->check(CLI::ExistingFile);
  sweep->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
  sweep->add_option("--out", sweep_out, "output directory (overrides the plan)");

  GameFlags ni_game;
  std::string ni_x, ni_y;
  NiEstimatorConfig ni_cfg;
  bool per_start = false;
  auto* ni = app.add_subcommand("ni", "estimate NI of two ensemble CSVs");
  ni_game.add(ni);
  ni->add_option("--x", ni_x, "x ensemble CSV")->required();
  ni->add_option("--y", ni_y, "y ensemble CSV")->required();
  ni->add_option("--starts", ni_cfg.starts, "ascent starts")->check(CLI::PositiveNumber)->capture_default_str();
  ni->add_option("--ascent-iters", ni_cfg.ascent_iters, "iterations per start")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  ni->add_option("--step", ni_cfg.step, "base ascent step")->check(CLI::PositiveNumber)->capture_default_str();
  ni->add_option("--warm-starts", ni_cfg.warm_starts, "extra starts from each player's own best atoms")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  ni->add_flag("--step-decay", ni_cfg.step_decay, "divide the ascent step by sqrt(t)");
  ni->add_option("--seed", ni_cfg.seed, "estimator seed")->capture_default_str();
  ni->add_flag("--per-start", per_start, "include every start's final value");

  GameFlags gibbs_game;
  gibbs_game.spec = "torus_cos";
  double gibbs_beta = 5.0, damping = 0.5, gibbs_tol = 1e-10;
  int bins = 64, max_iters = 5000;
  std::string gibbs_out;
  auto* gibbs = app.add_subcommand("gibbs", "grid fixed point of the entropic best-response map");
  gibbs_game.add(gibbs);
  gibbs->add_option("--beta", gibbs_beta, "inverse temperature")->check(CLI::NonNegativeNumber)->capture_default_str();
  gibbs->add_option("--bins", bins, "bins per axis")->check(CLI::Range(8, 1 << 20))->capture_default_str();
  gibbs->add_option("--damping", damping, "damping in (0, 1]")->check(CLI::Range(0.0, 1.0))->capture_default_str();
  gibbs->add_option("--max-iters", max_iters, "iteration cap")->check(CLI::PositiveNumber)->capture_default_str();
  gibbs->add_option("--tol", gibbs_tol, "L1 residual tolerance")->check(CLI::PositiveNumber)->capture_default_str();
  gibbs->add_option("--out", gibbs_out, "CSV output (default stdout)");

  std::string matrix_path;
  auto* oracle = app.add_subcommand("oracle", "exact equilibrium of a payoff matrix (up to 8x8)");
  oracle->add_option("--matrix", matrix_path, "payoff CSV; rows are the minimizer's atoms")->required();

  GameFlags gc_game;
  int gc_points = 100;
  std::uint64_t gc_seed = 0;
  double gc_tol = 1e-5;
  auto* gradcheck = app.add_subcommand("gradcheck", "analytic vs central-difference gradients");
  gc_game.add(gradcheck);
  gradcheck->add_option("--points", gc_points, "random points")->check(CLI::PositiveNumber)->capture_default_str();
  gradcheck->add_option("--seed", gc_seed, "sampling seed")->capture_default_str();
  gradcheck->add_option("--tol", gc_tol, "relative error tolerance")->check(CLI::PositiveNumber)->capture_default_str();

  double eps = 0.0, kl = 0.0, lip = 0.0, period = 1.0;
  std::string manifold = "torus1";
  auto* beta = app.add_subcommand("beta", "inverse temperature sufficient for an epsilon-equilibrium");
  beta->add_option("--epsilon", eps, "target accuracy")->required()->check(CLI::PositiveNumber);
  beta->add_option("--kl", kl, "range length of the loss")->required()->check(CLI::PositiveNumber);
  beta->add_option("--lip", lip, "Lipschitz constant of the loss")->required()->check(CLI::PositiveNumber);
  beta->add_option("--manifold", manifold, "torusD | sphereD | JSON")->capture_default_str();
  beta->add_option("--period", period, "torus period")->check(CLI::PositiveNumber)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*run) return cmd_run(rf);
    if (*sweep) return cmd_sweep(plan_path, jobs, sweep_out);
    if (*ni) return cmd_ni(ni_game, ni_x, ni_y, ni_cfg, per_start);
    if (*gibbs) return cmd_gibbs(gibbs_game, gibbs_beta, bins, damping, max_iters, gibbs_tol, gibbs_out);
    if (*oracle) return cmd_oracle(matrix_path);
    if (*gradcheck) return cmd_gradcheck(gc_game, gc_points, gc_seed, gc_tol);
    if (*beta) return cmd_beta(eps, kl, lip, manifold, period);
  } catch (const NumericalAbort& e) {
    std::cerr << "numerical abort: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}
