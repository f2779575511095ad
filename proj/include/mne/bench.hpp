#pragma once

// Experiment plans: grids of (algorithm, dimension, particle count, seed)
// cells, each a full dynamics run scored with the NI estimator.
//
// Outputs in plan.output_dir:
//   sweep_long.csv   algo,dim,n,seed,iter,ni,wall_ms   (one row per checkpoint)
//   sweep_agg.csv    algo,dim,n,mean_ni,std_ni,count   (final checkpoints)
//   summary.json     plan echo, per-cell status, aggregates
//   cells/<id>.csv   per-cell rows; <id> hashes the cell's full config, and an
//                    existing file is reused instead of recomputing the cell.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "mne/dynamics.hpp"
#include "mne/metrics.hpp"
#include "mne/record_io.hpp"
#include "mne/serialization.hpp"

namespace mne {

struct ExperimentPlan {
  std::string name = "plan";
  // Game template; "dim" is set per cell for sphere games and "seed" is set
  // to the cell seed unless the template pins it.
  Json game = Json{{"kind", "bilinear"}};
  std::vector<int> dims{3};
  std::vector<Algorithm> algos{Algorithm::wfr};
  std::vector<Index> n_list{50};
  std::int64_t iters = 1000;
  std::vector<std::uint64_t> seeds{0};
  DynamicsConfig base;
  // Per-algorithm config patches, e.g. {"lda": {"eta": 0.01, "beta": 50}}.
  Json overrides = Json::object();
  NiEstimatorConfig checkpoint_estimator{50, 200, 0.5, 0};
  NiEstimatorConfig final_estimator{};
  // For 1-D box games: restrict the uniform initialization to [lo, hi].
  std::optional<std::pair<double, double>> init_interval;
  std::string output_dir;
  int jobs = 1;

  void validate() const {
    if (dims.empty() || algos.empty() || n_list.empty() || seeds.empty())
      throw std::invalid_argument("plan '" + name + "': dims, algos, n and seeds must be nonempty");
    if (iters < 0) throw std::invalid_argument("plan '" + name + "': iters must be >= 0");
    if (jobs < 1) throw std::invalid_argument("plan '" + name + "': jobs must be >= 1");
  }
};

struct SweepRow {
  Algorithm algo = Algorithm::wfr;
  int dim = 0;
  Index n = 0;
  std::uint64_t seed = 0;
  std::int64_t iter = 0;
  double ni = 0.0;
  double wall_ms = 0.0;
  std::optional<double> ni_exact;
};

struct AggregateRow {
  Algorithm algo = Algorithm::wfr;
  int dim = 0;
  Index n = 0;
  double mean_ni = 0.0;
  double std_ni = 0.0;
  int count = 0;
};

struct CellStatus {
  Algorithm algo = Algorithm::wfr;
  int dim = 0;
  Index n = 0;
  std::uint64_t seed = 0;
  std::string run_id;
  bool ok = false;
  bool reused = false;
  std::string error;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::vector<AggregateRow> aggregates;
  std::vector<CellStatus> cells;

  // Final-checkpoint rows only.
  std::vector<SweepRow> final_rows() const {
    std::vector<SweepRow> out;
    for (std::size_t k = 0; k < rows.size(); ++k)
      if (k + 1 == rows.size() || !same_cell(rows[k], rows[k + 1])) out.push_back(rows[k]);
    return out;
  }

  static bool same_cell(const SweepRow& a, const SweepRow& b) {
    return a.algo == b.algo && a.dim == b.dim && a.n == b.n && a.seed == b.seed && b.iter > a.iter;
  }
};

inline Json plan_to_json(const ExperimentPlan& p) {
  Json algos = Json::array();
  for (Algorithm a : p.algos) algos.push_back(to_string(a));
  Json j{{"name", p.name},
         {"game", p.game},
         {"dims", p.dims},
         {"algos", algos},
         {"n", p.n_list},
         {"iters", p.iters},
         {"seeds", p.seeds},
         {"dynamics", to_json(p.base)},
         {"overrides", p.overrides},
         {"checkpoint_estimator", to_json(p.checkpoint_estimator)},
         {"final_estimator", to_json(p.final_estimator)},
         {"output", p.output_dir},
         {"jobs", p.jobs}};
  if (p.init_interval) j["init_interval"] = {p.init_interval->first, p.init_interval->second};
  return j;
}

// Plan JSON: keys as written by plan_to_json. "repeats": k is shorthand for
// seeds 0..k-1; dynamics keys (eta, eta_w, beta, ni_eval_every, ...) may also
// appear at top level.
inline ExperimentPlan plan_from_json(const Json& j) {
  ExperimentPlan p;
  p.name = j.value("name", p.name);
  if (j.contains("game")) p.game = j.at("game");
  if (j.contains("dims")) p.dims = j.at("dims").get<std::vector<int>>();
  if (j.contains("algos")) {
    p.algos.clear();
    for (const auto& a : j.at("algos")) p.algos.push_back(parse_algorithm(a.get<std::string>()));
  }
  if (j.contains("n")) p.n_list = j.at("n").get<std::vector<Index>>();
  p.iters = j.value("iters", p.iters);
  if (j.contains("seeds")) {
    p.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  } else if (j.contains("repeats")) {
    const int k = j.at("repeats").get<int>();
    if (k < 1) throw std::invalid_argument("plan: repeats must be >= 1");
    p.seeds.clear();
    for (int s = 0; s < k; ++s) p.seeds.push_back(static_cast<std::uint64_t>(s));
  }
  Json dynamics_keys = j;
  for (const char* k : {"name", "game", "dims", "algos", "n", "iters", "seeds", "repeats", "dynamics", "overrides",
                        "checkpoint_estimator", "final_estimator", "init_interval", "output", "jobs"})
    dynamics_keys.erase(k);
  update_from_json(p.base, dynamics_keys);
  if (j.contains("dynamics")) update_from_json(p.base, j.at("dynamics"));
  if (j.contains("overrides")) p.overrides = j.at("overrides");
  if (j.contains("checkpoint_estimator")) update_from_json(p.checkpoint_estimator, j.at("checkpoint_estimator"));
  if (j.contains("final_estimator")) update_from_json(p.final_estimator, j.at("final_estimator"));
  if (j.contains("init_interval"))
    p.init_interval = std::pair{j.at("init_interval").at(0).get<double>(), j.at("init_interval").at(1).get<double>()};
  p.output_dir = j.value("output", p.output_dir);
  p.jobs = j.value("jobs", p.jobs);
  p.validate();
  return p;
}

namespace detail {

inline std::string fnv1a_hex(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream out;
  out << std::hex;
  out.width(16);
  out.fill('0');
  out << h;
  return out.str();
}

inline bool game_has_dim(const std::string& kind) {
  return kind == "poly_a" || kind == "poly_b" || kind == "bilinear";
}

struct CellSpec {
  Algorithm algo;
  int dim;
  Index n;
  std::uint64_t seed;
  Json game_json;
  DynamicsConfig cfg;
  std::string run_id;
};

inline CellSpec make_cell(const ExperimentPlan& p, Algorithm algo, int dim, Index n, std::uint64_t seed) {
  CellSpec c{algo, dim, n, seed, p.game, p.base, {}};
  const std::string kind = p.game.at("kind").get<std::string>();
  if (game_has_dim(kind)) c.game_json["dim"] = dim;
  if ((kind == "poly_a" || kind == "poly_b") && !p.game.contains("seed")) c.game_json["seed"] = seed;
  c.cfg.algo = algo;
  c.cfg.n = n;
  c.cfg.seed = seed;
  c.cfg.iters = p.iters;
  if (p.overrides.contains(to_string(algo))) update_from_json(c.cfg, p.overrides.at(to_string(algo)));
  c.cfg.algo = algo;
  Json id{{"game", c.game_json},
          {"dynamics", to_json(c.cfg)},
          {"checkpoint_estimator", to_json(p.checkpoint_estimator)},
          {"final_estimator", to_json(p.final_estimator)}};
  if (p.init_interval) id["init_interval"] = {p.init_interval->first, p.init_interval->second};
  c.run_id = std::string(to_string(algo)) + "_d" + std::to_string(dim) + "_n" + std::to_string(n) + "_s" +
             std::to_string(seed) + "_" + fnv1a_hex(id.dump());
  return c;
}

inline void write_cell_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << "iter,ni,wall_ms,ni_exact\n";
  const auto old = out.precision(17);
  for (const SweepRow& r : rows) {
    out << r.iter << ',' << r.ni << ',' << r.wall_ms << ',';
    if (r.ni_exact) out << *r.ni_exact;
    out << '\n';
  }
  out.precision(old);
}

inline std::vector<SweepRow> read_cell_csv(std::istream& in, const CellSpec& c) {
  std::vector<SweepRow> rows;
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string iter, ni, wall, exact;
    std::getline(ss, iter, ',');
    std::getline(ss, ni, ',');
    std::getline(ss, wall, ',');
    std::getline(ss, exact, ',');
    SweepRow r{c.algo, c.dim, c.n, c.seed, std::stoll(iter), std::stod(ni), std::stod(wall), std::nullopt};
    if (!exact.empty()) r.ni_exact = std::stod(exact);
    rows.push_back(r);
  }
  return rows;
}

}  // namespace detail

// Ensembles sampled uniformly in [lo, hi] on a 1-D box game.
inline EnsemblePair init_in_interval(const Game& g, const DynamicsConfig& cfg, double lo, double hi) {
  for (const Manifold* m : {&g.space_x(), &g.space_y()})
    if (m->kind() != ManifoldKind::box || m->dim() != 1)
      throw std::invalid_argument("init_interval needs a 1-D box game");
  const Manifold line = Manifold::box(1, lo, hi);
  const WeightedEnsemble x = init_uniform(line, cfg.n, cfg.seed, stream::kInitX);
  const WeightedEnsemble y = init_uniform(line, cfg.n, cfg.seed, stream::kInitY);
  return {WeightedEnsemble(g.space_x(), x.positions(), x.weights()),
          WeightedEnsemble(g.space_y(), y.positions(), y.weights())};
}

// Standard NI hook: cheap estimator at intermediate checkpoints, full one at
// the end, exact value where a closed form exists.
inline MetricsHook make_ni_hook(const Game& g, NiEstimatorConfig during, NiEstimatorConfig final_cfg,
                                std::uint64_t seed) {
  during.seed = seed;
  final_cfg.seed = seed;
  return [&g, during, final_cfg](const WeightedEnsemble& mx, const WeightedEnsemble& my, std::int64_t,
                                 bool final) {
    NiValue v;
    v.estimate = ni_estimate(mx, my, g, final ? final_cfg : during).estimate;
    if (g.kind() == GameKind::bilinear) v.exact = ni_exact_bilinear(mx, my);
    if (g.kind() == GameKind::matrix) v.exact = ni_exact_finite(g, mx, my);
    return v;
  };
}

inline std::vector<AggregateRow> aggregate(const std::vector<SweepRow>& final_rows) {
  std::map<std::tuple<int, int, Index>, std::vector<double>> groups;
  std::vector<std::tuple<int, int, Index>> order;
  for (const SweepRow& r : final_rows) {
    auto key = std::tuple{static_cast<int>(r.algo), r.dim, r.n};
    if (!groups.contains(key)) order.push_back(key);
    groups[key].push_back(r.ni);
  }
  std::vector<AggregateRow> out;
  for (const auto& key : order) {
    const auto& v = groups[key];
    AggregateRow a;
    a.algo = static_cast<Algorithm>(std::get<0>(key));
    a.dim = std::get<1>(key);
    a.n = std::get<2>(key);
    a.count = static_cast<int>(v.size());
    double s = 0.0;
    for (double x : v) s += x;
    a.mean_ni = s / a.count;
    double ss = 0.0;
    for (double x : v) ss += (x - a.mean_ni) * (x - a.mean_ni);
    a.std_ni = a.count > 1 ? std::sqrt(ss / (a.count - 1)) : 0.0;
    out.push_back(a);
  }
  return out;
}

inline void write_sweep_long_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << "algo,dim,n,seed,iter,ni,wall_ms\n";
  const auto old = out.precision(17);
  for (const SweepRow& r : rows)
    out << to_string(r.algo) << ',' << r.dim << ',' << r.n << ',' << r.seed << ',' << r.iter << ',' << r.ni << ','
        << r.wall_ms << '\n';
  out.precision(old);
}

inline void write_sweep_agg_csv(std::ostream& out, const std::vector<AggregateRow>& rows) {
  out << "algo,dim,n,mean_ni,std_ni,count\n";
  const auto old = out.precision(17);
  for (const AggregateRow& a : rows)
    out << to_string(a.algo) << ',' << a.dim << ',' << a.n << ',' << a.mean_ni << ',' << a.std_ni << ',' << a.count
        << '\n';
  out.precision(old);
}

inline SweepResult run_plan(const ExperimentPlan& plan) {
  plan.validate();
  std::vector<detail::CellSpec> cells;
  for (Algorithm a : plan.algos)
    for (int d : plan.dims)
      for (Index n : plan.n_list)
        for (std::uint64_t s : plan.seeds) cells.push_back(detail::make_cell(plan, a, d, n, s));

  namespace fs = std::filesystem;
  const bool persist = !plan.output_dir.empty();
  const fs::path out_dir(plan.output_dir);
  if (persist) fs::create_directories(out_dir / "cells");

  std::vector<std::vector<SweepRow>> cell_rows(cells.size());
  std::vector<CellStatus> status(cells.size());
  std::atomic<std::size_t> next{0};

  auto work = [&] {
    for (std::size_t k = next++; k < cells.size(); k = next++) {
      const auto& c = cells[k];
      CellStatus& st = status[k];
      st = {c.algo, c.dim, c.n, c.seed, c.run_id, false, false, {}};
      const fs::path cell_file = out_dir / "cells" / (c.run_id + ".csv");
      try {
        if (persist && fs::exists(cell_file)) {
          std::ifstream in(cell_file);
          cell_rows[k] = detail::read_cell_csv(in, c);
          st.ok = !cell_rows[k].empty();
          st.reused = true;
          if (st.ok) continue;
        }
        const Game g = game_from_json(c.game_json);
        const MetricsHook hook = make_ni_hook(g, plan.checkpoint_estimator, plan.final_estimator, c.seed);
        const EnsemblePair init = plan.init_interval
                                      ? init_in_interval(g, c.cfg, plan.init_interval->first, plan.init_interval->second)
                                      : initial_ensembles(g, c.cfg);
        const RunRecord rec = run_from(g, c.cfg, init, hook);
        std::vector<SweepRow> rows;
        for (const Checkpoint& cp : rec.checkpoints)
          rows.push_back({c.algo, c.dim, c.n, c.seed, cp.iter, cp.ni_estimate, cp.wall_ms, cp.ni_exact});
        if (persist) {
          std::ofstream out(cell_file);
          detail::write_cell_csv(out, rows);
        }
        cell_rows[k] = std::move(rows);
        st.ok = true;
      } catch (const std::exception& e) {
        st.ok = false;
        st.error = e.what();
      }
    }
  };
  const int workers = std::max(1, std::min<int>(plan.jobs, static_cast<int>(cells.size())));
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
  }

  SweepResult result;
  result.cells = status;
  bool any_ok = false;
  for (std::size_t k = 0; k < cells.size(); ++k) {
    if (!status[k].ok) continue;
    any_ok = true;
    result.rows.insert(result.rows.end(), cell_rows[k].begin(), cell_rows[k].end());
  }
  if (!any_ok) {
    std::string why = status.empty() ? "no cells" : status.front().error;
    throw std::runtime_error("plan '" + plan.name + "': every cell failed (first error: " + why + ")");
  }
  result.aggregates = aggregate(result.final_rows());

  if (persist) {
    {
      std::ofstream out(out_dir / "sweep_long.csv");
      write_sweep_long_csv(out, result.rows);
    }
    {
      std::ofstream out(out_dir / "sweep_agg.csv");
      write_sweep_agg_csv(out, result.aggregates);
    }
    Json cells_json = Json::array();
    for (const CellStatus& s : status) {
      Json c{{"algo", to_string(s.algo)}, {"dim", s.dim}, {"n", s.n}, {"seed", s.seed}, {"run_id", s.run_id},
             {"ok", s.ok}};
      if (!s.ok) c["error"] = s.error;
      cells_json.push_back(c);
    }
    Json agg = Json::array();
    for (const AggregateRow& a : result.aggregates)
      agg.push_back({{"algo", to_string(a.algo)}, {"dim", a.dim}, {"n", a.n}, {"mean_ni", a.mean_ni},
                     {"std_ni", a.std_ni}, {"count", a.count}});
    write_text_file(out_dir / "summary.json",
                    Json{{"plan", plan_to_json(plan)}, {"cells", cells_json}, {"aggregates", agg}}.dump(2) + "\n");
  }
  return result;
}

struct MeanFieldReport {
  std::vector<Index> n_list;
  // curves[k][c] = mean NI over seeds at checkpoint c for n_list[k].
  std::vector<std::vector<double>> curves;
  std::vector<std::int64_t> iters;
  // |NI(n_first) - NI(n_last)| per seed at the final checkpoint.
  std::vector<double> final_gaps;
  // Per-seed final NI for every n.
  std::vector<std::vector<double>> final_ni;
  double mean_final_gap = 0.0;
  double max_gap = 0.0;  // over seeds and checkpoints
};

// Runs the same plan at each particle count with matched seeds and compares
// the NI trajectories of the first and last entries of n_list.
inline MeanFieldReport meanfield_check(ExperimentPlan plan, Algorithm algo, int dim, std::vector<Index> n_list) {
  if (n_list.size() < 2) throw std::invalid_argument("meanfield_check: needs at least two particle counts");
  if (!std::is_sorted(n_list.begin(), n_list.end()))
    throw std::invalid_argument("meanfield_check: n_list must be ascending");
  plan.algos = {algo};
  plan.dims = {dim};
  MeanFieldReport rep;
  rep.n_list = n_list;
  // Per n: rows grouped by seed.
  std::vector<std::vector<std::vector<SweepRow>>> by_n;
  for (Index n : n_list) {
    plan.n_list = {n};
    const SweepResult r = run_plan(plan);
    std::vector<std::vector<SweepRow>> per_seed;
    for (std::uint64_t s : plan.seeds) {
      std::vector<SweepRow> rows;
      for (const SweepRow& row : r.rows)
        if (row.seed == s) rows.push_back(row);
      if (rows.empty()) throw std::runtime_error("meanfield_check: seed " + std::to_string(s) + " failed");
      per_seed.push_back(std::move(rows));
    }
    by_n.push_back(std::move(per_seed));
  }
  const std::size_t checkpoints = by_n.front().front().size();
  for (const auto& r : by_n.front().front()) rep.iters.push_back(r.iter);
  for (const auto& per_seed : by_n) {
    std::vector<double> curve(checkpoints, 0.0);
    std::vector<double> finals;
    for (const auto& rows : per_seed) {
      for (std::size_t c = 0; c < checkpoints; ++c) curve[c] += rows[c].ni / static_cast<double>(per_seed.size());
      finals.push_back(rows.back().ni);
    }
    rep.curves.push_back(std::move(curve));
    rep.final_ni.push_back(std::move(finals));
  }
  const auto& first = by_n.front();
  const auto& last = by_n.back();
  for (std::size_t s = 0; s < first.size(); ++s) {
    for (std::size_t c = 0; c < checkpoints; ++c)
      rep.max_gap = std::max(rep.max_gap, std::abs(first[s][c].ni - last[s][c].ni));
    rep.final_gaps.push_back(std::abs(first[s].back().ni - last[s].back().ni));
  }
  for (double g : rep.final_gaps) rep.mean_final_gap += g / static_cast<double>(rep.final_gaps.size());
  return rep;
}

}  // namespace mne
