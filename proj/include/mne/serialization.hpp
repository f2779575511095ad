#pragma once

// JSON forms of manifolds, games and configs.
//
//   manifold: {"kind": "sphere"|"torus"|"box", "dim": int, "period": float?, "bounds": [[lo,hi],...]?}
//   game:     {"kind": "poly_a"|"poly_b", "dim": D, "seed": s}
//             {"kind": "bilinear", "dim": D}
//             {"kind": "doublewell", "halfwidth": h}
//             {"kind": "matrix", "rows": p, "cols": q, "data": [row-major entries]}  (or "A": [[...],...])
//             {"kind": "torus_trig", "coupling": c, "f_cos": a, "f_sin2": b}

#include <fstream>
#include <sstream>
#include <vector>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "mne/dynamics.hpp"
#include "mne/ensemble.hpp"
#include "mne/games.hpp"
#include "mne/manifold.hpp"
#include "mne/metrics.hpp"

namespace mne {

using Json = nlohmann::json;

inline Json to_json(const Manifold& m) {
  Json j{{"kind", to_string(m.kind())}, {"dim", m.dim()}};
  if (m.kind() == ManifoldKind::torus) j["period"] = m.period();
  if (m.kind() == ManifoldKind::box) {
    Json b = Json::array();
    for (const auto& [lo, hi] : m.bounds()) b.push_back({lo, hi});
    j["bounds"] = b;
  }
  return j;
}

inline Manifold manifold_from_json(const Json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "sphere") return Manifold::sphere(j.at("dim").get<int>());
  if (kind == "torus") return Manifold::torus(j.at("dim").get<int>(), j.value("period", 1.0));
  if (kind == "box") {
    Manifold::Bounds b;
    for (const auto& pair : j.at("bounds")) b.emplace_back(pair.at(0).get<double>(), pair.at(1).get<double>());
    if (j.contains("dim") && j.at("dim").get<int>() != static_cast<int>(b.size()))
      throw std::invalid_argument("manifold json: dim does not match the number of bounds");
    return Manifold::box(std::move(b));
  }
  throw std::invalid_argument("manifold json: unknown kind '" + kind + "'");
}

// Short names accepted on the command line: torus1, torusD, sphereD, box1.
inline Manifold manifold_from_name(const std::string& name, double period = 1.0) {
  auto suffix = [&](const std::string& prefix) -> int {
    const std::string rest = name.substr(prefix.size());
    if (rest.empty()) return 1;
    return std::stoi(rest);
  };
  if (name.rfind("torus", 0) == 0) return Manifold::torus(suffix("torus"), period);
  if (name.rfind("sphere", 0) == 0) return Manifold::sphere(suffix("sphere"));
  if (!name.empty() && name.front() == '{') return manifold_from_json(Json::parse(name));
  throw std::invalid_argument("unknown manifold '" + name + "' (expected torusD, sphereD or JSON)");
}

inline Json matrix_to_json(const Matrix& A) {
  Json data = Json::array();
  for (Index r = 0; r < A.rows(); ++r)
    for (Index c = 0; c < A.cols(); ++c) data.push_back(A(r, c));
  return {{"rows", A.rows()}, {"cols", A.cols()}, {"data", data}};
}

inline Matrix matrix_from_json(const Json& j) {
  if (j.contains("A")) {
    const Json& rows = j.at("A");
    if (!rows.is_array() || rows.empty()) throw std::invalid_argument("matrix json: 'A' must be a nonempty array");
    const auto p = static_cast<Index>(rows.size());
    const auto q = static_cast<Index>(rows.at(0).size());
    Matrix A(p, q);
    for (Index r = 0; r < p; ++r) {
      if (static_cast<Index>(rows.at(r).size()) != q) throw std::invalid_argument("matrix json: ragged rows");
      for (Index c = 0; c < q; ++c) A(r, c) = rows.at(r).at(c).get<double>();
    }
    return A;
  }
  const auto p = j.at("rows").get<Index>();
  const auto q = j.at("cols").get<Index>();
  const Json& data = j.at("data");
  if (p < 1 || q < 1 || static_cast<Index>(data.size()) != p * q)
    throw std::invalid_argument("matrix json: data length does not equal rows * cols");
  Matrix A(p, q);
  for (Index r = 0; r < p; ++r)
    for (Index c = 0; c < q; ++c) A(r, c) = data.at(static_cast<std::size_t>(r * q + c)).get<double>();
  return A;
}

inline Json to_json(const Game& g) {
  switch (g.kind()) {
    case GameKind::poly_a:
    case GameKind::poly_b:
      return {{"kind", to_string(g.kind())}, {"dim", g.space_x().dim()}, {"seed", g.poly_params().seed}};
    case GameKind::bilinear: return {{"kind", "bilinear"}, {"dim", g.space_x().dim()}};
    case GameKind::doublewell: return {{"kind", "doublewell"}, {"halfwidth", g.doublewell_params().halfwidth}};
    case GameKind::matrix: {
      Json j = matrix_to_json(g.matrix_params().A);
      j["kind"] = "matrix";
      return j;
    }
    case GameKind::torus_trig: {
      const auto& p = g.torus_trig_params();
      return {{"kind", "torus_trig"}, {"coupling", p.coupling}, {"f_cos", p.f_cos}, {"f_sin2", p.f_sin2}};
    }
  }
  return {};
}

inline Game game_from_json(const Json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "poly_a") return make_poly_game_a(j.at("dim").get<int>(), j.value("seed", std::uint64_t{0}));
  if (kind == "poly_b") return make_poly_game_b(j.at("dim").get<int>(), j.value("seed", std::uint64_t{0}));
  if (kind == "bilinear") return make_bilinear_game(j.at("dim").get<int>());
  if (kind == "doublewell") return make_doublewell_game(j.value("halfwidth", 1.5));
  if (kind == "matrix") return make_matrix_game(matrix_from_json(j));
  if (kind == "torus_trig")
    return make_torus_trig_game({j.value("coupling", 1.0), j.value("f_cos", 0.0), j.value("f_sin2", 0.0)});
  throw std::invalid_argument("game json: unknown kind '" + kind + "'");
}

inline Json load_json_file(const std::string& path);
inline Matrix read_matrix_csv(std::istream& in);

// Game from a command-line spec:
//   poly_a | poly_b | bilinear       (use `dim` and `seed`)
//   doublewell | matching_pennies | rps | torus_cos
//   inline JSON, a .json file, or a .csv payoff matrix
inline Game game_from_spec(const std::string& spec, int dim, std::uint64_t seed) {
  if (spec.empty()) throw std::invalid_argument("--game is empty");
  if (spec.front() == '{') return game_from_json(Json::parse(spec));
  auto ends_with = [&](const char* suffix) {
    const std::string s(suffix);
    return spec.size() >= s.size() && spec.compare(spec.size() - s.size(), s.size(), s) == 0;
  };
  if (ends_with(".json")) return game_from_json(load_json_file(spec));
  if (ends_with(".csv")) {
    std::ifstream in(spec);
    if (!in) throw std::invalid_argument("--game: cannot open '" + spec + "'");
    return make_matrix_game(read_matrix_csv(in));
  }
  if (spec == "poly_a") return make_poly_game_a(dim, seed);
  if (spec == "poly_b") return make_poly_game_b(dim, seed);
  if (spec == "bilinear") return make_bilinear_game(dim);
  if (spec == "doublewell") return make_doublewell_game(1.5);
  if (spec == "matching_pennies") return make_matrix_game(matching_pennies());
  if (spec == "rps") return make_matrix_game(rock_paper_scissors());
  if (spec == "torus_cos") return make_torus_trig_game({1.0, 0.0, 0.0});
  throw std::invalid_argument("--game: unknown game '" + spec + "'");
}

inline Json to_json(const DynamicsConfig& c) {
  return {{"algo", to_string(c.algo)},
          {"eta", c.eta},
          {"eta_w", c.eta_w},
          {"beta", c.beta},
          {"iters", c.iters},
          {"n", c.n},
          {"seed", c.seed},
          {"averaging", to_string(c.averaging)},
          {"snapshot_stride", c.snapshot_stride},
          {"ni_eval_every", c.ni_eval_every},
          {"order", c.order == UpdateOrder::simultaneous ? "simultaneous" : "alternating"},
          {"exact_exp_map", c.exact_exp_map}};
}

// Missing keys keep the values already in `c`.
inline void update_from_json(DynamicsConfig& c, const Json& j) {
  if (j.contains("algo")) c.algo = parse_algorithm(j.at("algo").get<std::string>());
  c.eta = j.value("eta", c.eta);
  c.eta_w = j.value("eta_w", c.eta_w);
  c.beta = j.value("beta", c.beta);
  c.iters = j.value("iters", c.iters);
  c.n = j.value("n", c.n);
  c.seed = j.value("seed", c.seed);
  if (j.contains("averaging")) {
    const auto a = j.at("averaging").get<std::string>();
    if (a == "weights_only") c.averaging = AveragingMode::weights_only;
    else if (a == "snapshot") c.averaging = AveragingMode::snapshot;
    else throw std::invalid_argument("config: unknown averaging mode '" + a + "'");
  }
  c.snapshot_stride = j.value("snapshot_stride", c.snapshot_stride);
  c.ni_eval_every = j.value("ni_eval_every", c.ni_eval_every);
  if (j.contains("order")) {
    const auto o = j.at("order").get<std::string>();
    if (o == "simultaneous") c.order = UpdateOrder::simultaneous;
    else if (o == "alternating") c.order = UpdateOrder::alternating;
    else throw std::invalid_argument("config: unknown update order '" + o + "'");
  }
  c.exact_exp_map = j.value("exact_exp_map", c.exact_exp_map);
}

inline Json to_json(const NiEstimatorConfig& c) {
  return {{"starts", c.starts}, {"ascent_iters", c.ascent_iters}, {"step", c.step}, {"seed", c.seed},
          {"warm_starts", c.warm_starts}, {"step_decay", c.step_decay}};
}

inline void update_from_json(NiEstimatorConfig& c, const Json& j) {
  c.starts = j.value("starts", c.starts);
  c.ascent_iters = j.value("ascent_iters", c.ascent_iters);
  c.step = j.value("step", c.step);
  c.warm_starts = j.value("warm_starts", c.warm_starts);
  c.step_decay = j.value("step_decay", c.step_decay);
  c.seed = j.value("seed", c.seed);
}

// Plain numeric CSV: one matrix row per line, comma or whitespace separated.
// Blank lines and lines starting with '#' are skipped.
inline Matrix read_matrix_csv(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    for (char& c : line)
      if (c == ',' || c == ';') c = ' ';
    std::istringstream ss(line);
    std::vector<double> row;
    std::string tok;
    while (ss >> tok) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(tok, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != tok.size()) throw std::invalid_argument("matrix csv: '" + tok + "' is not a number");
      row.push_back(v);
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw std::invalid_argument("matrix csv: row " + std::to_string(rows.size() + 1) + " has a different length");
    rows.push_back(std::move(row));
  }
  if (rows.empty() || rows.front().empty()) throw std::invalid_argument("matrix csv: no entries");
  Matrix A(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (Index r = 0; r < A.rows(); ++r)
    for (Index c = 0; c < A.cols(); ++c) A(r, c) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
  return A;
}

inline Json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open '" + path + "'");
  return Json::parse(in);
}

}  // namespace mne
