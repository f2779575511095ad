#pragma once

// Persistence of a single run:
//   <dir>/record.csv    iter,ni_estimate,ni_exact,wall_ms,weight_entropy_x,weight_entropy_y
//   <dir>/config.json   effective config, game and estimator
//   <dir>/final_x.csv   ensemble CSVs (particle_id,weight,coord_0..)
//   <dir>/final_y.csv
//   <dir>/averaged_x.csv, averaged_y.csv  time-averaged measures

#include <filesystem>
#include <fstream>
#include <ostream>
#include <string>

#include "mne/dynamics.hpp"
#include "mne/serialization.hpp"

namespace mne {

inline void write_record_csv(std::ostream& out, const RunRecord& rec) {
  out << "iter,ni_estimate,ni_exact,wall_ms,weight_entropy_x,weight_entropy_y\n";
  const auto old = out.precision(17);
  for (const Checkpoint& c : rec.checkpoints) {
    out << c.iter << ',' << c.ni_estimate << ',';
    if (c.ni_exact) out << *c.ni_exact;
    out << ',' << c.wall_ms << ',' << c.weight_entropy_x << ',' << c.weight_entropy_y << '\n';
  }
  out.precision(old);
}

inline void write_text_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p);
  if (!out) throw std::runtime_error("cannot write '" + p.string() + "'");
  out << text;
}

inline void save_run_record(const std::filesystem::path& dir, const RunRecord& rec, const Game& g,
                            const Json& extra_config = Json::object()) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "record.csv");
    write_record_csv(out, rec);
  }
  Json cfg = to_json(rec.config);
  cfg["game"] = to_json(g);
  for (const auto& [k, v] : extra_config.items()) cfg[k] = v;
  write_text_file(dir / "config.json", cfg.dump(2) + "\n");
  auto dump = [&](const char* name, const WeightedEnsemble& e) {
    std::ofstream out(dir / name);
    write_ensemble_csv(out, e);
  };
  dump("final_x.csv", rec.final_x);
  dump("final_y.csv", rec.final_y);
  dump("averaged_x.csv", rec.averaged_x);
  dump("averaged_y.csv", rec.averaged_y);
}

}  // namespace mne
