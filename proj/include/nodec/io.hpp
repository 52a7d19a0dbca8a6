#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "nodec/agm.hpp"
#include "nodec/error.hpp"
#include "nodec/graph.hpp"
#include "nodec/matrix.hpp"
#include "nodec/mlp.hpp"
#include "nodec/ode.hpp"
#include "nodec/train.hpp"

namespace nodec {

// 17 significant digits: doubles round-trip exactly through the CSVs.
inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

namespace detail {

inline std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open for writing: " + path);
  return out;
}

inline void write_row(std::ofstream& out, const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out << ',';
    out << cells[i];
  }
  out << '\n';
}

}  // namespace detail

// header: t,x_1,...,x_N,u_1,...,u_M ; one row per grid node
inline void write_trajectory_csv(const std::string& path, const Trajectory& traj) {
  std::ofstream out = detail::open_out(path);
  const std::size_t n = traj.states.front().size();
  const std::size_t m = traj.controls.front().size();
  out << 't';
  for (std::size_t i = 1; i <= n; ++i) out << ",x_" << i;
  for (std::size_t i = 1; i <= m; ++i) out << ",u_" << i;
  out << '\n';
  for (std::size_t k = 0; k < traj.grid.nodes(); ++k) {
    out << format_double(traj.grid.node(k));
    for (double v : traj.states[k]) out << ',' << format_double(v);
    for (double v : traj.controls[k]) out << ',' << format_double(v);
    out << '\n';
  }
}

inline void write_trainlog_csv(const std::string& path, const TrainLog& log) {
  std::ofstream out = detail::open_out(path);
  out << "epoch,loss,E_T,w_norm2,dw_norm2,du_norm2\n";
  for (const TrainRecord& r : log.records) {
    out << r.epoch << ',' << format_double(r.loss) << ',' << format_double(r.energy)
        << ',' << format_double(r.w_norm2) << ',' << format_double(r.dw_norm2)
        << ',' << format_double(r.du_norm2) << '\n';
  }
}

inline void write_control_snapshots_csv(const std::string& path, const TrainLog& log,
                                        const TimeGrid& grid) {
  std::ofstream out = detail::open_out(path);
  const std::size_t m = log.snapshots.empty() ? 1 : log.snapshots.front().controls.front().size();
  out << "epoch,t";
  for (std::size_t i = 1; i <= m; ++i) out << ",u_" << i;
  out << '\n';
  for (const TrainSnapshot& snap : log.snapshots)
    for (std::size_t k = 0; k < grid.nodes(); ++k) {
      out << snap.epoch << ',' << format_double(grid.node(k));
      for (double v : snap.controls[k]) out << ',' << format_double(v);
      out << '\n';
    }
}

inline void write_energy_csv(const std::string& path, const TimeGrid& grid,
                             const Vector& prefix_energy) {
  std::ofstream out = detail::open_out(path);
  out << "t,E_t\n";
  for (std::size_t k = 0; k < grid.nodes(); ++k)
    out << format_double(grid.node(k)) << ',' << format_double(prefix_energy[k]) << '\n';
}

// t,theta_1..theta_N,r,u (or u_1..u_M for per-node control)
inline void write_phase_csv(const std::string& path, const Trajectory& traj) {
  std::ofstream out = detail::open_out(path);
  const std::size_t n = traj.states.front().size();
  const std::size_t m = traj.controls.front().size();
  out << 't';
  for (std::size_t i = 1; i <= n; ++i) out << ",theta_" << i;
  out << ",r";
  if (m == 1)
    out << ",u";
  else
    for (std::size_t i = 1; i <= m; ++i) out << ",u_" << i;
  out << '\n';
  for (std::size_t k = 0; k < traj.grid.nodes(); ++k) {
    out << format_double(traj.grid.node(k));
    for (double v : traj.states[k]) out << ',' << format_double(v);
    out << ',' << format_double(order_parameter(traj.states[k]));
    for (double v : traj.controls[k]) out << ',' << format_double(v);
    out << '\n';
  }
}

inline void write_correlations_csv(const std::string& path,
                                   const std::vector<CorrelationWindow>& windows) {
  std::ofstream out = detail::open_out(path);
  out << "window,r,p\n";
  for (const CorrelationWindow& w : windows) {
    out << w.index << ',';
    if (w.defined)
      out << format_double(w.r) << ',' << format_double(w.p_value);
    else
      out << "undefined,undefined";
    out << '\n';
  }
}

inline void write_agm_history_csv(const std::string& path,
                                  const std::vector<AgmIterRecord>& history) {
  std::ofstream out = detail::open_out(path);
  out << "iter,loss,E_T,r_T\n";
  for (const AgmIterRecord& r : history)
    out << r.iter << ',' << format_double(r.loss) << ',' << format_double(r.energy)
        << ',' << format_double(r.r_final) << '\n';
}

inline void write_agm_control_csv(const std::string& path, const TimeGrid& grid,
                                  const Vector& u_nodes) {
  std::ofstream out = detail::open_out(path);
  out << "t,u\n";
  for (std::size_t k = 0; k < grid.nodes(); ++k)
    out << format_double(grid.node(k)) << ',' << format_double(u_nodes[k]) << '\n';
}

// edge list, one "i j" pair per line, 0-indexed
inline void write_edge_list(const std::string& path, const Graph& g) {
  std::ofstream out = detail::open_out(path);
  for (const auto& [i, j] : g.edges) out << i << ' ' << j << '\n';
}

// minimal CSV reader for numeric tables written by this library
struct CsvTable {
  std::vector<std::string> header;
  std::vector<Vector> rows;

  std::size_t column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    throw ConfigError("CSV column not found: " + name);
  }
};

inline CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open CSV: " + path);
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("empty CSV: " + path);
  std::stringstream hs(line);
  std::string cell;
  while (std::getline(hs, cell, ',')) table.header.push_back(cell);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream rs(line);
    Vector row;
    while (std::getline(rs, cell, ',')) row.push_back(std::stod(cell));
    if (row.size() != table.header.size())
      throw ConfigError("ragged CSV row in " + path);
    table.rows.push_back(std::move(row));
  }
  return table;
}

// ---- network checkpoints ----

inline nlohmann::json net_to_json(const ControlNet& net) {
  nlohmann::json j;
  j["layer_sizes"] = net.layer_sizes;
  std::vector<std::string> acts;
  for (Activation a : net.activations) acts.push_back(activation_name(a));
  j["activations"] = acts;
  j["weights"] = net.w;
  return j;
}

inline ControlNet net_from_json(const nlohmann::json& j) {
  ControlNet net;
  net.layer_sizes = j.at("layer_sizes").get<std::vector<std::size_t>>();
  for (const auto& name : j.at("activations"))
    net.activations.push_back(activation_from_name(name.get<std::string>()));
  net.w = j.at("weights").get<Vector>();
  net.validate();
  return net;
}

inline void save_net(const std::string& path, const ControlNet& net) {
  std::ofstream out = detail::open_out(path);
  out << net_to_json(net).dump(2) << '\n';
}

inline ControlNet load_net(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open checkpoint: " + path);
  nlohmann::json j;
  in >> j;
  return net_from_json(j);
}

// ---- flat key=value configuration ----

using ConfigMap = std::map<std::string, std::string>;

inline std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

inline ConfigMap parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config: " + path);
  ConfigMap cfg;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string stripped = trim(line.substr(0, line.find('#')));
    if (stripped.empty()) continue;
    const std::size_t eq = stripped.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key=value");
    cfg[trim(stripped.substr(0, eq))] = trim(stripped.substr(eq + 1));
  }
  return cfg;
}

inline void apply_override(ConfigMap& cfg, const std::string& assignment) {
  const std::size_t eq = assignment.find('=');
  if (eq == std::string::npos)
    throw ConfigError("--set expects key=value, got: " + assignment);
  cfg[trim(assignment.substr(0, eq))] = trim(assignment.substr(eq + 1));
}

inline std::string cfg_string(const ConfigMap& cfg, const std::string& key,
                              const std::string& fallback) {
  auto it = cfg.find(key);
  return it == cfg.end() ? fallback : it->second;
}

inline double cfg_double(const ConfigMap& cfg, const std::string& key, double fallback) {
  auto it = cfg.find(key);
  if (it == cfg.end()) return fallback;
  try {
    std::size_t used = 0;
    const double v = std::stod(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument(it->second);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "' is not a number: " + it->second);
  }
}

inline std::size_t cfg_size(const ConfigMap& cfg, const std::string& key,
                            std::size_t fallback) {
  const double v = cfg_double(cfg, key, static_cast<double>(fallback));
  if (v < 0.0 || v != std::floor(v))
    throw ConfigError("config key '" + key + "' must be a non-negative integer");
  return static_cast<std::size_t>(v);
}

inline std::vector<double> cfg_doubles(const ConfigMap& cfg, const std::string& key,
                                       const std::vector<double>& fallback) {
  auto it = cfg.find(key);
  if (it == cfg.end()) return fallback;
  std::vector<double> out;
  std::stringstream ss(it->second);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    try {
      out.push_back(std::stod(trim(cell)));
    } catch (const std::exception&) {
      throw ConfigError("config key '" + key + "' has a bad entry: " + cell);
    }
  }
  if (out.empty()) throw ConfigError("config key '" + key + "' is empty");
  return out;
}

inline std::vector<std::size_t> cfg_sizes(const ConfigMap& cfg, const std::string& key,
                                          const std::vector<std::size_t>& fallback) {
  std::vector<double> def(fallback.begin(), fallback.end());
  std::vector<double> vals = cfg_doubles(cfg, key, def);
  std::vector<std::size_t> out;
  for (double v : vals) {
    if (v < 0.0 || v != std::floor(v))
      throw ConfigError("config key '" + key + "' must hold non-negative integers");
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}

}  // namespace nodec
