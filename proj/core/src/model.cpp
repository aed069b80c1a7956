#include "wncs/model.hpp"

#include <algorithm>
#include <fstream>
#include <queue>
#include <set>
#include <sstream>

#include <json.hpp>

namespace wncs {
namespace {

using nlohmann::ordered_json;

ordered_json mat_to_json(const MatrixXd& m) {
  ordered_json rows = ordered_json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    ordered_json row = ordered_json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

MatrixXd mat_from_json(const ordered_json& j, const std::string& field) {
  if (!j.is_array() || j.empty() || !j[0].is_array())
    throw ValidationError(field, "expected a non-empty array of rows");
  const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
  const Eigen::Index cols = static_cast<Eigen::Index>(j[0].size());
  if (cols == 0) throw ValidationError(field, "rows must be non-empty");
  MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
      throw ValidationError(field, "rows must all have the same length");
    for (Eigen::Index k = 0; k < cols; ++k) {
      const auto& v = row[static_cast<std::size_t>(k)];
      if (!v.is_number()) throw ValidationError(field, "entries must be numbers");
      m(i, k) = v.get<double>();
    }
  }
  return m;
}

const ordered_json& require(const ordered_json& j, const std::string& key) {
  auto it = j.find(key);
  if (it == j.end()) throw ValidationError(key, "missing required field");
  return *it;
}

ordered_json parse(const std::string& text) {
  try {
    return ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("invalid JSON: ") + e.what());
  }
}

void check_dims(const std::string& field, const MatrixXd& m, Eigen::Index rows,
                Eigen::Index cols) {
  if (m.rows() != rows || m.cols() != cols) {
    std::ostringstream os;
    os << "expected " << rows << "x" << cols << ", got " << m.rows() << "x" << m.cols();
    throw ValidationError(field, os.str());
  }
}

void check_symmetric(const std::string& field, const MatrixXd& m) {
  if (!is_symmetric(m)) throw ValidationError(field, "must be symmetric");
}

void check_psd(const std::string& field, const MatrixXd& m) {
  check_symmetric(field, m);
  if (!is_psd(m)) throw ValidationError(field, "must be positive semidefinite");
}

void check_pd(const std::string& field, const MatrixXd& m) {
  check_symmetric(field, m);
  if (!is_pd(m)) throw ValidationError(field, "must be positive definite");
}

void check_finite(const std::string& field, const MatrixXd& m) {
  if (!m.allFinite()) throw ValidationError(field, "entries must be finite");
}

}  // namespace

std::vector<std::vector<std::pair<int, double>>> NetworkTopology::out_links() const {
  std::vector<std::vector<std::pair<int, double>>> out(node_count);
  for (const auto& l : links) out[l.from].emplace_back(l.to, l.p_loss);
  for (auto& v : out) std::sort(v.begin(), v.end());
  return out;
}

void validate(const ContinuousPlant& plant) {
  const int n = plant.n();
  const int m = plant.m();
  const int q = plant.q();
  if (n < 1) throw ValidationError("A", "state dimension must be >= 1");
  if (m < 1) throw ValidationError("B", "input dimension must be >= 1");
  if (q < 1) throw ValidationError("C", "output dimension must be >= 1");
  check_dims("A", plant.a, n, n);
  check_dims("B", plant.b, n, m);
  check_dims("C", plant.c, q, n);
  check_dims("Rv_c", plant.rv_c, n, n);
  check_dims("Rw", plant.rw, q, q);
  check_dims("Sigma0", plant.sigma0, n, n);
  check_dims("Qxx", plant.q_xx, n, n);
  check_dims("Qxu", plant.q_xu, n, m);
  check_dims("Quu", plant.q_uu, m, m);
  check_dims("Q0", plant.q0, n, n);
  check_finite("A", plant.a);
  check_finite("B", plant.b);
  check_finite("C", plant.c);
  check_finite("Qxu", plant.q_xu);
  check_psd("Rv_c", plant.rv_c);
  check_pd("Rw", plant.rw);
  check_psd("Sigma0", plant.sigma0);
  check_psd("Qxx", plant.q_xx);
  check_pd("Quu", plant.q_uu);
  check_psd("Q0", plant.q0);
  MatrixXd composite(n + m, n + m);
  composite << plant.q_xx, plant.q_xu, plant.q_xu.transpose(), plant.q_uu;
  if (!is_psd(composite))
    throw ValidationError("Qxu", "[[Qxx,Qxu],[Qxu',Quu]] must be positive semidefinite");
}

void validate(NetworkTopology& topology) {
  topology.warnings.clear();
  if (topology.node_count < 1) throw ValidationError("nodes", "must be >= 1");
  if (!(topology.slot_ms > 0.0)) throw ValidationError("slot_ms", "must be > 0");
  if (topology.source < 0 || topology.source >= topology.node_count)
    throw ValidationError("source", "node id out of range");
  std::set<std::pair<int, int>> seen;
  for (const auto& l : topology.links) {
    if (l.from < 0 || l.from >= topology.node_count || l.to < 0 || l.to >= topology.node_count)
      throw ValidationError("links", "node id out of range");
    if (l.from == l.to) throw ValidationError("links", "self-loops are not allowed");
    if (!(l.p_loss >= 0.0) || !(l.p_loss < 1.0))
      throw ValidationError("links", "p_loss must lie in [0, 1)");
    if (!seen.emplace(l.from, l.to).second)
      throw ValidationError("links", "duplicate link between the same ordered pair");
  }
  if (topology.node_count == 1) topology.warnings.push_back("single-node network (degenerate)");

  // Reachability of the destination from the source.
  std::vector<char> visited(topology.node_count, 0);
  std::queue<int> frontier;
  frontier.push(topology.source);
  visited[topology.source] = 1;
  const auto out = topology.out_links();
  while (!frontier.empty()) {
    const int u = frontier.front();
    frontier.pop();
    for (const auto& [v, p] : out[u]) {
      if (!visited[v]) {
        visited[v] = 1;
        frontier.push(v);
      }
    }
  }
  if (!visited[topology.destination()])
    topology.warnings.push_back("destination unreachable from source");
}

void validate(const DesignConfig& config) {
  if (config.horizon_s && !(*config.horizon_s > 0.0))
    throw ValidationError("horizon_s", "must be > 0 or \"inf\"");
  if (config.epsilon_per_ms && !(*config.epsilon_per_ms >= 0.0))
    throw ValidationError("epsilon_per_ms", "must be >= 0");
  if (config.h_grid_ms.empty()) throw ValidationError("h_grid_ms", "must be non-empty");
  for (double h : config.h_grid_ms)
    if (!(h > 0.0)) throw ValidationError("h_grid_ms", "entries must be > 0");
  if (config.tau_grid_ms) {
    if (config.tau_grid_ms->empty())
      throw ValidationError("tau_grid_ms", "must be non-empty when given");
    for (double t : *config.tau_grid_ms)
      if (!(t > 0.0)) throw ValidationError("tau_grid_ms", "entries must be > 0");
  }
  if (config.mc_replicates < 1) throw ValidationError("mc_replicates", "must be >= 1");
}

ContinuousPlant plant_from_json(const std::string& text) {
  const ordered_json j = parse(text);
  ContinuousPlant p;
  p.a = mat_from_json(require(j, "A"), "A");
  p.b = mat_from_json(require(j, "B"), "B");
  p.c = mat_from_json(require(j, "C"), "C");
  p.rv_c = mat_from_json(require(j, "Rv_c"), "Rv_c");
  p.rw = mat_from_json(require(j, "Rw"), "Rw");
  p.sigma0 = mat_from_json(require(j, "Sigma0"), "Sigma0");
  p.q_xx = mat_from_json(require(j, "Qxx"), "Qxx");
  p.q_xu = mat_from_json(require(j, "Qxu"), "Qxu");
  p.q_uu = mat_from_json(require(j, "Quu"), "Quu");
  p.q0 = mat_from_json(require(j, "Q0"), "Q0");
  validate(p);
  return p;
}

NetworkTopology topology_from_json(const std::string& text) {
  const ordered_json j = parse(text);
  NetworkTopology t;
  t.node_count = require(j, "nodes").get<int>();
  t.slot_ms = require(j, "slot_ms").get<double>();
  t.source = require(j, "source").get<int>() - 1;
  for (const auto& lj : require(j, "links")) {
    Link l;
    l.from = require(lj, "from").get<int>() - 1;
    l.to = require(lj, "to").get<int>() - 1;
    l.p_loss = require(lj, "p_loss").get<double>();
    t.links.push_back(l);
  }
  validate(t);
  return t;
}

DesignConfig design_from_json(const std::string& text) {
  const ordered_json j = parse(text);
  DesignConfig c;
  const auto& horizon = require(j, "horizon_s");
  if (horizon.is_string()) {
    if (horizon.get<std::string>() != "inf")
      throw ValidationError("horizon_s", "must be a number or \"inf\"");
  } else {
    c.horizon_s = horizon.get<double>();
  }
  if (j.contains("epsilon_per_ms") && !j["epsilon_per_ms"].is_null())
    c.epsilon_per_ms = j["epsilon_per_ms"].get<double>();
  for (const auto& h : require(j, "h_grid_ms")) c.h_grid_ms.push_back(h.get<double>());
  const auto& tau_mode = require(j, "tau_mode");
  if (tau_mode.is_string()) {
    if (tau_mode.get<std::string>() != "equal-h")
      throw ValidationError("tau_mode", "must be \"equal-h\" or {\"tau_grid_ms\": [...]}");
  } else {
    std::vector<double> grid;
    for (const auto& t : require(tau_mode, "tau_grid_ms")) grid.push_back(t.get<double>());
    c.tau_grid_ms = std::move(grid);
  }
  c.mc_replicates = require(j, "mc_replicates").get<std::int64_t>();
  c.seed = require(j, "seed").get<std::uint64_t>();
  validate(c);
  return c;
}

std::string to_json(const ContinuousPlant& plant) {
  ordered_json j;
  j["A"] = mat_to_json(plant.a);
  j["B"] = mat_to_json(plant.b);
  j["C"] = mat_to_json(plant.c);
  j["Rv_c"] = mat_to_json(plant.rv_c);
  j["Rw"] = mat_to_json(plant.rw);
  j["Sigma0"] = mat_to_json(plant.sigma0);
  j["Qxx"] = mat_to_json(plant.q_xx);
  j["Qxu"] = mat_to_json(plant.q_xu);
  j["Quu"] = mat_to_json(plant.q_uu);
  j["Q0"] = mat_to_json(plant.q0);
  return j.dump(2);
}

std::string to_json(const NetworkTopology& topology) {
  ordered_json j;
  j["nodes"] = topology.node_count;
  j["slot_ms"] = topology.slot_ms;
  j["source"] = topology.source + 1;
  ordered_json links = ordered_json::array();
  for (const auto& l : topology.links) {
    ordered_json lj;
    lj["from"] = l.from + 1;
    lj["to"] = l.to + 1;
    lj["p_loss"] = l.p_loss;
    links.push_back(std::move(lj));
  }
  j["links"] = std::move(links);
  return j.dump(2);
}

std::string to_json(const DesignConfig& config) {
  ordered_json j;
  if (config.horizon_s)
    j["horizon_s"] = *config.horizon_s;
  else
    j["horizon_s"] = "inf";
  if (config.epsilon_per_ms)
    j["epsilon_per_ms"] = *config.epsilon_per_ms;
  else
    j["epsilon_per_ms"] = nullptr;
  j["h_grid_ms"] = config.h_grid_ms;
  if (config.tau_grid_ms)
    j["tau_mode"] = ordered_json{{"tau_grid_ms", *config.tau_grid_ms}};
  else
    j["tau_mode"] = "equal-h";
  j["mc_replicates"] = config.mc_replicates;
  j["seed"] = config.seed;
  return j.dump(2);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileError(path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FileError(path);
  out << content;
}

ContinuousPlant load_plant(const std::string& path) { return plant_from_json(read_file(path)); }
NetworkTopology load_topology(const std::string& path) {
  return topology_from_json(read_file(path));
}
DesignConfig load_design(const std::string& path) { return design_from_json(read_file(path)); }

}  // namespace wncs
