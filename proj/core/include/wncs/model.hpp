#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "wncs/linalg.hpp"

namespace wncs {

class ValidationError : public std::runtime_error {
 public:
  ValidationError(std::string field, const std::string& message)
      : std::runtime_error(field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

class ParseError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

class FileError : public std::runtime_error {
 public:
  explicit FileError(const std::string& path)
      : std::runtime_error("cannot open file: " + path), path_(path) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

// Continuous-time plant dx = A x dt + B u dt + dv, y = C x + w, with the
// quadratic running cost [x;u]' [Qxx Qxu; Qxu' Quu] [x;u], terminal weight
// Q0, process noise intensity Rv_c, measurement noise covariance Rw, and
// initial-state covariance Sigma0.
struct ContinuousPlant {
  MatrixXd a;       // n x n
  MatrixXd b;       // n x m
  MatrixXd c;       // q x n
  MatrixXd rv_c;    // n x n
  MatrixXd rw;      // q x q
  MatrixXd sigma0;  // n x n
  MatrixXd q_xx;    // n x n
  MatrixXd q_xu;    // n x m
  MatrixXd q_uu;    // m x m
  MatrixXd q0;      // n x n

  int n() const { return static_cast<int>(a.rows()); }
  int m() const { return static_cast<int>(b.cols()); }
  int q() const { return static_cast<int>(c.rows()); }
};

struct Link {
  int from = 0;  // 0-based node index
  int to = 0;
  double p_loss = 0.0;
};

// Directed lossy network. Node indices are 0-based internally; JSON files
// use 1-based ids. The destination is always the largest id.
struct NetworkTopology {
  int node_count = 0;
  double slot_ms = 0.0;
  int source = 0;
  std::vector<Link> links;
  std::vector<std::string> warnings;  // filled by validate()

  int destination() const { return node_count - 1; }

  // Out-neighbors per node, sorted by target id ascending.
  std::vector<std::vector<std::pair<int, double>>> out_links() const;
};

struct DesignConfig {
  std::optional<double> horizon_s;                  // nullopt: infinite horizon
  std::optional<double> epsilon_per_ms;             // nullopt: unconstrained
  std::vector<double> h_grid_ms;
  std::optional<std::vector<double>> tau_grid_ms;   // nullopt: tau == h
  std::int64_t mc_replicates = 10000;
  std::uint64_t seed = 0;
};

void validate(const ContinuousPlant& plant);
void validate(NetworkTopology& topology);
void validate(const DesignConfig& config);

ContinuousPlant plant_from_json(const std::string& text);
NetworkTopology topology_from_json(const std::string& text);
DesignConfig design_from_json(const std::string& text);

std::string to_json(const ContinuousPlant& plant);
std::string to_json(const NetworkTopology& topology);
std::string to_json(const DesignConfig& config);

// load_* read, parse, and validate; they throw FileError, ParseError, or
// ValidationError.
ContinuousPlant load_plant(const std::string& path);
NetworkTopology load_topology(const std::string& path);
DesignConfig load_design(const std::string& path);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

}  // namespace wncs
