#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <queue>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace switchlearn {

using AgentIndex = std::size_t;
using StateIndex = std::size_t;
using Signal = std::size_t;

/// Tolerance on probability sums of user-supplied distributions.
inline constexpr double kInputTolerance = 1e-12;
/// Tolerance on probability sums of beliefs evolved over many rounds.
inline constexpr double kBeliefTolerance = 1e-10;

/// The finite set of candidate states together with the realized one.
class StateSpace {
 public:
  StateSpace(std::vector<std::string> labels, StateIndex true_state)
      : labels_(std::move(labels)), true_state_(true_state) {
    if (labels_.size() < 2) {
      throw std::invalid_argument("state space needs at least two states");
    }
    std::set<std::string> unique(labels_.begin(), labels_.end());
    if (unique.size() != labels_.size()) {
      throw std::invalid_argument("state labels must be unique");
    }
    if (true_state_ >= labels_.size()) {
      throw std::invalid_argument("true state index out of range");
    }
  }

  /// Labels theta_1 .. theta_m.
  static StateSpace numbered(std::size_t m, StateIndex true_state = 0) {
    std::vector<std::string> labels;
    labels.reserve(m);
    for (std::size_t k = 0; k < m; ++k) {
      labels.push_back("theta_" + std::to_string(k + 1));
    }
    return StateSpace(std::move(labels), true_state);
  }

  [[nodiscard]] std::size_t size() const { return labels_.size(); }
  [[nodiscard]] StateIndex true_state() const { return true_state_; }
  [[nodiscard]] const std::string& label(StateIndex k) const { return labels_.at(k); }
  [[nodiscard]] const std::vector<std::string>& labels() const { return labels_; }

 private:
  std::vector<std::string> labels_;
  StateIndex true_state_;
};

/// Common prior over states, held as log-probabilities.
class Prior {
 public:
  static Prior uniform(std::size_t m) {
    if (m == 0) throw std::invalid_argument("prior over an empty state space");
    return Prior(Eigen::VectorXd::Constant(static_cast<Eigen::Index>(m),
                                           -std::log(static_cast<double>(m))));
  }

  static Prior from_probabilities(std::span<const double> mass) {
    if (mass.empty()) throw std::invalid_argument("prior over an empty state space");
    double total = 0.0;
    Eigen::VectorXd log_mass(static_cast<Eigen::Index>(mass.size()));
    for (std::size_t k = 0; k < mass.size(); ++k) {
      if (!(mass[k] > 0.0) || !std::isfinite(mass[k])) {
        throw std::invalid_argument("prior mass must be positive for every state");
      }
      total += mass[k];
      log_mass(static_cast<Eigen::Index>(k)) = std::log(mass[k]);
    }
    if (std::abs(total - 1.0) > kInputTolerance) {
      throw std::invalid_argument("prior mass does not sum to one");
    }
    return Prior(std::move(log_mass));
  }

  [[nodiscard]] std::size_t size() const { return static_cast<std::size_t>(log_mass_.size()); }
  [[nodiscard]] const Eigen::VectorXd& log_mass() const { return log_mass_; }

 private:
  explicit Prior(Eigen::VectorXd log_mass) : log_mass_(std::move(log_mass)) {}
  Eigen::VectorXd log_mass_;
};

/// Per-agent signal structures. Agent i's table is |S_i| x m with entry
/// (s, k) = log l_i(s | theta_k). Every entry is finite, so the largest
/// magnitude `log_bound()` is the bound B on log-marginals.
class LikelihoodModel {
 public:
  /// Each table is |S_i| x m of probabilities; columns must sum to one and
  /// every entry must be strictly positive.
  static LikelihoodModel from_probabilities(const std::vector<Eigen::MatrixXd>& tables) {
    if (tables.empty()) throw std::invalid_argument("likelihood model needs at least one agent");
    const Eigen::Index m = tables.front().cols();
    std::vector<Eigen::MatrixXd> logs;
    logs.reserve(tables.size());
    double bound = 0.0;
    for (std::size_t i = 0; i < tables.size(); ++i) {
      const Eigen::MatrixXd& table = tables[i];
      if (table.cols() != m) {
        throw std::invalid_argument("agent " + std::to_string(i) +
                                    ": likelihood table has inconsistent state count");
      }
      if (table.rows() < 1) {
        throw std::invalid_argument("agent " + std::to_string(i) + ": empty signal alphabet");
      }
      for (Eigen::Index k = 0; k < m; ++k) {
        const double sum = table.col(k).sum();
        if (std::abs(sum - 1.0) > kInputTolerance) {
          throw std::invalid_argument("agent " + std::to_string(i) + ": likelihood for state " +
                                      std::to_string(k) + " does not sum to one");
        }
      }
      if (!(table.array() > 0.0).all() || !table.allFinite()) {
        throw std::invalid_argument("agent " + std::to_string(i) +
                                    ": zero-probability signal (log-marginals must be bounded)");
      }
      Eigen::MatrixXd log_table = table.array().log().matrix();
      bound = std::max(bound, log_table.cwiseAbs().maxCoeff());
      logs.push_back(std::move(log_table));
    }
    return LikelihoodModel(std::move(logs), bound);
  }

  [[nodiscard]] std::size_t agent_count() const { return log_lik_.size(); }
  [[nodiscard]] std::size_t state_count() const {
    return static_cast<std::size_t>(log_lik_.front().cols());
  }
  [[nodiscard]] std::size_t alphabet_size(AgentIndex i) const {
    return static_cast<std::size_t>(log_lik_.at(i).rows());
  }
  [[nodiscard]] const Eigen::MatrixXd& log_lik(AgentIndex i) const { return log_lik_.at(i); }

  /// log l_i(s | .) as a row over states.
  [[nodiscard]] auto log_lik(AgentIndex i, Signal s) const {
    const Eigen::MatrixXd& table = log_lik_.at(i);
    if (s >= static_cast<std::size_t>(table.rows())) {
      throw std::out_of_range("signal " + std::to_string(s) + " not in alphabet of agent " +
                              std::to_string(i));
    }
    return table.row(static_cast<Eigen::Index>(s));
  }

  /// Probability column l_i(. | theta_k).
  [[nodiscard]] Eigen::VectorXd distribution(AgentIndex i, StateIndex k) const {
    return log_lik_.at(i).col(static_cast<Eigen::Index>(k)).array().exp().matrix();
  }

  [[nodiscard]] double log_bound() const { return log_bound_; }

 private:
  LikelihoodModel(std::vector<Eigen::MatrixXd> logs, double bound)
      : log_lik_(std::move(logs)), log_bound_(bound) {}

  std::vector<Eigen::MatrixXd> log_lik_;
  double log_bound_;
};

/// Undirected edge, stored with first < second.
using Edge = std::pair<AgentIndex, AgentIndex>;

namespace detail {

inline Edge ordered(AgentIndex a, AgentIndex b) { return a < b ? Edge{a, b} : Edge{b, a}; }

/// Breadth-first reachability from node 0 over positive off-diagonal entries.
inline bool all_reachable(const Eigen::MatrixXd& weights) {
  const auto n = static_cast<std::size_t>(weights.rows());
  if (n <= 1) return true;
  std::vector<bool> seen(n, false);
  std::queue<std::size_t> frontier;
  frontier.push(0);
  seen[0] = true;
  std::size_t count = 1;
  while (!frontier.empty()) {
    const std::size_t u = frontier.front();
    frontier.pop();
    for (std::size_t v = 0; v < n; ++v) {
      if (!seen[v] && weights(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(v)) > 0.0) {
        seen[v] = true;
        ++count;
        frontier.push(v);
      }
    }
  }
  return count == n;
}

}  // namespace detail

/// Weighted undirected communication graph with a symmetric doubly
/// stochastic weight matrix. Construction enforces the structural
/// invariants; strong connectivity is recorded rather than enforced so
/// that assumption checks can report it.
class Network {
 public:
  /// Edges are inferred from the positive off-diagonal entries of `weights`.
  static Network from_weights(Eigen::MatrixXd weights) {
    const Eigen::Index n = weights.rows();
    std::vector<Edge> edges;
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = i + 1; j < weights.cols(); ++j) {
        if (weights(i, j) > 0.0) {
          edges.emplace_back(static_cast<AgentIndex>(i), static_cast<AgentIndex>(j));
        }
      }
    }
    return Network(std::move(edges), std::move(weights));
  }

  Network(std::vector<Edge> edges, Eigen::MatrixXd weights) : weights_(std::move(weights)) {
    const Eigen::Index n = weights_.rows();
    if (n == 0 || weights_.cols() != n) {
      throw std::invalid_argument("weight matrix must be square and non-empty");
    }
    if (!weights_.allFinite() || (weights_.array() < 0.0).any()) {
      throw std::invalid_argument("weight matrix entries must be finite and non-negative");
    }
    if (weights_ != weights_.transpose()) {
      throw std::invalid_argument("weight matrix must be symmetric");
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      if (std::abs(weights_.row(i).sum() - 1.0) > kInputTolerance) {
        throw std::invalid_argument("weight matrix row " + std::to_string(i) +
                                    " does not sum to one");
      }
      if (!(weights_(i, i) > 0.0)) {
        throw std::invalid_argument("agent " + std::to_string(i) + " has no self-weight");
      }
    }
    std::set<Edge> edge_set;
    for (auto [a, b] : edges) {
      if (a == b) continue;  // self-loops are implied by the positive diagonal
      if (a >= static_cast<std::size_t>(n) || b >= static_cast<std::size_t>(n)) {
        throw std::invalid_argument("edge endpoint out of range");
      }
      edge_set.insert(detail::ordered(a, b));
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = i + 1; j < n; ++j) {
        const bool listed = edge_set.contains({static_cast<AgentIndex>(i), static_cast<AgentIndex>(j)});
        if (listed != (weights_(i, j) > 0.0)) {
          throw std::invalid_argument("edge (" + std::to_string(i) + "," + std::to_string(j) +
                                      ") and its weight disagree");
        }
      }
    }
    edges_.assign(edge_set.begin(), edge_set.end());
    connected_ = detail::all_reachable(weights_);
  }

  [[nodiscard]] std::size_t size() const { return static_cast<std::size_t>(weights_.rows()); }
  [[nodiscard]] const Eigen::MatrixXd& weights() const { return weights_; }
  [[nodiscard]] double weight(AgentIndex i, AgentIndex j) const {
    return weights_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }
  [[nodiscard]] const std::vector<Edge>& edges() const { return edges_; }
  [[nodiscard]] bool has_edge(AgentIndex i, AgentIndex j) const {
    return i != j && weight(i, j) > 0.0;
  }
  [[nodiscard]] std::vector<AgentIndex> neighbors(AgentIndex i) const {
    std::vector<AgentIndex> out;
    for (AgentIndex j = 0; j < size(); ++j) {
      if (has_edge(i, j)) out.push_back(j);
    }
    return out;
  }
  [[nodiscard]] bool strongly_connected() const { return connected_; }

 private:
  Eigen::MatrixXd weights_;
  std::vector<Edge> edges_;
  bool connected_ = false;
};

/// Metropolis-Hastings weights: p_ij = 1 / (1 + max(d_i, d_j)) on edges and
/// the remaining mass on the diagonal.
inline Network metropolis_weights(std::span<const Edge> adjacency, std::size_t n) {
  if (n == 0) throw std::invalid_argument("network needs at least one agent");
  std::set<Edge> edges;
  for (auto [a, b] : adjacency) {
    if (a >= n || b >= n) throw std::invalid_argument("edge endpoint out of range");
    if (a == b) throw std::invalid_argument("self-loops are not accepted in the adjacency");
    edges.insert(detail::ordered(a, b));
  }
  std::vector<std::size_t> degree(n, 0);
  for (auto [a, b] : edges) {
    ++degree[a];
    ++degree[b];
  }
  Eigen::MatrixXd weights = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n),
                                                  static_cast<Eigen::Index>(n));
  for (auto [a, b] : edges) {
    const double w = 1.0 / (1.0 + static_cast<double>(std::max(degree[a], degree[b])));
    weights(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = w;
    weights(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(a)) = w;
  }
  for (Eigen::Index i = 0; i < weights.rows(); ++i) {
    double off = 0.0;
    for (Eigen::Index j = 0; j < weights.cols(); ++j) {
      if (j != i) off += weights(i, j);
    }
    weights(i, i) = 1.0 - off;
  }
  if (!detail::all_reachable(weights)) {
    throw std::invalid_argument("adjacency is not connected");
  }
  return Network(std::vector<Edge>(edges.begin(), edges.end()), std::move(weights));
}

inline std::vector<Edge> ring_edges(std::size_t n) {
  std::vector<Edge> edges;
  if (n < 2) return edges;
  if (n == 2) return {{0, 1}};
  for (std::size_t i = 0; i < n; ++i) edges.push_back(detail::ordered(i, (i + 1) % n));
  return edges;
}

inline std::vector<Edge> complete_edges(std::size_t n) {
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) edges.emplace_back(i, j);
  }
  return edges;
}

/// Per-agent beliefs and potentials at one round. Rows are agents, columns
/// are states; `initial_log_belief` is the round-0 belief every later belief
/// is expressed against.
struct BeliefState {
  Eigen::MatrixXd initial_log_belief;
  Eigen::MatrixXd log_belief;
  Eigen::MatrixXd potentials;
  std::size_t round = 0;
};

}  // namespace switchlearn
