#pragma once

#include "switchlearn/model.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cstddef>
#include <ostream>
#include <span>
#include <stdexcept>
#include <vector>

namespace switchlearn {

/// Round-t mixing matrix built from the set of agents whose private signal
/// was uninformative. Agent i's row and column copy P wherever i or the
/// other endpoint is uninformative; everything else is identity.
class SwitchingMatrix {
 public:
  SwitchingMatrix(Eigen::MatrixXd q, std::vector<AgentIndex> uninformative, std::size_t round)
      : q_(std::move(q)), uninformative_(std::move(uninformative)), round_(round) {}

  [[nodiscard]] const Eigen::MatrixXd& matrix() const { return q_; }
  [[nodiscard]] std::size_t size() const { return static_cast<std::size_t>(q_.rows()); }
  [[nodiscard]] const std::vector<AgentIndex>& uninformative() const { return uninformative_; }
  [[nodiscard]] std::size_t round() const { return round_; }

  [[nodiscard]] bool active(AgentIndex i, AgentIndex j) const {
    return i != j && q_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) > 0.0;
  }
  [[nodiscard]] bool communicates(AgentIndex i) const {
    for (AgentIndex j = 0; j < size(); ++j) {
      if (active(i, j)) return true;
    }
    return false;
  }
  /// Positive off-diagonal pairs (i < j).
  [[nodiscard]] std::vector<Edge> support() const {
    std::vector<Edge> out;
    for (AgentIndex i = 0; i < size(); ++i) {
      for (AgentIndex j = i + 1; j < size(); ++j) {
        if (active(i, j)) out.emplace_back(i, j);
      }
    }
    return out;
  }

 private:
  Eigen::MatrixXd q_;
  std::vector<AgentIndex> uninformative_;
  std::size_t round_;
};

inline SwitchingMatrix build_switching_matrix(const Network& net,
                                              std::span<const AgentIndex> uninformative,
                                              std::size_t round) {
  const std::size_t n = net.size();
  std::vector<bool> flagged(n, false);
  for (AgentIndex a : uninformative) {
    if (a >= n) throw std::invalid_argument("uninformative agent index out of range");
    flagged[a] = true;
  }
  const Eigen::MatrixXd& p = net.weights();
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(p.rows(), p.cols());
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    bool any_active = false;
    double inactive_mass = 0.0;
    for (Eigen::Index j = 0; j < p.cols(); ++j) {
      if (j == i || !(p(i, j) > 0.0)) continue;
      if (flagged[static_cast<std::size_t>(i)] || flagged[static_cast<std::size_t>(j)]) {
        q(i, j) = p(i, j);
        any_active = true;
      } else {
        inactive_mass += p(i, j);
      }
    }
    // Equals 1 - sum of active weights; written this way so that all-active
    // rows reproduce P_ii and silent rows are exactly 1.
    q(i, i) = any_active ? p(i, i) + inactive_mass : 1.0;
  }
  std::vector<AgentIndex> sorted(uninformative.begin(), uninformative.end());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  return SwitchingMatrix(std::move(q), std::move(sorted), round);
}

struct CommEvent {
  std::size_t round = 0;
  AgentIndex agent_i = 0;
  AgentIndex agent_j = 0;

  friend bool operator==(const CommEvent&, const CommEvent&) = default;
};

/// Undirected exchange records and per-agent counts of communicating rounds.
class CommLedger {
 public:
  explicit CommLedger(std::size_t agents) : per_agent_rounds_(agents, 0) {}

  void record_round(const SwitchingMatrix& q) {
    if (q.size() != per_agent_rounds_.size()) {
      throw std::invalid_argument("ledger and switching matrix disagree on agent count");
    }
    for (auto [i, j] : q.support()) events_.push_back({q.round(), i, j});
    for (AgentIndex i = 0; i < q.size(); ++i) {
      if (q.communicates(i)) ++per_agent_rounds_[i];
    }
    ++rounds_;
  }

  [[nodiscard]] const std::vector<CommEvent>& events() const { return events_; }
  [[nodiscard]] const std::vector<std::size_t>& per_agent_rounds() const { return per_agent_rounds_; }
  [[nodiscard]] std::size_t rounds() const { return rounds_; }
  [[nodiscard]] std::size_t agents() const { return per_agent_rounds_.size(); }

  [[nodiscard]] double fraction(AgentIndex i) const {
    return rounds_ == 0 ? 0.0
                        : static_cast<double>(per_agent_rounds_.at(i)) / static_cast<double>(rounds_);
  }
  [[nodiscard]] double mean_fraction() const {
    if (per_agent_rounds_.empty()) return 0.0;
    double sum = 0.0;
    for (AgentIndex i = 0; i < agents(); ++i) sum += fraction(i);
    return sum / static_cast<double>(agents());
  }

  /// CSV with header `round,agent_i,agent_j`.
  void write_csv(std::ostream& out) const {
    out << "round,agent_i,agent_j\n";
    for (const auto& e : events_) out << e.round << ',' << e.agent_i << ',' << e.agent_j << '\n';
  }

 private:
  std::vector<CommEvent> events_;
  std::vector<std::size_t> per_agent_rounds_;
  std::size_t rounds_ = 0;
};

inline CommLedger record_round(CommLedger ledger, const SwitchingMatrix& q) {
  ledger.record_round(q);
  return ledger;
}

}  // namespace switchlearn
