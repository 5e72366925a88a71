#pragma once

#include "switchlearn/model.hpp"
#include "switchlearn/switching.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

namespace switchlearn {

/// Everything recorded about one simulated replica.
///
/// Beliefs may be thinned: `stored_rounds[k]` is the round whose log beliefs
/// are `log_beliefs[k]`. Round 0 and the final round are always stored.
/// The tv series, uninformative sets and supports cover every round 1..T.
struct TrajectoryRecord {
  std::size_t replica = 0;
  std::uint64_t seed = 0;
  std::size_t rounds = 0;
  StateIndex true_state = 0;
  std::vector<std::size_t> stored_rounds;
  std::vector<Eigen::MatrixXd> log_beliefs;
  /// Row t-1 holds the per-agent tv values of round t.
  Eigen::MatrixXd tv_series;
  std::vector<std::vector<AgentIndex>> uninformative;
  std::vector<std::vector<Edge>> q_supports;
  CommLedger ledger{0};
  std::optional<std::size_t> consensus_round;

  [[nodiscard]] std::size_t agent_count() const {
    return log_beliefs.empty() ? 0 : static_cast<std::size_t>(log_beliefs.front().rows());
  }
  [[nodiscard]] const Eigen::MatrixXd& final_log_belief() const {
    if (log_beliefs.empty()) throw std::logic_error("empty trajectory");
    return log_beliefs.back();
  }
};

/// Rebuilds Q_1 .. Q_T from the stored uninformative sets.
inline std::vector<SwitchingMatrix> switching_sequence(const TrajectoryRecord& record,
                                                       const Network& net) {
  std::vector<SwitchingMatrix> out;
  out.reserve(record.uninformative.size());
  for (std::size_t t = 0; t < record.uninformative.size(); ++t) {
    out.push_back(build_switching_matrix(net, record.uninformative[t], t + 1));
  }
  return out;
}

}  // namespace switchlearn
