#pragma once

#include "switchlearn/analysis.hpp"
#include "switchlearn/model.hpp"

#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace switchlearn {

struct ValidationReport {
  /// Bounded log-marginals; always true for a constructed model.
  bool bounded_log_marginals = true;
  double log_bound = 0.0;
  /// Global identifiability of the true state.
  bool identifiable = false;
  std::vector<StateIndex> unidentified_states;
  /// Strong connectivity of the network.
  bool connected = false;

  [[nodiscard]] bool passed() const { return bounded_log_marginals && identifiable && connected; }
};

inline ValidationReport validate_assumptions(const LikelihoodModel& lik, const Network& net,
                                             const StateSpace& space) {
  if (lik.agent_count() != net.size()) {
    throw std::invalid_argument("likelihood model has " + std::to_string(lik.agent_count()) +
                                " agents but the network has " + std::to_string(net.size()));
  }
  if (lik.state_count() != space.size()) {
    throw std::invalid_argument("likelihood model has " + std::to_string(lik.state_count()) +
                                " states but the state space has " + std::to_string(space.size()));
  }
  ValidationReport report;
  report.log_bound = lik.log_bound();
  const Eigen::VectorXd divergence = network_divergence(lik, space);
  for (StateIndex k = 0; k < space.size(); ++k) {
    if (k != space.true_state() && !(divergence(static_cast<Eigen::Index>(k)) < 0.0)) {
      report.unidentified_states.push_back(k);
    }
  }
  report.identifiable = report.unidentified_states.empty();
  report.connected = net.strongly_connected();
  return report;
}

inline void write_validation(std::ostream& out, const ValidationReport& report,
                             const StateSpace& space) {
  out << "A1 bounded log-marginals: pass (B = " << detail::format_number(report.log_bound)
      << ")\n";
  out << "A2 global identifiability: " << (report.identifiable ? "pass" : "FAIL");
  if (!report.identifiable) {
    out << " (no agent distinguishes";
    for (StateIndex k : report.unidentified_states) out << ' ' << space.label(k);
    out << " from " << space.label(space.true_state()) << ')';
  }
  out << '\n';
  out << "A3 strong connectivity: " << (report.connected ? "pass" : "FAIL") << '\n';
}

}  // namespace switchlearn
