#pragma once

#include "switchlearn/analysis.hpp"
#include "switchlearn/assumptions.hpp"
#include "switchlearn/config.hpp"
#include "switchlearn/learning.hpp"
#include "switchlearn/model.hpp"
#include "switchlearn/signals.hpp"
#include "switchlearn/switching.hpp"
#include "switchlearn/trajectory.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <future>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace switchlearn {

struct AssumptionError : std::runtime_error {
  AssumptionError(const std::string& what, ValidationReport r)
      : std::runtime_error(what), report(std::move(r)) {}
  ValidationReport report;
};

/// Round-0 state: Bayesian beliefs from the prior and s_0, zero potentials.
inline BeliefState initial_state(const Prior& prior, const LikelihoodModel& lik,
                                 std::span<const Signal> signals0) {
  const auto n = static_cast<Eigen::Index>(lik.agent_count());
  const auto m = static_cast<Eigen::Index>(lik.state_count());
  if (signals0.size() != lik.agent_count()) {
    throw std::invalid_argument("initial_state: one signal per agent required");
  }
  BeliefState state;
  state.initial_log_belief.resize(n, m);
  for (Eigen::Index i = 0; i < n; ++i) {
    state.initial_log_belief.row(i) =
        initial_belief(prior, lik, static_cast<AgentIndex>(i), signals0[static_cast<std::size_t>(i)])
            .transpose();
  }
  state.log_belief = state.initial_log_belief;
  state.potentials = Eigen::MatrixXd::Zero(n, m);
  state.round = 0;
  return state;
}

struct RoundOutcome {
  BeliefState state;
  SwitchingMatrix mixing;
  std::vector<InformativenessVerdict> verdicts;
};

/// One protocol round. Every agent's verdict is taken against its belief
/// from the previous round before any mixing happens.
inline RoundOutcome run_round(const BeliefState& state, const Network& net,
                              const LikelihoodModel& lik, double tau,
                              std::span<const Signal> signals) {
  if (signals.size() != lik.agent_count() || net.size() != lik.agent_count()) {
    throw std::invalid_argument("run_round: dimension mismatch");
  }
  std::vector<InformativenessVerdict> verdicts;
  std::vector<AgentIndex> uninformative;
  verdicts.reserve(signals.size());
  for (AgentIndex i = 0; i < signals.size(); ++i) {
    verdicts.push_back(is_informative(state.log_belief.row(static_cast<Eigen::Index>(i)).transpose(),
                                      lik, i, signals[i], tau));
    if (!verdicts.back().informative) uninformative.push_back(i);
  }
  SwitchingMatrix q = build_switching_matrix(net, uninformative, state.round + 1);
  BeliefState next;
  next.initial_log_belief = state.initial_log_belief;
  next.potentials = potential_update(state.potentials, q.matrix(), lik, signals);
  next.log_belief = belief_from_potentials(next.initial_log_belief, next.potentials);
  next.round = state.round + 1;
  return {std::move(next), std::move(q), std::move(verdicts)};
}

/// Overload matching the full parameter list of the protocol description;
/// the state space carries no information the round needs.
inline RoundOutcome run_round(const BeliefState& state, const Network& net,
                              const LikelihoodModel& lik, const StateSpace& /*space*/, double tau,
                              std::span<const Signal> signals) {
  return run_round(state, net, lik, tau, signals);
}

struct RecordOptions {
  std::size_t replica = 0;
  std::uint64_t seed = 0;
  double consensus_delta = 1e-6;
  std::size_t full_storage_limit = 10000;
  std::size_t thinning_stride = 10;
};

namespace detail {

inline bool stores_round(const RecordOptions& opt, std::size_t rounds, std::size_t t) {
  return rounds <= opt.full_storage_limit || t % opt.thinning_stride == 0 || t == rounds;
}

inline bool in_consensus(const Eigen::MatrixXd& log_belief, StateIndex truth, double delta) {
  const double bar = std::log1p(-delta);
  return (log_belief.col(static_cast<Eigen::Index>(truth)).array() > bar).all();
}

class Recorder {
 public:
  Recorder(const Scenario& sc, const RecordOptions& opt, std::size_t rounds) : opt_(opt) {
    rec_.replica = opt.replica;
    rec_.seed = opt.seed;
    rec_.rounds = rounds;
    rec_.true_state = sc.space.true_state();
    rec_.ledger = CommLedger(sc.network.size());
    rec_.tv_series = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rounds),
                                           static_cast<Eigen::Index>(sc.network.size()));
    truth_ = sc.space.true_state();
  }

  void start(const BeliefState& s) {
    rec_.stored_rounds.push_back(0);
    rec_.log_beliefs.push_back(s.log_belief);
    if (in_consensus(s.log_belief, truth_, opt_.consensus_delta)) rec_.consensus_round = 0;
  }

  void step(const BeliefState& s, const SwitchingMatrix& q,
            std::span<const InformativenessVerdict> verdicts) {
    const std::size_t t = s.round;
    for (const auto& v : verdicts) {
      rec_.tv_series(static_cast<Eigen::Index>(t - 1), static_cast<Eigen::Index>(v.agent)) = v.tv;
    }
    rec_.uninformative.push_back(q.uninformative());
    rec_.q_supports.push_back(q.support());
    rec_.ledger.record_round(q);
    if (stores_round(opt_, rec_.rounds, t)) {
      rec_.stored_rounds.push_back(t);
      rec_.log_beliefs.push_back(s.log_belief);
    }
    if (!rec_.consensus_round && in_consensus(s.log_belief, truth_, opt_.consensus_delta)) {
      rec_.consensus_round = t;
    }
  }

  TrajectoryRecord finish() { return std::move(rec_); }

 private:
  RecordOptions opt_;
  TrajectoryRecord rec_;
  StateIndex truth_ = 0;
};

}  // namespace detail

/// Runs the switching protocol on a fixed signal table.
inline TrajectoryRecord simulate(const Scenario& sc, double tau, const SignalTable& signals,
                                 const RecordOptions& options) {
  check_threshold(tau);
  const std::size_t rounds = signals.rounds();
  detail::Recorder recorder(sc, options, rounds);
  BeliefState state = initial_state(sc.prior, sc.likelihood, signals.at(0));
  recorder.start(state);
  for (std::size_t t = 1; t <= rounds; ++t) {
    RoundOutcome out = run_round(state, sc.network, sc.likelihood, tau, signals.at(t));
    recorder.step(out.state, out.mixing, out.verdicts);
    state = std::move(out.state);
  }
  return recorder.finish();
}

/// All-time communication: Q_t = P every round, no informativeness test
/// gates the mixing. Verdicts at tau = 1 are still recorded for the tv series.
inline TrajectoryRecord simulate_all_time(const Scenario& sc, const SignalTable& signals,
                                          const RecordOptions& options) {
  const std::size_t rounds = signals.rounds();
  const std::size_t n = sc.network.size();
  std::vector<AgentIndex> everyone(n);
  for (AgentIndex i = 0; i < n; ++i) everyone[i] = i;
  detail::Recorder recorder(sc, options, rounds);
  BeliefState state = initial_state(sc.prior, sc.likelihood, signals.at(0));
  recorder.start(state);
  for (std::size_t t = 1; t <= rounds; ++t) {
    std::vector<InformativenessVerdict> verdicts;
    const auto s = signals.at(t);
    for (AgentIndex i = 0; i < n; ++i) {
      verdicts.push_back(is_informative(state.log_belief.row(static_cast<Eigen::Index>(i)).transpose(),
                                        sc.likelihood, i, s[i], 1.0));
    }
    SwitchingMatrix q(sc.network.weights(), everyone, t);
    BeliefState next;
    next.initial_log_belief = state.initial_log_belief;
    next.potentials = potential_update(state.potentials, q.matrix(), sc.likelihood, s);
    next.log_belief = belief_from_potentials(next.initial_log_belief, next.potentials);
    next.round = t;
    recorder.step(next, q, verdicts);
    state = std::move(next);
  }
  return recorder.finish();
}

inline std::uint64_t replica_seed(std::uint64_t base, std::size_t replica) {
  return base + static_cast<std::uint64_t>(replica);
}

inline RecordOptions record_options(const ExperimentConfig& config, std::size_t replica) {
  RecordOptions opt;
  opt.replica = replica;
  opt.seed = replica_seed(config.seed, replica);
  opt.consensus_delta = config.consensus_delta;
  opt.full_storage_limit = config.full_storage_limit;
  opt.thinning_stride = config.thinning_stride;
  return opt;
}

/// Throws AssumptionError naming the failed assumption.
inline void require_assumptions(const Scenario& sc) {
  const ValidationReport report = validate_assumptions(sc.likelihood, sc.network, sc.space);
  if (!report.identifiable) {
    std::string states;
    for (StateIndex k : report.unidentified_states) states += " " + sc.space.label(k);
    throw AssumptionError("assumption A2 (global identifiability) fails for:" + states, report);
  }
  if (!report.connected) {
    throw AssumptionError("assumption A3 (strong connectivity) fails", report);
  }
}

struct ExperimentResult {
  Scenario scenario;
  IdentifiabilityReport identifiability;
  std::vector<TrajectoryRecord> replicas;
};

namespace detail {

template <typename Run>
std::vector<TrajectoryRecord> run_replicas(const ExperimentConfig& config, Run run) {
  // Replicas share only immutable inputs; each one owns its signals and record.
  std::vector<std::future<TrajectoryRecord>> pending;
  pending.reserve(config.replicas);
  for (std::size_t r = 0; r < config.replicas; ++r) {
    pending.push_back(std::async(std::launch::async, run, r));
  }
  std::vector<TrajectoryRecord> out;
  out.reserve(config.replicas);
  for (auto& f : pending) out.push_back(f.get());
  return out;
}

}  // namespace detail

inline ExperimentResult run_experiment(const ExperimentConfig& config) {
  Scenario sc = build_scenario(config);
  require_assumptions(sc);
  IdentifiabilityReport report = identifiability(sc.likelihood, sc.space);
  auto records = detail::run_replicas(config, [&](std::size_t r) {
    const RecordOptions opt = record_options(config, r);
    const SignalTable signals = generate_signals(sc.likelihood, sc.space, opt.seed, config.rounds);
    return simulate(sc, config.tau, signals, opt);
  });
  return {std::move(sc), std::move(report), std::move(records)};
}

struct ComparisonResult {
  Scenario scenario;
  IdentifiabilityReport identifiability;
  std::vector<TrajectoryRecord> switching;
  std::vector<TrajectoryRecord> baseline;
  AgentIndex designated_agent = 0;
};

/// Switching protocol and all-time baseline on the same signal streams.
inline ComparisonResult compare_baseline(const ExperimentConfig& config) {
  Scenario sc = build_scenario(config);
  require_assumptions(sc);
  IdentifiabilityReport report = identifiability(sc.likelihood, sc.space);
  std::vector<TrajectoryRecord> switching;
  std::vector<TrajectoryRecord> baseline;
  for (std::size_t r = 0; r < config.replicas; ++r) {
    const RecordOptions opt = record_options(config, r);
    const SignalTable signals = generate_signals(sc.likelihood, sc.space, opt.seed, config.rounds);
    switching.push_back(simulate(sc, config.tau, signals, opt));
    baseline.push_back(simulate_all_time(sc, signals, opt));
  }
  return {std::move(sc), std::move(report), std::move(switching), std::move(baseline),
          config.designated_agent};
}

}  // namespace switchlearn
