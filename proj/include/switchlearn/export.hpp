#pragma once

#include "switchlearn/analysis.hpp"
#include "switchlearn/config.hpp"
#include "switchlearn/signals.hpp"
#include "switchlearn/simulator.hpp"
#include "switchlearn/trajectory.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace switchlearn {

struct ExportError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Comment line naming the generator and the run parameters.
inline std::string provenance_header(const ExperimentConfig& config) {
  std::ostringstream out;
  out << "# switchlearn rng=" << kRngName << " seed=" << config.seed
      << " replicas=" << config.replicas << " rounds=" << config.rounds
      << " tau=" << detail::format_number(config.tau);
  return out.str();
}

/// `replica,t,agent,state_label,belief` with linear-domain beliefs.
inline void write_beliefs_csv(std::ostream& out, std::span<const TrajectoryRecord> records,
                              const StateSpace& space, const std::string& header) {
  out << header << '\n' << "replica,t,agent,state_label,belief\n";
  for (const auto& rec : records) {
    for (std::size_t k = 0; k < rec.stored_rounds.size(); ++k) {
      const Eigen::MatrixXd& b = rec.log_beliefs[k];
      for (Eigen::Index i = 0; i < b.rows(); ++i) {
        for (Eigen::Index s = 0; s < b.cols(); ++s) {
          out << rec.replica << ',' << rec.stored_rounds[k] << ',' << i << ','
              << space.label(static_cast<StateIndex>(s)) << ','
              << detail::format_number(std::exp(b(i, s))) << '\n';
        }
      }
    }
  }
}

/// `replica,t,agent_i,agent_j`, one row per undirected exchange.
inline void write_comm_csv(std::ostream& out, std::span<const TrajectoryRecord> records,
                           const std::string& header) {
  out << header << '\n' << "replica,t,agent_i,agent_j\n";
  for (const auto& rec : records) {
    for (const auto& e : rec.ledger.events()) {
      out << rec.replica << ',' << e.round << ',' << e.agent_i << ',' << e.agent_j << '\n';
    }
  }
}

struct BeliefRow {
  std::size_t replica = 0;
  std::size_t round = 0;
  AgentIndex agent = 0;
  std::string state_label;
  double belief = 0.0;
};

inline std::vector<BeliefRow> read_beliefs_csv(std::istream& in) {
  std::vector<BeliefRow> rows;
  std::string line;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (line.empty() || line.front() == '#') continue;
    if (!header_seen) {
      header_seen = true;
      continue;
    }
    std::istringstream fields(line);
    std::string replica, round, agent, label, belief;
    if (!std::getline(fields, replica, ',') || !std::getline(fields, round, ',') ||
        !std::getline(fields, agent, ',') || !std::getline(fields, label, ',') ||
        !std::getline(fields, belief)) {
      throw ExportError("malformed beliefs row: " + line);
    }
    rows.push_back({std::stoul(replica), std::stoul(round), std::stoul(agent), label,
                    std::stod(belief)});
  }
  return rows;
}

/// Rate estimated from the designated agent on the slowest false state,
/// over the second half of the run; reported as a positive rate.
inline double estimated_rate(const TrajectoryRecord& rec, const IdentifiabilityReport& report,
                             AgentIndex agent) {
  return -estimate_rate(rec, agent, report.slowest_state, {rec.rounds / 2, rec.rounds});
}

inline void write_summary(std::ostream& out, const ExperimentConfig& config,
                          const ExperimentResult& result) {
  const auto& sc = result.scenario;
  const auto& report = result.identifiability;
  out << provenance_header(config) << '\n';
  out << "agents: " << sc.network.size() << '\n';
  out << "states: " << sc.space.size() << '\n';
  out << "true_state: " << sc.space.label(sc.space.true_state()) << '\n';
  out << "consensus_delta: " << detail::format_number(config.consensus_delta) << '\n';
  out << "theoretical_rate_nats_per_round: " << detail::format_number(report.asymptotic_rate)
      << '\n';
  out << "slowest_false_state: " << sc.space.label(report.slowest_state) << '\n';
  out << "designated_agent: " << config.designated_agent << "\n\n";

  out << "replica\tconsensus_round\tmin_final_true_belief\tmean_comm_fraction\t"
         "estimated_rate_nats_per_round\n";
  double rate_sum = 0.0;
  std::size_t reached = 0;
  for (const auto& rec : result.replicas) {
    const double min_true =
        std::exp(rec.final_log_belief().col(static_cast<Eigen::Index>(sc.space.true_state())).minCoeff());
    const double rate = estimated_rate(rec, report, config.designated_agent);
    rate_sum += rate;
    if (rec.consensus_round) ++reached;
    out << rec.replica << '\t' << (rec.consensus_round ? std::to_string(*rec.consensus_round) : "none")
        << '\t' << detail::format_number(min_true) << '\t'
        << detail::format_number(rec.ledger.mean_fraction()) << '\t' << detail::format_number(rate)
        << '\n';
  }
  const double replicas = static_cast<double>(result.replicas.size());
  out << "\nreplicas_reaching_consensus: " << reached << '/' << result.replicas.size() << '\n';
  out << "mean_estimated_rate_nats_per_round: " << detail::format_number(rate_sum / replicas)
      << "\n\nagent\tmean_comm_fraction\n";
  for (AgentIndex i = 0; i < sc.network.size(); ++i) {
    double sum = 0.0;
    for (const auto& rec : result.replicas) sum += rec.ledger.fraction(i);
    out << i << '\t' << detail::format_number(sum / replicas) << '\n';
  }
}

namespace detail {

inline std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ExportError("cannot write '" + path.string() + "'");
  return out;
}

inline void close_output(std::ofstream& out, const std::filesystem::path& path) {
  out.close();
  if (!out) throw ExportError("failed writing '" + path.string() + "'");
}

}  // namespace detail

/// Writes beliefs.csv, comm.csv and summary.txt into `dir`.
inline void export_experiment(const ExperimentConfig& config, const ExperimentResult& result,
                              const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ExportError("cannot create '" + dir.string() + "': " + ec.message());
  const std::string header = provenance_header(config);
  {
    const auto path = dir / "beliefs.csv";
    auto out = detail::open_output(path);
    write_beliefs_csv(out, result.replicas, result.scenario.space, header);
    detail::close_output(out, path);
  }
  {
    const auto path = dir / "comm.csv";
    auto out = detail::open_output(path);
    write_comm_csv(out, result.replicas, header);
    detail::close_output(out, path);
  }
  {
    const auto path = dir / "summary.txt";
    auto out = detail::open_output(path);
    write_summary(out, config, result);
    detail::close_output(out, path);
  }
}

/// Comparison outputs: one directory per protocol plus compare.txt and the
/// paired trajectory of the designated agent in replica 0.
inline void export_comparison(const ExperimentConfig& config, const ComparisonResult& result,
                              const std::filesystem::path& dir) {
  ExperimentConfig baseline_config = config;
  baseline_config.tau = 1.0;
  export_experiment(config, {result.scenario, result.identifiability, result.switching},
                    dir / "switching");
  export_experiment(baseline_config, {result.scenario, result.identifiability, result.baseline},
                    dir / "baseline");

  const auto& space = result.scenario.space;
  const auto truth = static_cast<Eigen::Index>(space.true_state());
  const auto agent = static_cast<Eigen::Index>(result.designated_agent);
  {
    const auto path = dir / "paired.csv";
    auto out = detail::open_output(path);
    out << provenance_header(config) << '\n' << "t,switching_true_belief,baseline_true_belief\n";
    const auto& a = result.switching.front();
    const auto& b = result.baseline.front();
    for (std::size_t k = 0; k < a.stored_rounds.size(); ++k) {
      out << a.stored_rounds[k] << ',' << detail::format_number(std::exp(a.log_beliefs[k](agent, truth)))
          << ',' << detail::format_number(std::exp(b.log_beliefs[k](agent, truth))) << '\n';
    }
    detail::close_output(out, path);
  }
  {
    const auto path = dir / "compare.txt";
    auto out = detail::open_output(path);
    out << provenance_header(config) << '\n';
    out << "designated_agent: " << result.designated_agent << "\n\n";
    out << "replica\tprotocol\tconsensus_round\tmean_comm_fraction\tdesignated_comm_fraction\t"
           "designated_final_true_belief\n";
    for (std::size_t r = 0; r < result.switching.size(); ++r) {
      for (const auto* rec : {&result.switching[r], &result.baseline[r]}) {
        out << r << '\t' << (rec == &result.switching[r] ? "switching" : "baseline") << '\t'
            << (rec->consensus_round ? std::to_string(*rec->consensus_round) : "none") << '\t'
            << detail::format_number(rec->ledger.mean_fraction()) << '\t'
            << detail::format_number(rec->ledger.fraction(result.designated_agent)) << '\t'
            << detail::format_number(std::exp(rec->final_log_belief()(agent, truth))) << '\n';
      }
    }
    out << "\nagent\tswitching_comm_fraction\tbaseline_comm_fraction\n";
    for (AgentIndex i = 0; i < result.scenario.network.size(); ++i) {
      double s = 0.0, b = 0.0;
      for (const auto& rec : result.switching) s += rec.ledger.fraction(i);
      for (const auto& rec : result.baseline) b += rec.ledger.fraction(i);
      const double reps = static_cast<double>(result.switching.size());
      out << i << '\t' << detail::format_number(s / reps) << '\t' << detail::format_number(b / reps)
          << '\n';
    }
    detail::close_output(out, path);
  }
}

}  // namespace switchlearn
