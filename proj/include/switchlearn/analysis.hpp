#pragma once

#include "switchlearn/model.hpp"
#include "switchlearn/switching.hpp"
#include "switchlearn/trajectory.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace switchlearn {

/// D_KL(p || q) in nats. Terms with p(s) = 0 contribute nothing.
inline double kl_divergence(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw std::invalid_argument("kl_divergence: support size mismatch");
  double sum = 0.0;
  for (std::size_t s = 0; s < p.size(); ++s) {
    if (p[s] == 0.0) continue;
    if (!(q[s] > 0.0)) {
      throw std::domain_error("kl_divergence: q vanishes where p is positive");
    }
    sum += p[s] * std::log(p[s] / q[s]);
  }
  return std::max(0.0, sum);
}

namespace detail {

/// D_KL between two columns of one agent's log-likelihood table.
inline double kl_from_logs(const Eigen::MatrixXd& log_table, StateIndex from, StateIndex to) {
  const auto a = log_table.col(static_cast<Eigen::Index>(from));
  const auto b = log_table.col(static_cast<Eigen::Index>(to));
  double sum = 0.0;
  for (Eigen::Index s = 0; s < log_table.rows(); ++s) sum += std::exp(a(s)) * (a(s) - b(s));
  return std::max(0.0, sum);
}

inline bool same_distribution(const Eigen::MatrixXd& log_table, StateIndex a, StateIndex b) {
  return (log_table.col(static_cast<Eigen::Index>(a)) - log_table.col(static_cast<Eigen::Index>(b)))
             .cwiseAbs()
             .maxCoeff() <= kInputTolerance;
}

}  // namespace detail

using StatePartition = std::vector<std::vector<StateIndex>>;

/// Partition of the states into classes agent `agent` cannot tell apart.
/// Classes are ordered by their smallest member.
inline StatePartition equivalence_classes(const LikelihoodModel& lik, AgentIndex agent) {
  const Eigen::MatrixXd& table = lik.log_lik(agent);
  StatePartition classes;
  for (StateIndex k = 0; k < lik.state_count(); ++k) {
    auto it = std::find_if(classes.begin(), classes.end(), [&](const auto& cls) {
      return detail::same_distribution(table, cls.front(), k);
    });
    if (it == classes.end()) {
      classes.push_back({k});
    } else {
      it->push_back(k);
    }
  }
  return classes;
}

/// I(theta_hat, theta) for every theta_hat: minus the agent-averaged
/// divergence of l_i(.|theta_hat) from l_i(.|theta).
inline Eigen::VectorXd network_divergence(const LikelihoodModel& lik, const StateSpace& space) {
  if (lik.state_count() != space.size()) {
    throw std::invalid_argument("likelihood model and state space disagree on state count");
  }
  const StateIndex truth = space.true_state();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(space.size()));
  const double n = static_cast<double>(lik.agent_count());
  for (StateIndex k = 0; k < space.size(); ++k) {
    if (k == truth) continue;
    double sum = 0.0;
    for (AgentIndex i = 0; i < lik.agent_count(); ++i) {
      sum += detail::kl_from_logs(lik.log_lik(i), truth, k);
    }
    out(static_cast<Eigen::Index>(k)) = -sum / n;
  }
  return out;
}

struct IdentifiabilityReport {
  /// Agent x state, D_KL(l_i(.|theta) || l_i(.|theta_hat)).
  Eigen::MatrixXd kl;
  Eigen::VectorXd network_divergence;
  std::vector<StatePartition> equivalence_classes;
  bool globally_identifiable = false;
  /// min over false states of -I; zero when some state is not identifiable.
  double asymptotic_rate = 0.0;
  /// A false state attaining the minimum.
  StateIndex slowest_state = 0;
};

inline IdentifiabilityReport identifiability(const LikelihoodModel& lik, const StateSpace& space) {
  IdentifiabilityReport report;
  const auto n = static_cast<Eigen::Index>(lik.agent_count());
  const auto m = static_cast<Eigen::Index>(space.size());
  const StateIndex truth = space.true_state();
  report.kl = Eigen::MatrixXd::Zero(n, m);
  for (AgentIndex i = 0; i < lik.agent_count(); ++i) {
    report.equivalence_classes.push_back(equivalence_classes(lik, i));
    for (StateIndex k = 0; k < space.size(); ++k) {
      // Observationally equivalent states get an exact zero.
      if (detail::same_distribution(lik.log_lik(i), truth, k)) continue;
      report.kl(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
          detail::kl_from_logs(lik.log_lik(i), truth, k);
    }
  }
  report.network_divergence = Eigen::VectorXd::Zero(m);
  for (Eigen::Index k = 0; k < m; ++k) {
    if (static_cast<StateIndex>(k) == truth) continue;
    report.network_divergence(k) = -report.kl.col(k).sum() / static_cast<double>(n);
  }
  report.globally_identifiable = true;
  double rate = std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < m; ++k) {
    if (static_cast<StateIndex>(k) == truth) continue;
    if (!(report.network_divergence(k) < 0.0)) report.globally_identifiable = false;
    if (-report.network_divergence(k) < rate) {
      rate = -report.network_divergence(k);
      report.slowest_state = static_cast<StateIndex>(k);
    }
  }
  report.asymptotic_rate = rate;
  return report;
}

struct RoundWindow {
  std::size_t first = 0;
  std::size_t last = 0;
};

/// Least-squares slope of log mu_i(theta_hat) - log mu_i(theta) against t
/// over the stored rounds inside `window` (inclusive).
inline double estimate_rate(const TrajectoryRecord& record, AgentIndex agent,
                            StateIndex false_state, RoundWindow window) {
  const StateIndex true_state = record.true_state;
  if (window.first > window.last || record.stored_rounds.empty() ||
      window.last > record.stored_rounds.back()) {
    throw std::out_of_range("estimate_rate: window outside trajectory");
  }
  std::vector<double> xs;
  std::vector<double> ys;
  for (std::size_t k = 0; k < record.stored_rounds.size(); ++k) {
    const std::size_t t = record.stored_rounds[k];
    if (t < window.first || t > window.last) continue;
    const Eigen::MatrixXd& b = record.log_beliefs[k];
    xs.push_back(static_cast<double>(t));
    ys.push_back(b(static_cast<Eigen::Index>(agent), static_cast<Eigen::Index>(false_state)) -
                 b(static_cast<Eigen::Index>(agent), static_cast<Eigen::Index>(true_state)));
  }
  if (xs.size() < 2) throw std::out_of_range("estimate_rate: fewer than two stored rounds in window");
  const double c = static_cast<double>(xs.size());
  double mean_x = 0.0, mean_y = 0.0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    mean_x += xs[k];
    mean_y += ys[k];
  }
  mean_x /= c;
  mean_y /= c;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    sxx += (xs[k] - mean_x) * (xs[k] - mean_x);
    sxy += (xs[k] - mean_x) * (ys[k] - mean_y);
  }
  return sxy / sxx;
}

/// Induced infinity norm of Q_T ... Q_1 - (1/n) 11^T.
inline double product_convergence_gap(std::span<const SwitchingMatrix> sequence) {
  if (sequence.empty()) throw std::invalid_argument("product_convergence_gap: empty sequence");
  const auto n = static_cast<Eigen::Index>(sequence.front().size());
  Eigen::MatrixXd product = Eigen::MatrixXd::Identity(n, n);
  for (const auto& q : sequence) {
    if (q.matrix().rows() != n) {
      throw std::invalid_argument("product_convergence_gap: dimension mismatch");
    }
    product = q.matrix() * product;
  }
  const Eigen::MatrixXd gap = product.array() - 1.0 / static_cast<double>(n);
  return gap.cwiseAbs().rowwise().sum().maxCoeff();
}

/// True iff the union of the off-diagonal supports of the Q_t with round in
/// `window` is a connected graph.
inline bool check_interval_connectivity(std::span<const SwitchingMatrix> sequence,
                                        RoundWindow window) {
  if (window.first > window.last) {
    throw std::invalid_argument("check_interval_connectivity: empty interval");
  }
  if (sequence.empty()) return false;
  const auto n = static_cast<Eigen::Index>(sequence.front().size());
  Eigen::MatrixXd adjacency = Eigen::MatrixXd::Zero(n, n);
  for (const auto& q : sequence) {
    if (q.round() < window.first || q.round() > window.last) continue;
    for (auto [i, j] : q.support()) {
      adjacency(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = 1.0;
      adjacency(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = 1.0;
    }
  }
  return detail::all_reachable(adjacency);
}

namespace detail {

inline std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

/// Plain-text report, one table per field.
inline void write_report(std::ostream& out, const IdentifiabilityReport& report,
                         const StateSpace& space) {
  out << "true_state: " << space.label(space.true_state()) << '\n';
  out << "globally_identifiable: " << (report.globally_identifiable ? "yes" : "no") << '\n';
  out << "asymptotic_rate_nats_per_round: " << detail::format_number(report.asymptotic_rate)
      << '\n';
  out << "slowest_false_state: " << space.label(report.slowest_state) << "\n\n";

  out << "[kl_divergence_nats] agent x state\nagent";
  for (const auto& label : space.labels()) out << '\t' << label;
  out << '\n';
  for (Eigen::Index i = 0; i < report.kl.rows(); ++i) {
    out << i;
    for (Eigen::Index k = 0; k < report.kl.cols(); ++k) {
      out << '\t' << detail::format_number(report.kl(i, k));
    }
    out << '\n';
  }

  out << "\n[network_divergence_nats]\nstate\tvalue\n";
  for (StateIndex k = 0; k < space.size(); ++k) {
    out << space.label(k) << '\t'
        << detail::format_number(report.network_divergence(static_cast<Eigen::Index>(k))) << '\n';
  }

  out << "\n[equivalence_classes]\n";
  for (std::size_t i = 0; i < report.equivalence_classes.size(); ++i) {
    out << "agent " << i << ':';
    for (const auto& cls : report.equivalence_classes[i]) {
      out << " {";
      for (std::size_t c = 0; c < cls.size(); ++c) out << (c ? "," : "") << space.label(cls[c]);
      out << '}';
    }
    out << '\n';
  }
}

/// Machine-readable form: `table,agent,state,value_nats`.
inline void write_report_csv(std::ostream& out, const IdentifiabilityReport& report,
                             const StateSpace& space) {
  out << "table,agent,state,value_nats\n";
  for (Eigen::Index i = 0; i < report.kl.rows(); ++i) {
    for (StateIndex k = 0; k < space.size(); ++k) {
      out << "kl_divergence," << i << ',' << space.label(k) << ','
          << detail::format_number(report.kl(i, static_cast<Eigen::Index>(k))) << '\n';
    }
  }
  for (StateIndex k = 0; k < space.size(); ++k) {
    out << "network_divergence,," << space.label(k) << ','
        << detail::format_number(report.network_divergence(static_cast<Eigen::Index>(k))) << '\n';
  }
  out << "asymptotic_rate,,," << detail::format_number(report.asymptotic_rate) << '\n';
}

}  // namespace switchlearn
