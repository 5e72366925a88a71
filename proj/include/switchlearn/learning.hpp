#pragma once

#include "switchlearn/model.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>

namespace switchlearn {

/// A belief over states in natural-log domain.
using LogBelief = Eigen::VectorXd;

/// log(sum(exp(x))) shifted by the maximum.
inline double log_sum_exp(const Eigen::Ref<const Eigen::VectorXd>& x) {
  const double top = x.maxCoeff();
  if (!std::isfinite(top)) return top;
  return top + std::log((x.array() - top).exp().sum());
}

inline LogBelief normalize_log(const Eigen::Ref<const Eigen::VectorXd>& unnormalized) {
  return unnormalized.array() - log_sum_exp(unnormalized);
}

/// Bayesian belief from the common prior and the round-0 signal.
inline LogBelief initial_belief(const Prior& prior, const LikelihoodModel& lik, AgentIndex agent,
                                Signal signal) {
  if (prior.size() != lik.state_count()) {
    throw std::invalid_argument("prior and likelihood disagree on the number of states");
  }
  LogBelief joint = prior.log_mass() + lik.log_lik(agent, signal).transpose();
  return normalize_log(joint);
}

/// Per-state log-increment d with posterior = belief + d under Bayes' rule.
///
/// The normalizer is expanded around the likelihood of the most probable
/// state: log sum mu l = log l_ref + log1p(sum mu expm1(log l - log l_ref)).
/// States sharing l_ref contribute exactly zero to the sum, so increments
/// far below the spacing of doubles near log mu are still resolved.
inline Eigen::VectorXd bayes_increment(const Eigen::Ref<const Eigen::VectorXd>& belief,
                                       const LikelihoodModel& lik, AgentIndex agent,
                                       Signal signal) {
  const auto log_lik = lik.log_lik(agent, signal);
  if (static_cast<std::size_t>(belief.size()) != lik.state_count()) {
    throw std::invalid_argument("belief and likelihood disagree on the number of states");
  }
  Eigen::Index top = 0;
  belief.maxCoeff(&top);
  const double ref = log_lik(top);
  double tilt = 0.0;
  for (Eigen::Index k = 0; k < belief.size(); ++k) {
    tilt += std::exp(belief(k)) * std::expm1(log_lik(k) - ref);
  }
  const double log_normalizer = std::log1p(tilt);
  Eigen::VectorXd increment(belief.size());
  for (Eigen::Index k = 0; k < belief.size(); ++k) {
    increment(k) = (log_lik(k) - ref) - log_normalizer;
  }
  return increment;
}

/// Bayes' rule on a log belief.
inline LogBelief bayes_update(const Eigen::Ref<const Eigen::VectorXd>& belief,
                              const LikelihoodModel& lik, AgentIndex agent, Signal signal) {
  return belief + bayes_increment(belief, lik, agent, signal);
}

/// Total variation between `base` and the distribution `base + increment`,
/// with each difference formed as e^base |expm1(increment)|.
inline double tv_from_increment(const Eigen::Ref<const Eigen::VectorXd>& base,
                                const Eigen::Ref<const Eigen::VectorXd>& increment) {
  double sum = 0.0;
  for (Eigen::Index k = 0; k < base.size(); ++k) {
    sum += std::exp(base(k)) * std::abs(std::expm1(increment(k)));
  }
  return std::min(1.0, 0.5 * sum);
}

/// Total variation distance between two normalized log beliefs.
inline double tv_distance(const Eigen::Ref<const Eigen::VectorXd>& p,
                          const Eigen::Ref<const Eigen::VectorXd>& q) {
  if (p.size() != q.size()) throw std::invalid_argument("tv_distance: size mismatch");
  double sum = 0.0;
  for (Eigen::Index k = 0; k < p.size(); ++k) {
    if (p(k) == q(k)) continue;  // also covers both -inf
    if (q(k) == -std::numeric_limits<double>::infinity()) {
      sum += std::exp(p(k));
    } else {
      sum += std::exp(q(k)) * std::abs(std::expm1(p(k) - q(k)));
    }
  }
  return std::min(1.0, 0.5 * sum);
}

struct InformativenessVerdict {
  AgentIndex agent = 0;
  double tv = 0.0;
  bool informative = false;
  double threshold = 1.0;
};

inline void check_threshold(double tau) {
  if (!(tau > 0.0 && tau <= 1.0)) {
    throw std::invalid_argument("threshold must lie in (0, 1], got " + std::to_string(tau));
  }
}

/// A signal is informative when its Bayes posterior moves the previous
/// belief by at least `tau` in total variation. Ties count as informative.
inline InformativenessVerdict is_informative(const Eigen::Ref<const Eigen::VectorXd>& belief_prev,
                                             const LikelihoodModel& lik, AgentIndex agent,
                                             Signal signal, double tau) {
  check_threshold(tau);
  const Eigen::VectorXd increment = bayes_increment(belief_prev, lik, agent, signal);
  const double tv = tv_from_increment(belief_prev, increment);
  return {agent, tv, tv >= tau, tau};
}

/// Closed-form informativeness for two states, where `epsilon_prev` is the
/// mass on the false state and r = l(s|true) / l(s|false).
inline bool binary_informative(double epsilon_prev, double r, double tau) {
  if (!(epsilon_prev > 0.0 && epsilon_prev < 1.0)) {
    throw std::invalid_argument("binary_informative: epsilon must lie in (0, 1)");
  }
  if (!(r > 0.0) || !std::isfinite(r)) {
    throw std::invalid_argument("binary_informative: likelihood ratio must be positive and finite");
  }
  check_threshold(tau);
  const double eps = epsilon_prev;
  const double spread = eps * (1.0 - eps);
  if (r >= 1.0) {
    if (!(eps > tau)) return false;
    return r >= (tau * eps + spread) / (spread - tau * (1.0 - eps));
  }
  if (!(eps < 1.0 - tau)) return false;
  return r <= (spread - tau * eps) / (spread + tau * (1.0 - eps));
}

/// phi_t = Q phi_{t-1} + log l(s_t | .), row per agent.
inline Eigen::MatrixXd potential_update(const Eigen::MatrixXd& potentials_prev,
                                        const Eigen::MatrixXd& mixing, const LikelihoodModel& lik,
                                        std::span<const Signal> signals) {
  const Eigen::Index n = potentials_prev.rows();
  if (mixing.rows() != n || mixing.cols() != n ||
      static_cast<std::size_t>(n) != lik.agent_count() || signals.size() != lik.agent_count() ||
      static_cast<std::size_t>(potentials_prev.cols()) != lik.state_count()) {
    throw std::invalid_argument("potential_update: dimension mismatch");
  }
  Eigen::MatrixXd next = mixing * potentials_prev;
  for (Eigen::Index i = 0; i < n; ++i) {
    next.row(i) += lik.log_lik(static_cast<AgentIndex>(i), signals[static_cast<std::size_t>(i)]);
  }
  return next;
}

/// log mu_t = log mu_0 + phi_t, renormalized per agent.
///
/// Potentials are shifted by their row maximum first so the normalization
/// never subtracts two large magnitudes; equal potentials stay equal.
inline Eigen::MatrixXd belief_from_potentials(const Eigen::MatrixXd& initial_log_belief,
                                              const Eigen::MatrixXd& potentials) {
  if (initial_log_belief.rows() != potentials.rows() ||
      initial_log_belief.cols() != potentials.cols()) {
    throw std::invalid_argument("belief_from_potentials: dimension mismatch");
  }
  Eigen::MatrixXd out(potentials.rows(), potentials.cols());
  for (Eigen::Index i = 0; i < potentials.rows(); ++i) {
    const Eigen::VectorXd centered =
        (potentials.row(i).array() - potentials.row(i).maxCoeff()).transpose();
    const Eigen::VectorXd joint = initial_log_belief.row(i).transpose() + centered;
    out.row(i) = normalize_log(joint).transpose();
  }
  return out;
}

}  // namespace switchlearn
