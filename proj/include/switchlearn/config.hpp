#pragma once

#include "switchlearn/model.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace switchlearn {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Topology { Ring, Complete, Custom };

/// Agent i distinguishes exactly one false state: the (i mod (m-1))-th
/// state after skipping the true one. Binary signals, l(1|state) = p_eq
/// everywhere except p_diff on the distinguished state.
struct OneDistinguishingState {
  double p_eq = 0.5;
  double p_diff = 0.05;
};

/// Explicit per-agent |S_i| x m probability tables, row per signal.
struct LikelihoodTables {
  std::vector<Eigen::MatrixXd> tables;
};

struct ExperimentConfig {
  std::size_t agents = 15;
  std::size_t states = 16;
  std::vector<std::string> state_labels;  // empty: theta_1..theta_m
  StateIndex true_state = 0;

  Topology topology = Topology::Ring;
  std::vector<Edge> edges;                 // custom topology
  std::optional<Eigen::MatrixXd> weights;  // explicit P; otherwise Metropolis

  std::variant<OneDistinguishingState, LikelihoodTables> likelihood = OneDistinguishingState{};
  std::vector<double> prior;  // empty: uniform

  double tau = 1e-17;
  std::size_t rounds = 1000;
  std::uint64_t seed = 1;
  std::size_t replicas = 20;
  double consensus_delta = 1e-6;

  std::size_t full_storage_limit = 10000;
  std::size_t thinning_stride = 10;
  AgentIndex designated_agent = 0;

  /// Checks the scalar invariants; dimension checks happen in build_scenario.
  void validate() const {
    if (!(tau > 0.0 && tau <= 1.0)) throw ConfigError("tau must lie in (0, 1]");
    if (rounds < 1) throw ConfigError("rounds must be at least 1");
    if (replicas < 1) throw ConfigError("replicas must be at least 1");
    if (!(consensus_delta > 0.0 && consensus_delta < 1.0)) {
      throw ConfigError("consensus_delta must lie in (0, 1)");
    }
    if (agents < 1) throw ConfigError("agents must be at least 1");
    if (states < 2) throw ConfigError("states must be at least 2");
    if (true_state >= states) throw ConfigError("true_state_index out of range");
    if (designated_agent >= agents) throw ConfigError("designated_agent out of range");
    if (thinning_stride < 1) throw ConfigError("thinning stride must be at least 1");
  }
};

/// The immutable model objects an experiment runs on.
struct Scenario {
  StateSpace space;
  Prior prior;
  LikelihoodModel likelihood;
  Network network;
};

inline std::vector<Eigen::MatrixXd> one_distinguishing_tables(std::size_t agents,
                                                               std::size_t states,
                                                               StateIndex true_state,
                                                               OneDistinguishingState family) {
  if (!(family.p_eq > 0.0 && family.p_eq < 1.0 && family.p_diff > 0.0 && family.p_diff < 1.0)) {
    throw ConfigError("p_eq and p_diff must lie in (0, 1)");
  }
  std::vector<StateIndex> false_states;
  for (StateIndex k = 0; k < states; ++k) {
    if (k != true_state) false_states.push_back(k);
  }
  std::vector<Eigen::MatrixXd> tables;
  for (AgentIndex i = 0; i < agents; ++i) {
    Eigen::MatrixXd table(2, static_cast<Eigen::Index>(states));
    const StateIndex distinguished = false_states[i % false_states.size()];
    for (StateIndex k = 0; k < states; ++k) {
      const double p_one = k == distinguished ? family.p_diff : family.p_eq;
      table(0, static_cast<Eigen::Index>(k)) = 1.0 - p_one;
      table(1, static_cast<Eigen::Index>(k)) = p_one;
    }
    tables.push_back(std::move(table));
  }
  return tables;
}

inline Scenario build_scenario(const ExperimentConfig& config) {
  config.validate();
  StateSpace space = config.state_labels.empty()
                         ? StateSpace::numbered(config.states, config.true_state)
                         : StateSpace(config.state_labels, config.true_state);
  if (space.size() != config.states) throw ConfigError("state_labels length differs from m");

  Prior prior = config.prior.empty() ? Prior::uniform(config.states)
                                     : Prior::from_probabilities(config.prior);
  if (prior.size() != config.states) throw ConfigError("prior length differs from m");

  std::vector<Eigen::MatrixXd> tables;
  if (const auto* family = std::get_if<OneDistinguishingState>(&config.likelihood)) {
    tables = one_distinguishing_tables(config.agents, config.states, config.true_state, *family);
  } else {
    tables = std::get<LikelihoodTables>(config.likelihood).tables;
  }
  if (tables.size() != config.agents) throw ConfigError("likelihood table count differs from n");
  LikelihoodModel likelihood = LikelihoodModel::from_probabilities(tables);
  if (likelihood.state_count() != config.states) {
    throw ConfigError("likelihood tables have the wrong number of states");
  }

  std::vector<Edge> edges;
  switch (config.topology) {
    case Topology::Ring: edges = ring_edges(config.agents); break;
    case Topology::Complete: edges = complete_edges(config.agents); break;
    case Topology::Custom: edges = config.edges; break;
  }
  std::optional<Network> network;
  if (config.weights) {
    if (config.weights->rows() != static_cast<Eigen::Index>(config.agents)) {
      throw ConfigError("weight matrix size differs from n");
    }
    network = config.topology == Topology::Custom && !config.edges.empty()
                  ? Network(edges, *config.weights)
                  : Network::from_weights(*config.weights);
  } else {
    network = metropolis_weights(edges, config.agents);
  }
  return Scenario{std::move(space), std::move(prior), std::move(likelihood), std::move(*network)};
}

namespace detail {

inline Eigen::MatrixXd matrix_from_json(const nlohmann::json& rows) {
  if (!rows.is_array() || rows.empty()) throw ConfigError("expected a non-empty matrix");
  const std::size_t cols = rows.front().size();
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (!rows[r].is_array() || rows[r].size() != cols) throw ConfigError("ragged matrix");
    for (std::size_t c = 0; c < cols; ++c) {
      out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c].get<double>();
    }
  }
  return out;
}

}  // namespace detail

/// Parses the JSON config document. Missing keys keep their defaults.
inline ExperimentConfig config_from_json(const nlohmann::json& doc) {
  ExperimentConfig c;
  try {
    c.agents = doc.value("n", c.agents);
    c.states = doc.value("m", c.states);
    c.state_labels = doc.value("state_labels", c.state_labels);
    c.true_state = doc.value("true_state_index", c.true_state);
    c.tau = doc.value("tau", c.tau);
    c.rounds = doc.value("rounds", c.rounds);
    c.seed = doc.value("seed", c.seed);
    c.replicas = doc.value("replicas", c.replicas);
    c.consensus_delta = doc.value("consensus_delta", c.consensus_delta);
    c.designated_agent = doc.value("designated_agent", c.designated_agent);

    if (doc.contains("topology")) {
      const auto& topo = doc.at("topology");
      const std::string kind = topo.is_string() ? topo.get<std::string>() : topo.at("kind").get<std::string>();
      if (kind == "ring") {
        c.topology = Topology::Ring;
      } else if (kind == "complete") {
        c.topology = Topology::Complete;
      } else if (kind == "custom") {
        c.topology = Topology::Custom;
        for (const auto& e : topo.at("edges")) {
          c.edges.emplace_back(e.at(0).get<std::size_t>(), e.at(1).get<std::size_t>());
        }
      } else {
        throw ConfigError("unknown topology '" + kind + "'");
      }
    }

    if (doc.contains("weights")) {
      const auto& w = doc.at("weights");
      const std::string rule = w.is_string() ? w.get<std::string>() : w.at("rule").get<std::string>();
      if (rule == "explicit") {
        c.weights = detail::matrix_from_json(w.at("matrix"));
      } else if (rule != "metropolis") {
        throw ConfigError("unknown weight rule '" + rule + "'");
      }
    }

    if (doc.contains("likelihood")) {
      const auto& lik = doc.at("likelihood");
      if (lik.contains("tables")) {
        LikelihoodTables tables;
        for (const auto& t : lik.at("tables")) tables.tables.push_back(detail::matrix_from_json(t));
        c.likelihood = std::move(tables);
      } else {
        const std::string gen = lik.value("generator", std::string("one_distinguishing_state"));
        if (gen != "one_distinguishing_state") throw ConfigError("unknown likelihood generator '" + gen + "'");
        OneDistinguishingState family;
        family.p_eq = lik.value("p_eq", family.p_eq);
        family.p_diff = lik.value("p_diff", family.p_diff);
        c.likelihood = family;
      }
    }

    if (doc.contains("prior")) {
      const auto& prior = doc.at("prior");
      if (prior.is_string()) {
        if (prior.get<std::string>() != "uniform") throw ConfigError("unknown prior");
      } else {
        c.prior = prior.get<std::vector<double>>();
      }
    }

    if (doc.contains("thinning")) {
      const auto& th = doc.at("thinning");
      c.full_storage_limit = th.value("full_until", c.full_storage_limit);
      c.thinning_stride = th.value("every", c.thinning_stride);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  c.validate();
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("cannot parse config '" + path + "': " + e.what());
  }
  return config_from_json(doc);
}

}  // namespace switchlearn
