#include "switchlearn/switchlearn.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

using namespace switchlearn;

namespace {

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.agents = 4;
  c.states = 3;
  c.rounds = 120;
  c.replicas = 3;
  c.seed = 99;
  c.likelihood = OneDistinguishingState{0.5, 0.2};
  return c;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("switchlearn_test_" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

}  // namespace

TEST(Signals, CounterUniformIsDeterministicAndInRange) {
  for (std::uint64_t t = 0; t < 1000; ++t) {
    const double u = counter_uniform(5, t, 3);
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
    EXPECT_EQ(u, counter_uniform(5, t, 3));
  }
  EXPECT_NE(counter_uniform(5, 1, 3), counter_uniform(6, 1, 3));
  EXPECT_NE(counter_uniform(5, 1, 3), counter_uniform(5, 1, 4));
}

TEST(Signals, PointMassAlwaysSampled) {
  const std::vector<double> mass{0.0, 1.0, 0.0};
  for (std::uint64_t t = 0; t < 1000; ++t) EXPECT_EQ(sample_signal(mass, counter_uniform(1, t, 0)), 1u);
  EXPECT_EQ(sample_signal(mass, 0.999999999999), 1u);
}

TEST(Signals, EmpiricalFrequenciesMatchTrueStateColumn) {
  Eigen::MatrixXd t(3, 2);
  t << 0.2, 0.5, 0.3, 0.25, 0.5, 0.25;
  const auto lik = LikelihoodModel::from_probabilities({t, t});
  const auto space = StateSpace::numbered(2, 1);
  const std::size_t rounds = 100000;
  const auto signals = generate_signals(lik, space, 2024, rounds);
  for (AgentIndex i = 0; i < 2; ++i) {
    std::vector<double> counts(3, 0.0);
    for (std::size_t r = 0; r <= rounds; ++r) counts[signals(r, i)] += 1.0;
    // Pearson chi-square with 2 degrees of freedom; 13.8 is the 0.999 quantile.
    double chi2 = 0.0;
    const double total = static_cast<double>(rounds + 1);
    for (Eigen::Index s = 0; s < 3; ++s) {
      const double expected = total * t(s, 1);
      chi2 += (counts[static_cast<std::size_t>(s)] - expected) * (counts[static_cast<std::size_t>(s)] - expected) / expected;
    }
    EXPECT_LT(chi2, 13.8) << "agent " << i;
  }
}

TEST(Signals, TablesReproduceFromSeed) {
  const auto sc = build_scenario(small_config());
  const auto a = generate_signals(sc.likelihood, sc.space, 7, 50);
  const auto b = generate_signals(sc.likelihood, sc.space, 7, 50);
  for (std::size_t t = 0; t <= 50; ++t) {
    for (AgentIndex i = 0; i < 4; ++i) EXPECT_EQ(a(t, i), b(t, i));
  }
}

TEST(RunRound, SingleAgentIsPureBayes) {
  Eigen::MatrixXd t(2, 3);
  t << 0.3, 0.6, 0.5, 0.7, 0.4, 0.5;
  const auto lik = LikelihoodModel::from_probabilities({t});
  const auto net = metropolis_weights({}, 1);
  const std::vector<Signal> s0{1};
  BeliefState state = initial_state(Prior::uniform(3), lik, s0);
  Eigen::VectorXd bayes = state.log_belief.row(0).transpose();
  for (std::uint64_t r = 1; r <= 10000; ++r) {
    const std::vector<Signal> s{static_cast<Signal>(counter_uniform(3, r, 0) < 0.5)};
    auto out = run_round(state, net, lik, StateSpace::numbered(3), 1e-17, s);
    EXPECT_EQ(out.mixing.matrix()(0, 0), 1.0);
    bayes = oracle::bayes(bayes, lik.log_lik(0, s[0]));
    state = std::move(out.state);
    // Both sides round once per step, so the gap grows with t times the ulp of the largest entry.
    const double scale = std::max(1.0, bayes.cwiseAbs().maxCoeff());
    ASSERT_LT((state.log_belief.row(0).transpose() - bayes).cwiseAbs().maxCoeff(), 1e-11 * scale) << r;
  }
}

TEST(RunRound, AllInformativeMeansNoMixing) {
  std::mt19937_64 rng(71);
  const std::size_t n = 4, m = 3;
  const auto lik = LikelihoodModel::from_probabilities(oracle::random_tables(n, m, 2, rng));
  const auto net = Network::from_weights(oracle::random_weights(n, rng));
  const std::vector<Signal> s0{0, 1, 0, 1};
  BeliefState state = initial_state(Prior::uniform(m), lik, s0);
  for (int r = 0; r < 20; ++r) {
    std::vector<Signal> s(n);
    for (auto& v : s) v = rng() % 2;
    auto out = run_round(state, net, lik, 1e-300, s);
    if (!out.mixing.uninformative().empty()) continue;
    EXPECT_EQ(out.mixing.matrix(), Eigen::MatrixXd::Identity(n, n));
    for (AgentIndex i = 0; i < n; ++i) {
      const Eigen::VectorXd expected =
          oracle::bayes(state.log_belief.row(static_cast<Eigen::Index>(i)).transpose(), lik.log_lik(i, s[i]));
      EXPECT_LT((out.state.log_belief.row(static_cast<Eigen::Index>(i)).transpose() - expected)
                    .cwiseAbs()
                    .maxCoeff(),
                1e-10);
    }
    state = std::move(out.state);
  }
}

TEST(RunRound, VerdictsUseThePreviousBelief) {
  std::mt19937_64 rng(73);
  const auto lik = LikelihoodModel::from_probabilities(oracle::random_tables(3, 3, 2, rng));
  const auto net = metropolis_weights(complete_edges(3), 3);
  const std::vector<Signal> s0{0, 1, 1};
  const BeliefState state = initial_state(Prior::uniform(3), lik, s0);
  const std::vector<Signal> s{1, 0, 1};
  const auto out = run_round(state, net, lik, 0.01, s);
  for (AgentIndex i = 0; i < 3; ++i) {
    const Eigen::VectorXd prev = state.log_belief.row(static_cast<Eigen::Index>(i)).transpose();
    EXPECT_NEAR(out.verdicts[i].tv, oracle::tv(oracle::bayes(prev, lik.log_lik(i, s[i])), prev), 1e-14);
  }
}

TEST(Simulate, ThresholdOneMatchesAllTimeBaselineExactly) {
  auto config = small_config();
  const auto sc = build_scenario(config);
  const auto signals = generate_signals(sc.likelihood, sc.space, 5, config.rounds);
  const auto a = simulate(sc, 1.0, signals, record_options(config, 0));
  const auto b = simulate_all_time(sc, signals, record_options(config, 0));
  ASSERT_EQ(a.log_beliefs.size(), b.log_beliefs.size());
  for (std::size_t k = 0; k < a.log_beliefs.size(); ++k) EXPECT_EQ(a.log_beliefs[k], b.log_beliefs[k]);
  EXPECT_EQ(a.ledger.events(), b.ledger.events());
  EXPECT_EQ(a.tv_series, b.tv_series);
}

TEST(Simulate, ThinningKeepsEndpoints) {
  auto config = small_config();
  config.full_storage_limit = 50;
  config.thinning_stride = 7;
  const auto sc = build_scenario(config);
  const auto signals = generate_signals(sc.likelihood, sc.space, 5, config.rounds);
  const auto rec = simulate(sc, config.tau, signals, record_options(config, 0));
  EXPECT_EQ(rec.stored_rounds.front(), 0u);
  EXPECT_EQ(rec.stored_rounds.back(), config.rounds);
  for (std::size_t k = 1; k + 1 < rec.stored_rounds.size(); ++k) EXPECT_EQ(rec.stored_rounds[k] % 7, 0u);
  EXPECT_EQ(rec.uninformative.size(), config.rounds);
  EXPECT_EQ(static_cast<std::size_t>(rec.tv_series.rows()), config.rounds);
}

TEST(Simulate, RecordedSupportsRebuildTheSwitchingSequence) {
  const auto config = small_config();
  const auto sc = build_scenario(config);
  const auto signals = generate_signals(sc.likelihood, sc.space, 11, config.rounds);
  const auto rec = simulate(sc, config.tau, signals, record_options(config, 0));
  const auto seq = switching_sequence(rec, sc.network);
  for (std::size_t t = 0; t < seq.size(); ++t) EXPECT_EQ(seq[t].support(), rec.q_supports[t]);
  for (std::size_t t = 0; t < seq.size(); ++t) {
    for (AgentIndex i = 0; i < config.agents; ++i) {
      const bool silent = std::find(rec.uninformative[t].begin(), rec.uninformative[t].end(), i) ==
                          rec.uninformative[t].end();
      EXPECT_EQ(silent, rec.tv_series(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(i)) >= config.tau);
    }
  }
}

TEST(Experiment, RefusesFailedAssumptions) {
  auto config = small_config();
  Eigen::MatrixXd flat(2, 3);
  flat << 0.5, 0.5, 0.4, 0.5, 0.5, 0.6;
  config.likelihood = LikelihoodTables{std::vector<Eigen::MatrixXd>(4, flat)};
  EXPECT_THROW(run_experiment(config), AssumptionError);
  EXPECT_THROW(compare_baseline(config), AssumptionError);
}

TEST(Experiment, ReplicasAreDeterministic) {
  const auto config = small_config();
  const auto a = run_experiment(config);
  const auto b = run_experiment(config);
  ASSERT_EQ(a.replicas.size(), 3u);
  for (std::size_t r = 0; r < 3; ++r) {
    EXPECT_EQ(a.replicas[r].seed, config.seed + r);
    EXPECT_EQ(a.replicas[r].final_log_belief(), b.replicas[r].final_log_belief());
    EXPECT_EQ(a.replicas[r].ledger.events(), b.replicas[r].ledger.events());
  }
}

TEST(Experiment, LearnsTheTrueStateOnDefaultScenario) {
  ExperimentConfig config;
  const auto result = run_experiment(config);
  ASSERT_GE(result.replicas.size(), 20u);
  for (const auto& rec : result.replicas) {
    const Eigen::MatrixXd& final = rec.final_log_belief();
    for (Eigen::Index i = 0; i < final.rows(); ++i) {
      Eigen::Index argmax = 0;
      final.row(i).maxCoeff(&argmax);
      EXPECT_EQ(static_cast<StateIndex>(argmax), config.true_state) << "replica " << rec.replica;
      EXPECT_NEAR(final.row(i).array().exp().sum(), 1.0, 1e-10);
    }
  }
}

TEST(Experiment, CommunicationDoesNotThinOutLateInTheRun) {
  // Once beliefs have concentrated, Bayes steps move them by less than tau
  // and agents fall back to exchanging. Late rounds communicate at least as
  // often as early rounds.
  ExperimentConfig config;
  config.replicas = 20;
  const auto result = run_experiment(config);
  const std::size_t third = config.rounds / 3;
  for (const auto& rec : result.replicas) {
    std::size_t early = 0, late = 0;
    for (const auto& e : rec.ledger.events()) {
      if (e.round <= third) ++early;
      if (e.round > config.rounds - third) ++late;
    }
    EXPECT_GE(late, early) << "replica " << rec.replica;
    for (std::size_t t = 0; t < config.rounds; ++t) {
      if ((rec.tv_series.row(static_cast<Eigen::Index>(t)).array() < config.tau).all()) {
        EXPECT_EQ(rec.uninformative[t].size(), config.agents);
      }
    }
  }
}

TEST(Experiment, IntervalConnectivityOverLongWindows) {
  ExperimentConfig config;
  config.replicas = 20;
  const auto result = run_experiment(config);
  const std::size_t window = 200;
  for (const auto& rec : result.replicas) {
    const auto seq = switching_sequence(rec, result.scenario.network);
    for (std::size_t start = 1; start + window - 1 <= config.rounds; start += window) {
      EXPECT_TRUE(check_interval_connectivity(seq, {start, start + window - 1}))
          << "replica " << rec.replica << " window starting " << start;
    }
  }
}

TEST(Compare, SharesSignalsAndDiffersOnlyInMixing) {
  auto config = small_config();
  const auto result = compare_baseline(config);
  ASSERT_EQ(result.switching.size(), result.baseline.size());
  for (std::size_t r = 0; r < result.switching.size(); ++r) {
    EXPECT_EQ(result.switching[r].log_beliefs.front(), result.baseline[r].log_beliefs.front());
    EXPECT_DOUBLE_EQ(result.baseline[r].ledger.mean_fraction(), 1.0);
  }
}

TEST(Export, BeliefsRoundTrip) {
  const auto config = small_config();
  const auto result = run_experiment(config);
  const auto dir = scratch_dir("roundtrip");
  export_experiment(config, result, dir);
  ASSERT_TRUE(std::filesystem::exists(dir / "beliefs.csv"));
  ASSERT_TRUE(std::filesystem::exists(dir / "comm.csv"));
  ASSERT_TRUE(std::filesystem::exists(dir / "summary.txt"));
  std::ifstream in(dir / "beliefs.csv");
  const auto rows = read_beliefs_csv(in);
  std::size_t k = 0;
  for (const auto& rec : result.replicas) {
    for (std::size_t s = 0; s < rec.stored_rounds.size(); ++s) {
      for (Eigen::Index i = 0; i < rec.log_beliefs[s].rows(); ++i) {
        for (Eigen::Index j = 0; j < rec.log_beliefs[s].cols(); ++j) {
          ASSERT_LT(k, rows.size());
          const auto& row = rows[k++];
          EXPECT_EQ(row.replica, rec.replica);
          EXPECT_EQ(row.round, rec.stored_rounds[s]);
          EXPECT_EQ(row.agent, static_cast<AgentIndex>(i));
          EXPECT_EQ(row.state_label, result.scenario.space.label(static_cast<StateIndex>(j)));
          const double expected = std::exp(rec.log_beliefs[s](i, j));
          EXPECT_LE(std::abs(row.belief - expected), 1e-15 * std::max(1.0, expected));
        }
      }
    }
  }
  EXPECT_EQ(k, rows.size());
  const std::string comm = slurp(dir / "comm.csv");
  EXPECT_EQ(comm.rfind("# switchlearn rng=splitmix64-counter-v1 seed=99", 0), 0u);
  std::filesystem::remove_all(dir);
}

TEST(Export, SummaryCarriesTheTheoreticalRateExactly) {
  const auto config = small_config();
  const auto result = run_experiment(config);
  std::ostringstream out;
  write_summary(out, config, result);
  const std::string text = out.str();
  const std::string key = "theoretical_rate_nats_per_round: ";
  const auto pos = text.find(key);
  ASSERT_NE(pos, std::string::npos);
  const double parsed = std::stod(text.substr(pos + key.size()));
  EXPECT_EQ(parsed, result.identifiability.asymptotic_rate);
  EXPECT_NE(text.find("replicas_reaching_consensus: "), std::string::npos);
}

TEST(Export, OutputsAreByteIdenticalAcrossRuns) {
  const auto config = small_config();
  const auto a = scratch_dir("det_a");
  const auto b = scratch_dir("det_b");
  export_experiment(config, run_experiment(config), a);
  export_experiment(config, run_experiment(config), b);
  for (const char* f : {"beliefs.csv", "comm.csv", "summary.txt"}) EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  std::filesystem::remove_all(a);
  std::filesystem::remove_all(b);
}

TEST(Export, ComparisonWritesBothArms) {
  const auto config = small_config();
  const auto dir = scratch_dir("compare");
  export_comparison(config, compare_baseline(config), dir);
  for (const char* f : {"switching/beliefs.csv", "baseline/beliefs.csv", "paired.csv", "compare.txt"}) {
    EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
  }
  std::filesystem::remove_all(dir);
}

TEST(Config, ParsesFullDocument) {
  const auto doc = nlohmann::json::parse(R"({
    "n": 3, "m": 2, "state_labels": ["good", "bad"], "true_state_index": 1,
    "tau": 0.001, "rounds": 50, "seed": 4, "replicas": 2,
    "topology": {"kind": "custom", "edges": [[0, 1], [1, 2]]},
    "weights": "metropolis",
    "likelihood": {"tables": [[[0.5, 0.2], [0.5, 0.8]], [[0.5, 0.5], [0.5, 0.5]], [[0.4, 0.6], [0.6, 0.4]]]},
    "prior": [0.25, 0.75],
    "thinning": {"full_until": 10, "every": 5}
  })");
  const auto c = config_from_json(doc);
  EXPECT_EQ(c.agents, 3u);
  EXPECT_EQ(c.true_state, 1u);
  EXPECT_EQ(c.topology, Topology::Custom);
  EXPECT_EQ(c.edges.size(), 2u);
  EXPECT_EQ(c.full_storage_limit, 10u);
  const auto sc = build_scenario(c);
  EXPECT_EQ(sc.space.label(1), "bad");
  EXPECT_NEAR(sc.network.weight(0, 1), 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(std::exp(sc.prior.log_mass()(1)), 0.75, 1e-15);
}

TEST(Config, DefaultsDescribeTheRingScenario) {
  const auto c = config_from_json(nlohmann::json::object());
  const auto sc = build_scenario(c);
  EXPECT_EQ(sc.network.size(), 15u);
  EXPECT_EQ(sc.space.size(), 16u);
  EXPECT_EQ(sc.network.edges().size(), 15u);
  EXPECT_EQ(c.tau, 1e-17);
  EXPECT_EQ(c.rounds, 1000u);
}

TEST(Config, RejectsInvalidDocuments) {
  const char* bad[] = {
      R"({"tau": 0})",
      R"({"tau": 1.5})",
      R"({"topology": "star"})",
      R"({"weights": "uniform"})",
      R"({"n": 3, "m": 2, "prior": [1.0]})",
      R"({"true_state_index": 16})",
      R"({"designated_agent": 15})",
      R"({"likelihood": {"generator": "other"}})",
      R"({"rounds": "many"})",
      R"({"n": 2, "m": 2, "likelihood": {"p_eq": 0.5, "p_diff": 1.0}})",
  };
  for (const char* text : bad) {
    EXPECT_ANY_THROW(build_scenario(config_from_json(nlohmann::json::parse(text)))) << text;
  }
}

TEST(Config, MissingFileIsAConfigError) {
  EXPECT_THROW(load_config("/nonexistent/config.json"), ConfigError);
}
