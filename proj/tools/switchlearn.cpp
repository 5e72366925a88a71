// Command-line driver: run, compare, analyze, validate.

#include "switchlearn/switchlearn.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace {

constexpr int kValidationFailure = 2;

int cmd_validate(const std::string& config_path) {
  const auto config = switchlearn::load_config(config_path);
  const auto sc = switchlearn::build_scenario(config);
  const auto report = switchlearn::validate_assumptions(sc.likelihood, sc.network, sc.space);
  switchlearn::write_validation(std::cout, report, sc.space);
  return report.passed() ? 0 : kValidationFailure;
}

int cmd_analyze(const std::string& config_path, const std::string& csv_path) {
  const auto config = switchlearn::load_config(config_path);
  const auto sc = switchlearn::build_scenario(config);
  const auto report = switchlearn::identifiability(sc.likelihood, sc.space);
  switchlearn::write_report(std::cout, report, sc.space);
  if (!csv_path.empty()) {
    std::ofstream out(csv_path);
    if (!out) throw switchlearn::ExportError("cannot write '" + csv_path + "'");
    switchlearn::write_report_csv(out, report, sc.space);
  }
  return 0;
}

int cmd_run(const std::string& config_path, std::optional<std::uint64_t> seed,
            std::optional<std::size_t> replicas, const std::string& out_dir) {
  auto config = switchlearn::load_config(config_path);
  if (seed) config.seed = *seed;
  if (replicas) config.replicas = *replicas;
  config.validate();
  const auto result = switchlearn::run_experiment(config);
  switchlearn::export_experiment(config, result, out_dir);
  std::size_t reached = 0;
  double comm = 0.0;
  for (const auto& rec : result.replicas) {
    if (rec.consensus_round) ++reached;
    comm += rec.ledger.mean_fraction();
  }
  std::cout << "replicas reaching consensus: " << reached << '/' << result.replicas.size() << '\n'
            << "mean communication fraction: " << comm / static_cast<double>(result.replicas.size())
            << '\n'
            << "outputs written to " << out_dir << '\n';
  return 0;
}

int cmd_compare(const std::string& config_path, const std::string& out_dir,
                std::optional<std::size_t> agent) {
  auto config = switchlearn::load_config(config_path);
  if (agent) config.designated_agent = *agent;
  config.validate();
  const auto result = switchlearn::compare_baseline(config);
  switchlearn::export_comparison(config, result, out_dir);
  std::cout << "comparison written to " << out_dir << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Switching Bayesian/non-Bayesian social learning simulator"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "out";
  std::string csv_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> replicas;
  std::optional<std::size_t> agent;

  auto* run = app.add_subcommand("run", "Simulate the switching protocol and export trajectories");
  run->add_option("--config", config_path, "Experiment config (JSON)")->required();
  run->add_option("--seed", seed, "Override the base seed");
  run->add_option("--replicas", replicas, "Override the replica count");
  run->add_option("--out", out_dir, "Output directory");

  auto* compare = app.add_subcommand("compare", "Switching protocol vs all-time communication");
  compare->add_option("--config", config_path, "Experiment config (JSON)")->required();
  compare->add_option("--out", out_dir, "Output directory")->required();
  compare->add_option("--agent", agent, "Designated agent for the paired trajectory");

  auto* analyze = app.add_subcommand("analyze", "Print the identifiability report");
  analyze->add_option("--config", config_path, "Experiment config (JSON)")->required();
  analyze->add_option("--csv", csv_path, "Also write the report as CSV");

  auto* validate = app.add_subcommand("validate", "Check the model assumptions only");
  validate->add_option("--config", config_path, "Experiment config (JSON)")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(config_path, seed, replicas, out_dir);
    if (*compare) return cmd_compare(config_path, out_dir, agent);
    if (*analyze) return cmd_analyze(config_path, csv_path);
    if (*validate) return cmd_validate(config_path);
  } catch (const switchlearn::AssumptionError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kValidationFailure;
  } catch (const switchlearn::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kValidationFailure;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kValidationFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
