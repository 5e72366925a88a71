#pragma once

#include "switchlearn/model.hpp"

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace switchlearn {

/// Name written into output headers so results can be traced to the generator.
inline constexpr std::string_view kRngName = "splitmix64-counter-v1";

/// SplitMix64 finalizer.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Uniform draw in [0, 1) determined only by (seed, round, agent).
constexpr double counter_uniform(std::uint64_t seed, std::uint64_t round, std::uint64_t agent) {
  const std::uint64_t bits = splitmix64(splitmix64(splitmix64(seed) ^ round) ^ agent);
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

/// Inverse-CDF lookup of `u` in a probability column.
inline Signal sample_signal(std::span<const double> probabilities, double u) {
  double cumulative = 0.0;
  for (std::size_t s = 0; s < probabilities.size(); ++s) {
    cumulative += probabilities[s];
    if (u < cumulative) return s;
  }
  // u landed in the rounding slack above the last cumulative sum.
  for (std::size_t s = probabilities.size(); s-- > 0;) {
    if (probabilities[s] > 0.0) return s;
  }
  return 0;
}

/// Signals for rounds 0..T, one per agent per round.
class SignalTable {
 public:
  SignalTable(std::size_t rounds, std::size_t agents)
      : agents_(agents), data_((rounds + 1) * agents, 0) {}

  [[nodiscard]] std::size_t rounds() const { return agents_ == 0 ? 0 : data_.size() / agents_ - 1; }
  [[nodiscard]] std::size_t agents() const { return agents_; }
  [[nodiscard]] std::span<const Signal> at(std::size_t round) const {
    return {data_.data() + round * agents_, agents_};
  }
  Signal& operator()(std::size_t round, AgentIndex agent) { return data_[round * agents_ + agent]; }
  Signal operator()(std::size_t round, AgentIndex agent) const {
    return data_[round * agents_ + agent];
  }

 private:
  std::size_t agents_;
  std::vector<Signal> data_;
};

/// i.i.d. signals drawn from l_i(. | theta) for the realized state.
inline SignalTable generate_signals(const LikelihoodModel& lik, const StateSpace& space,
                                    std::uint64_t seed, std::size_t rounds) {
  const std::size_t n = lik.agent_count();
  std::vector<Eigen::VectorXd> columns;
  columns.reserve(n);
  for (AgentIndex i = 0; i < n; ++i) columns.push_back(lik.distribution(i, space.true_state()));
  SignalTable table(rounds, n);
  for (std::size_t t = 0; t <= rounds; ++t) {
    for (AgentIndex i = 0; i < n; ++i) {
      const Eigen::VectorXd& col = columns[i];
      table(t, i) = sample_signal({col.data(), static_cast<std::size_t>(col.size())},
                                  counter_uniform(seed, t, i));
    }
  }
  return table;
}

}  // namespace switchlearn
