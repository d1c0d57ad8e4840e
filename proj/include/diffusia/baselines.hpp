#pragma once

#include <cstdint>
#include <string>
#include <unordered_set>
#include <vector>

#include "diffusia/graph.hpp"

namespace diffusia::baselines {

struct SirConfig {
    double beta = 0.1;    // transmission probability per contact-step
    double gamma = 0.2;   // recovery probability per step
    size_t max_steps = 50;
    uint64_t seed = 0;
};

struct SirStep {
    std::vector<uint32_t> infected;
    std::vector<uint32_t> recovered;
    std::vector<uint32_t> newly_active;
};

struct SirResult {
    std::vector<SirStep> steps;
    std::unordered_set<uint32_t> activated;  // ever infected
};

// Synchronous updates: each infected node infects each susceptible follower
// with prob beta, then recovers with prob gamma. Deterministic per seed.
SirResult simulate_sir(const graph::InfoNetwork& net, const std::vector<uint32_t>& seeds,
                       const SirConfig& cfg);

struct ThresholdConfig {
    bool uniform_random = true;  // per-node threshold ~ U[0,1]; else fixed value
    double fixed_value = 0.5;
    size_t max_steps = 100;
    uint64_t seed = 0;
};

struct ThresholdResult {
    std::vector<std::vector<uint32_t>> activation_rounds;  // newly active per round
    std::unordered_set<uint32_t> activated;
};

// Node activates when the weighted sum of its active followees reaches its
// threshold (weights = 1/in-degree; activation at equality). Monotone,
// synchronous rounds, runs to fixpoint.
ThresholdResult simulate_threshold(const graph::InfoNetwork& net,
                                   const std::vector<uint32_t>& seeds,
                                   const ThresholdConfig& cfg);

// candidate predicted positive iff in the final activated set
std::vector<int> as_classifier(const std::unordered_set<uint32_t>& activated,
                               const std::vector<uint32_t>& candidates);

}  // namespace diffusia::baselines
