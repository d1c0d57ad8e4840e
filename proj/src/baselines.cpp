#include "diffusia/baselines.hpp"

#include <algorithm>
#include <stdexcept>

#include "diffusia/rng.hpp"

namespace diffusia::baselines {

SirResult simulate_sir(const graph::InfoNetwork& net, const std::vector<uint32_t>& seeds,
                       const SirConfig& cfg) {
    if (seeds.empty()) throw std::runtime_error("simulate_sir: empty seed set");
    if (cfg.beta < 0.0 || cfg.beta > 1.0 || cfg.gamma < 0.0 || cfg.gamma > 1.0)
        throw std::runtime_error("simulate_sir: probabilities must be in [0,1]");

    Rng rng(cfg.seed ^ 0x51eULL);
    std::unordered_set<uint32_t> infected(seeds.begin(), seeds.end());
    std::unordered_set<uint32_t> recovered;
    SirResult result;
    result.activated = infected;

    for (size_t step = 0; step < cfg.max_steps && !infected.empty(); ++step) {
        // deterministic iteration order: sorted node ids
        std::vector<uint32_t> current(infected.begin(), infected.end());
        std::sort(current.begin(), current.end());

        std::vector<uint32_t> newly;
        for (uint32_t u : current) {
            for (uint32_t f : net.followers(u)) {
                if (infected.count(f) || recovered.count(f)) continue;
                if (rng.next_double() < cfg.beta) {
                    if (std::find(newly.begin(), newly.end(), f) == newly.end())
                        newly.push_back(f);
                }
            }
        }
        for (uint32_t u : current) {
            if (rng.next_double() < cfg.gamma) {
                infected.erase(u);
                recovered.insert(u);
            }
        }
        for (uint32_t f : newly) {
            infected.insert(f);
            result.activated.insert(f);
        }

        SirStep snapshot;
        snapshot.infected.assign(infected.begin(), infected.end());
        std::sort(snapshot.infected.begin(), snapshot.infected.end());
        snapshot.recovered.assign(recovered.begin(), recovered.end());
        std::sort(snapshot.recovered.begin(), snapshot.recovered.end());
        std::sort(newly.begin(), newly.end());
        snapshot.newly_active = std::move(newly);
        result.steps.push_back(std::move(snapshot));
    }
    return result;
}

ThresholdResult simulate_threshold(const graph::InfoNetwork& net,
                                   const std::vector<uint32_t>& seeds,
                                   const ThresholdConfig& cfg) {
    if (seeds.empty()) throw std::runtime_error("simulate_threshold: empty seed set");

    const size_t n = net.node_count();
    std::vector<double> threshold(n);
    Rng rng(cfg.seed ^ 0x7a7e50ULL);
    for (size_t i = 0; i < n; ++i)
        threshold[i] = cfg.uniform_random ? rng.next_double() : cfg.fixed_value;

    std::vector<char> active(n, 0);
    ThresholdResult result;
    std::vector<uint32_t> first_round;
    for (uint32_t s : seeds) {
        if (!active[s]) {
            active[s] = 1;
            result.activated.insert(s);
            first_round.push_back(s);
        }
    }
    std::sort(first_round.begin(), first_round.end());
    result.activation_rounds.push_back(std::move(first_round));

    for (size_t step = 0; step < cfg.max_steps; ++step) {
        std::vector<uint32_t> newly;
        for (uint32_t v = 0; v < n; ++v) {
            if (active[v]) continue;
            auto ins = net.followees(v);
            if (ins.empty()) continue;
            double w = 1.0 / static_cast<double>(ins.size());
            double sum = 0.0;
            size_t n_active = 0;
            for (uint32_t u : ins)
                if (active[u]) { sum += w; ++n_active; }
            // exposure required: an untouched node never activates on a zero sum
            if (n_active > 0 && sum >= threshold[v]) newly.push_back(v);
        }
        if (newly.empty()) break;  // fixpoint
        for (uint32_t v : newly) {
            active[v] = 1;
            result.activated.insert(v);
        }
        result.activation_rounds.push_back(std::move(newly));
    }
    return result;
}

std::vector<int> as_classifier(const std::unordered_set<uint32_t>& activated,
                               const std::vector<uint32_t>& candidates) {
    std::vector<int> out;
    out.reserve(candidates.size());
    for (uint32_t c : candidates) out.push_back(activated.count(c) ? 1 : 0);
    return out;
}

}  // namespace diffusia::baselines
