#include "diffusia/graph.hpp"

#include <algorithm>
#include <deque>
#include <stdexcept>

namespace diffusia::graph {

InfoNetwork InfoNetwork::build(const std::vector<std::pair<std::string, std::string>>& edges) {
    InfoNetwork net;
    auto intern = [&net](const std::string& id) -> uint32_t {
        auto [it, inserted] = net.intern_.try_emplace(id, static_cast<uint32_t>(net.names_.size()));
        if (inserted) net.names_.push_back(id);
        return it->second;
    };
    std::vector<std::pair<uint32_t, uint32_t>> pairs;
    pairs.reserve(edges.size());
    for (const auto& [src, dst] : edges) {
        if (src == dst) {
            ++net.dropped_self_loops_;
            continue;
        }
        pairs.emplace_back(intern(src), intern(dst));
    }
    std::sort(pairs.begin(), pairs.end());
    pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());

    const size_t n = net.names_.size();
    net.follower_offsets_.assign(n + 1, 0);
    net.followee_offsets_.assign(n + 1, 0);
    for (const auto& [s, d] : pairs) {
        ++net.follower_offsets_[s + 1];
        ++net.followee_offsets_[d + 1];
    }
    for (size_t i = 1; i <= n; ++i) {
        net.follower_offsets_[i] += net.follower_offsets_[i - 1];
        net.followee_offsets_[i] += net.followee_offsets_[i - 1];
    }
    net.follower_targets_.resize(pairs.size());
    net.followee_targets_.resize(pairs.size());
    std::vector<size_t> fill_f(net.follower_offsets_.begin(), net.follower_offsets_.end() - 1);
    std::vector<size_t> fill_e(net.followee_offsets_.begin(), net.followee_offsets_.end() - 1);
    for (const auto& [s, d] : pairs) {
        net.follower_targets_[fill_f[s]++] = d;
        net.followee_targets_[fill_e[d]++] = s;
    }
    return net;
}

uint32_t InfoNetwork::intern_id(const std::string& id) const {
    auto it = intern_.find(id);
    if (it == intern_.end()) throw std::runtime_error("unknown node " + id);
    return it->second;
}

std::span<const uint32_t> InfoNetwork::followers(uint32_t node) const {
    return {follower_targets_.data() + follower_offsets_[node],
            follower_offsets_[node + 1] - follower_offsets_[node]};
}

std::span<const uint32_t> InfoNetwork::followees(uint32_t node) const {
    return {followee_targets_.data() + followee_offsets_[node],
            followee_offsets_[node + 1] - followee_offsets_[node]};
}

std::vector<std::string> InfoNetwork::follower_names(const std::string& id) const {
    std::vector<std::string> out;
    auto it = intern_.find(id);
    if (it == intern_.end()) return out;
    for (uint32_t f : followers(it->second)) out.push_back(names_[f]);
    return out;
}

int InfoNetwork::shortest_path_len(const std::string& from, const std::string& to,
                                   int cap) const {
    auto fi = intern_.find(from);
    auto ti = intern_.find(to);
    if (fi == intern_.end() || ti == intern_.end()) return cap + 1;
    return shortest_path_len(fi->second, ti->second, cap);
}

int InfoNetwork::shortest_path_len(uint32_t from, uint32_t to, int cap) const {
    if (cap < 1) throw std::runtime_error("shortest_path_len: cap must be >= 1");
    if (from == to) return 0;
    // bounded BFS with per-call scratch
    std::unordered_map<uint32_t, int> dist;
    dist[from] = 0;
    std::deque<uint32_t> queue{from};
    while (!queue.empty()) {
        uint32_t u = queue.front();
        queue.pop_front();
        int d = dist[u];
        if (d >= cap) continue;
        for (uint32_t v : followers(u)) {
            if (dist.count(v)) continue;
            if (v == to) return d + 1;
            dist[v] = d + 1;
            queue.push_back(v);
        }
    }
    return cap + 1;
}

std::unordered_set<uint32_t> InfoNetwork::susceptible_set(
    const std::vector<uint32_t>& participants) const {
    std::unordered_set<uint32_t> part(participants.begin(), participants.end());
    std::unordered_set<uint32_t> out;
    for (uint32_t p : participants)
        for (uint32_t f : followers(p))
            if (!part.count(f)) out.insert(f);
    return out;
}

std::unordered_set<std::string> InfoNetwork::susceptible_set(
    const std::vector<std::string>& participants) const {
    std::vector<uint32_t> ids;
    for (const auto& p : participants) {
        auto it = intern_.find(p);
        if (it != intern_.end()) ids.push_back(it->second);
    }
    std::unordered_set<std::string> out;
    for (uint32_t v : susceptible_set(ids)) out.insert(names_[v]);
    // participants unknown to the graph still must not appear
    for (const auto& p : participants) out.erase(p);
    return out;
}

GrowthCurves growth_curves(const InfoNetwork& net, const Cascade& cascade,
                           const std::vector<int64_t>& bin_edges) {
    if (bin_edges.empty() || bin_edges.front() < cascade.root_timestamp)
        throw std::runtime_error("growth_curves: bin_edges must start at/after root timestamp");
    for (size_t i = 1; i < bin_edges.size(); ++i)
        if (bin_edges[i] <= bin_edges[i - 1])
            throw std::runtime_error("growth_curves: bin_edges must be strictly increasing");

    GrowthCurves curves;
    // cumulative: a user counts as susceptible once ever exposed while not
    // (yet) a participant; conversion to participant does not un-count them
    std::unordered_set<std::string> participants{cascade.root_user};
    std::unordered_set<std::string> exposed;
    std::unordered_set<std::string> ever_susceptible;
    auto expose_followers = [&](const std::string& user) {
        if (!net.has_node(user)) return;
        for (uint32_t f : net.followers(net.intern_id(user))) exposed.insert(net.name(f));
    };
    auto sweep = [&] {
        for (const auto& u : exposed)
            if (!participants.count(u)) ever_susceptible.insert(u);
    };
    expose_followers(cascade.root_user);
    sweep();
    size_t event_idx = 0;
    size_t retweets = 0;
    for (int64_t edge : bin_edges) {
        while (event_idx < cascade.events.size() &&
               cascade.events[event_idx].timestamp <= edge) {
            const auto& ev = cascade.events[event_idx];
            participants.insert(ev.user_id);
            expose_followers(ev.user_id);
            sweep();
            ++retweets;
            ++event_idx;
        }
        curves.retweet_counts.push_back(retweets);
        curves.susceptible_counts.push_back(ever_susceptible.size());
    }
    curves.events_beyond_last_edge = cascade.events.size() - event_idx;
    return curves;
}

}  // namespace diffusia::graph
