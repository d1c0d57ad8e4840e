#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace diffusia::graph {

// Directed follower graph. Edge (src, dst) means dst follows src; information
// flows src -> dst. Stored as CSR adjacency over interned 32-bit ids.
class InfoNetwork {
public:
    // (followee, follower) pairs; self-loops dropped and counted, duplicates merged
    static InfoNetwork build(const std::vector<std::pair<std::string, std::string>>& edges);

    size_t node_count() const { return names_.size(); }
    size_t edge_count() const { return follower_targets_.size(); }
    size_t dropped_self_loops() const { return dropped_self_loops_; }

    bool has_node(const std::string& id) const { return intern_.count(id) > 0; }
    uint32_t intern_id(const std::string& id) const;  // throws if unknown
    const std::string& name(uint32_t node) const { return names_[node]; }

    std::span<const uint32_t> followers(uint32_t node) const;  // out-edges
    std::span<const uint32_t> followees(uint32_t node) const;  // in-edges
    std::vector<std::string> follower_names(const std::string& id) const;

    // BFS along follow edges, bounded by cap; returns cap+1 when unreachable
    // or over cap; distance(u, u) = 0. Unknown nodes count as unreachable.
    int shortest_path_len(const std::string& from, const std::string& to, int cap) const;
    int shortest_path_len(uint32_t from, uint32_t to, int cap) const;

    // union of followers(p) over participants, minus participants
    std::unordered_set<uint32_t> susceptible_set(const std::vector<uint32_t>& participants) const;
    std::unordered_set<std::string> susceptible_set(
        const std::vector<std::string>& participants) const;

private:
    std::unordered_map<std::string, uint32_t> intern_;
    std::vector<std::string> names_;
    std::vector<size_t> follower_offsets_, followee_offsets_;
    std::vector<uint32_t> follower_targets_, followee_targets_;
    size_t dropped_self_loops_ = 0;
};

struct CascadeEvent {
    std::string user_id;
    int64_t timestamp = 0;
};

struct Cascade {
    std::string root_tweet_id;
    std::string root_user;
    int64_t root_timestamp = 0;
    std::vector<CascadeEvent> events;  // ascending timestamp, unique users
};

struct GrowthCurves {
    std::vector<size_t> retweet_counts;      // cumulative per bin edge
    std::vector<size_t> susceptible_counts;  // cumulative per bin edge
    size_t events_beyond_last_edge = 0;
};

// Cumulative retweet count and susceptible-set size at each bin edge.
// bin_edges must be strictly increasing, starting at the root timestamp.
GrowthCurves growth_curves(const InfoNetwork& net, const Cascade& cascade,
                           const std::vector<int64_t>& bin_edges);

}  // namespace diffusia::graph
