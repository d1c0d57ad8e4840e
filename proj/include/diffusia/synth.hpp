#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "diffusia/corpus.hpp"

namespace diffusia::synth {

struct WorldConfig {
    size_t n_users = 2000;
    size_t n_tweets = 5000;  // root tweets
    size_t n_news = 3000;
    size_t n_hashtags = 60;
    size_t lexicon_size = 209;
    size_t follows_per_user = 5;
    double pa_exponent = 1.0;  // preferential attachment strength
    double hate_user_fraction = 0.05;
    double hate_tweet_rate = 0.5;
    double hate_news_coupling = 0.0;  // climate shift on the hateful-tweet rate
    double exogenous_coupling = 0.8;  // gamma_ex in [0,1]
    double hot_topic_prob = 0.5;      // prob a tweet picks the currently hot topic
    int64_t start_time = 1600000000;
    int64_t horizon = 30LL * 86400;       // corpus span
    int64_t obs_window = 7LL * 86400;     // retweet observation window per root
    size_t n_bins = 8;                    // dynamic label bins (log-spaced)
    size_t news_per_tweet = 60;           // window used for the planted news signal
    size_t crisis_topic_stride = 5;       // topics k with k % stride == 0 are crisis topics
    uint64_t seed = 0;

    // planted logistic ground truth
    double bias = -6.0;
    double w_affinity = 6.5;
    double w_news = 4.0;   // multiplied by exogenous_coupling
    double w_hate = 2.0;
};

struct TruthRow {
    std::string tweet_id;
    std::string candidate_id;
    double p_true = 0.0;
    double news_signal = 0.0;  // planted exogenous climate at the root time
    int label = 0;
    std::vector<int> labels_per_bin;
};

struct World {
    corpus::TweetStore tweets;
    corpus::UserStore users;
    corpus::NewsStore news;
    corpus::TrendingStore trending;
    corpus::HateLexicon lexicon;
    std::vector<std::pair<std::string, std::string>> edges;  // (followee, follower)
    std::vector<TruthRow> truth;
    std::vector<int64_t> bin_offsets;  // upper bin edges relative to root time
};

// Deterministic per seed. Retweet labels are Bernoulli draws from a known
// logistic function of (topic affinity, news-topic match, hatefulness); the
// probabilities are persisted in the truth sidecar.
World generate_world(const WorldConfig& cfg);

// Emits tweets.jsonl users.jsonl news.jsonl trending.jsonl edges.jsonl
// lexicon.txt truth.sidecar into dir.
void write_world(const World& world, const std::filesystem::path& dir);

std::vector<TruthRow> load_sidecar(const std::filesystem::path& path);

}  // namespace diffusia::synth
