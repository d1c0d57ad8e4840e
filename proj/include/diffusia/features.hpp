#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "diffusia/corpus.hpp"
#include "diffusia/graph.hpp"
#include "diffusia/text.hpp"

namespace diffusia::features {

// fitted sub-models + stores every feature builder needs
struct FeatureModels {
    const corpus::TweetStore* tweets = nullptr;
    const corpus::UserStore* users = nullptr;
    const corpus::NewsStore* news = nullptr;
    const corpus::TrendingStore* trending = nullptr;
    const corpus::HateLexicon* lexicon = nullptr;
    const graph::InfoNetwork* net = nullptr;
    const text::TfidfModel* tfidf_tweets = nullptr;  // fitted on tweet texts
    const text::TfidfModel* tfidf_news = nullptr;    // fitted on headlines
    const text::DocEmbeddingModel* emb_tweets = nullptr;  // dim 50 default
    const text::DocEmbeddingModel* emb_news = nullptr;    // dim 500 default
    size_t history_window = 30;
    size_t news_per_tweet = 60;
    int sp_cap = 6;
};

struct UserHistoryFeatures {
    std::vector<double> tfidf_hist;   // selected_dim of tfidf_tweets
    std::vector<double> hl_hist;      // |H|
    double hate_ratio = 0.0;          // [0,1]
    double rt_hate_ratio = 0.0;       // user's retweets of hateful roots / (of non-hateful + 1)
    double rt_volume_ratio = 0.0;     // retweets received on hateful / (on non-hateful + 1)
    double followers_count = 0.0;
    double account_age_days = 0.0;
    double topic_count = 0.0;
    // scalar block order used in concatenation
    std::vector<double> scalars() const;
    static constexpr size_t kScalarCount = 6;
};

struct PeerFeatures {
    int sp_len = 0;  // cap+1 sentinel when unreachable
    int64_t past_rts_of_root = 0;
};

// all computed strictly over data timestamped before t
UserHistoryFeatures user_history_features(const FeatureModels& m, const std::string& user_id,
                                          int64_t t);
double topic_affinity(const FeatureModels& m, const std::string& user_id,
                      const std::string& hashtag, int64_t t);
std::vector<double> endogenous_vector(const FeatureModels& m, int64_t tweet_time,
                                      const std::vector<std::string>& tweet_hashtags,
                                      bool* missing_day = nullptr);
std::vector<double> exogenous_tfidf(const FeatureModels& m, int64_t t);
PeerFeatures peer_features(const FeatureModels& m, const std::string& root_user,
                           const std::string& candidate, int64_t t);

// [tfidf_hist | hl_hist | scalars(log1p) | affinity | endogenous | exogenous]
std::vector<double> hategen_vector(const FeatureModels& m, const std::string& user_id,
                                   const std::string& hashtag, int64_t t);
size_t hategen_dim(const FeatureModels& m);

// [user history blocks | endogenous | peer | hl_tweet | tfidf_tweet]
// (+ exogenous tf-idf appended when include_exogenous, for non-attention models)
std::vector<double> retweet_candidate_vector(const FeatureModels& m,
                                             const corpus::Tweet& root_tweet,
                                             const std::string& candidate,
                                             bool include_exogenous = false);
size_t retweet_candidate_dim(const FeatureModels& m, bool include_exogenous = false);

// attention-side inputs
std::vector<double> root_tweet_embedding(const FeatureModels& m, const corpus::Tweet& root);
std::vector<std::vector<double>> news_embedding_sequence(const FeatureModels& m, int64_t t);

// z-normalization stats for a feature matrix, frozen from the training split
struct ScalarStats {
    std::vector<double> mean, stdev;
    static ScalarStats fit(const std::vector<std::vector<double>>& rows);
    void apply(std::vector<double>& row) const;
};

}  // namespace diffusia::features
