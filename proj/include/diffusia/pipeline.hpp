#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "diffusia/corpus.hpp"
#include "diffusia/features.hpp"
#include "diffusia/graph.hpp"
#include "diffusia/hategen.hpp"
#include "diffusia/metrics.hpp"
#include "diffusia/retina.hpp"
#include "diffusia/text.hpp"

namespace diffusia::pipeline {

// Everything loaded from a data directory (tweets.jsonl users.jsonl news.jsonl
// trending.jsonl edges.jsonl lexicon.txt, optional bins.json).
struct DataBundle {
    corpus::TweetStore tweets;
    corpus::UserStore users;
    corpus::NewsStore news;
    corpus::TrendingStore trending;
    corpus::HateLexicon lexicon;
    std::vector<std::pair<std::string, std::string>> edges;
    graph::InfoNetwork net;
    std::vector<int64_t> bin_offsets;  // dynamic label bin edges, relative to root time
};

DataBundle load_bundle(const std::filesystem::path& dir);

struct ModelConfig {
    size_t tfidf_keep = 300;
    size_t emb_tweet_dim = 50;
    size_t emb_news_dim = 500;
    std::string embedding_kind = "hashed";  // "hashed" | "trained"
    size_t embedding_epochs = 5;
    size_t history_window = 30;
    size_t news_per_tweet = 60;
    int sp_cap = 6;
    uint64_t seed = 0;
};

struct FittedModels {
    ModelConfig config;
    text::TfidfModel tfidf_tweets;
    text::TfidfModel tfidf_news;
    text::DocEmbeddingModel emb_tweets;
    text::DocEmbeddingModel emb_news;
};

// Fits text models on root tweets / headlines only.
FittedModels fit_models(const DataBundle& bundle, const ModelConfig& cfg);

void save_models(const FittedModels& m, const std::filesystem::path& dir);
FittedModels load_models(const std::filesystem::path& dir);

// Non-owning view stitched over a bundle and its fitted models.
features::FeatureModels feature_view(const DataBundle& bundle, const FittedModels& m);

// One row per (root tweet, hashtag); label = hatefulness of the tweet.
hategen::LabeledDataset build_hategen_dataset(const DataBundle& bundle, const FittedModels& m);

struct RetinaDataset {
    std::vector<retina::Sample> samples;
    // samples grouped by cascade: samples[group_offsets[i] .. group_offsets[i+1])
    std::vector<size_t> group_offsets;
    std::vector<std::string> root_ids;
    size_t positives = 0;
    size_t retweeters_outside_candidates = 0;  // retweeters who are not followers
};

struct RetinaDatasetConfig {
    bool include_exogenous = false;  // append exogenous tf-idf to x_user
    size_t max_roots = 0;            // 0 = all roots with at least one candidate
    size_t max_candidates = 0;       // per root, 0 = all followers
    uint64_t seed = 0;               // root subsampling
};

// Candidates = followers of the root author. Static label: candidate retweeted
// within the corpus. Dynamic labels: one per bin edge, 1 iff the retweet delay
// falls inside that bin.
RetinaDataset build_retina_dataset(const DataBundle& bundle, const FittedModels& m,
                                   const RetinaDatasetConfig& cfg);

// Deterministic group-level split; returns group indices.
struct GroupSplit {
    std::vector<size_t> train, test;
};
GroupSplit split_groups(size_t n_groups, double test_fraction, uint64_t seed);

std::vector<retina::Sample> gather(const RetinaDataset& ds, const std::vector<size_t>& groups);

// Classification metrics over every sample in the chosen groups plus ranking
// metrics per cascade.
struct RetinaEvaluation {
    metrics::ClassificationReport classification;
    metrics::RankingReport ranking;
};
RetinaEvaluation evaluate_retina(const retina::RetinaModel& model, const RetinaDataset& ds,
                                 const std::vector<size_t>& groups,
                                 const std::vector<size_t>& ks);

// Feature blocks of the originator vector, used by the ablation runner.
struct BlockRanges {
    size_t history_begin = 0, history_end = 0;      // tf-idf + HL + scalars
    size_t topic_begin = 0, topic_end = 0;          // affinity
    size_t endogenous_begin = 0, endogenous_end = 0;
    size_t exogenous_begin = 0, exogenous_end = 0;
};
BlockRanges hategen_blocks(const features::FeatureModels& m);

// Returns a copy with the named block zeroed ("history" | "topic" |
// "endogenous" | "exogenous").
hategen::LabeledDataset drop_block(const hategen::LabeledDataset& ds, const BlockRanges& blocks,
                                   const std::string& name);

}  // namespace diffusia::pipeline
