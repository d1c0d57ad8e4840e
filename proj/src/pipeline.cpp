#include "diffusia/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "diffusia/jsonl.hpp"
#include "diffusia/rng.hpp"

namespace diffusia::pipeline {

DataBundle load_bundle(const std::filesystem::path& dir) {
    DataBundle b;
    b.tweets = corpus::load_tweets(dir / "tweets.jsonl");
    b.users = corpus::load_users(dir / "users.jsonl");
    b.news = corpus::load_news(dir / "news.jsonl");
    b.trending = corpus::load_trending(dir / "trending.jsonl");
    b.lexicon = corpus::load_lexicon(dir / "lexicon.txt");
    for_each_jsonl(dir / "edges.jsonl", [&](size_t, const json& obj) {
        b.edges.emplace_back(obj.at("src").get<std::string>(), obj.at("dst").get<std::string>());
    });
    b.net = graph::InfoNetwork::build(b.edges);

    auto bins_path = dir / "bins.json";
    if (std::filesystem::exists(bins_path)) {
        json bins = json::parse(read_file(bins_path));
        for (const auto& v : bins) b.bin_offsets.push_back(v.get<int64_t>());
    } else {
        // default: 8 log-spaced edges from 1 minute to 7 days
        const double lo = std::log(60.0), hi = std::log(7.0 * 86400.0);
        for (size_t j = 0; j < 8; ++j)
            b.bin_offsets.push_back(
                std::llround(std::exp(lo + (hi - lo) * static_cast<double>(j) / 7.0)));
    }
    return b;
}

FittedModels fit_models(const DataBundle& bundle, const ModelConfig& cfg) {
    std::vector<std::string> tweet_texts;
    for (const corpus::Tweet* t : bundle.tweets.roots()) tweet_texts.push_back(t->text);
    std::vector<std::string> headlines;
    for (const auto& a : bundle.news.all()) headlines.push_back(a.headline);

    FittedModels m;
    m.config = cfg;
    m.tfidf_tweets = text::fit_tfidf(tweet_texts, cfg.tfidf_keep);
    m.tfidf_news = text::fit_tfidf(headlines, cfg.tfidf_keep);
    m.emb_tweets = text::fit_doc_embedding(tweet_texts, cfg.emb_tweet_dim, cfg.seed,
                                           cfg.embedding_epochs, cfg.embedding_kind);
    m.emb_news = text::fit_doc_embedding(headlines, cfg.emb_news_dim, cfg.seed + 1,
                                         cfg.embedding_epochs, cfg.embedding_kind);
    return m;
}

void save_models(const FittedModels& m, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    text::save_tfidf(m.tfidf_tweets, dir / "tfidf_tweets.json");
    text::save_tfidf(m.tfidf_news, dir / "tfidf_news.json");
    text::save_embedding(m.emb_tweets, dir / "emb_tweets.json");
    text::save_embedding(m.emb_news, dir / "emb_news.json");
    json cfg{{"tfidf_keep", m.config.tfidf_keep},
             {"emb_tweet_dim", m.config.emb_tweet_dim},
             {"emb_news_dim", m.config.emb_news_dim},
             {"embedding_kind", m.config.embedding_kind},
             {"embedding_epochs", m.config.embedding_epochs},
             {"history_window", m.config.history_window},
             {"news_per_tweet", m.config.news_per_tweet},
             {"sp_cap", m.config.sp_cap},
             {"seed", m.config.seed}};
    write_file(dir / "feature_config.json", cfg.dump(2) + "\n");
}

FittedModels load_models(const std::filesystem::path& dir) {
    FittedModels m;
    m.tfidf_tweets = text::load_tfidf(dir / "tfidf_tweets.json");
    m.tfidf_news = text::load_tfidf(dir / "tfidf_news.json");
    m.emb_tweets = text::load_embedding(dir / "emb_tweets.json");
    m.emb_news = text::load_embedding(dir / "emb_news.json");
    json cfg = json::parse(read_file(dir / "feature_config.json"));
    m.config.tfidf_keep = cfg.at("tfidf_keep").get<size_t>();
    m.config.emb_tweet_dim = cfg.at("emb_tweet_dim").get<size_t>();
    m.config.emb_news_dim = cfg.at("emb_news_dim").get<size_t>();
    m.config.embedding_kind = cfg.at("embedding_kind").get<std::string>();
    m.config.embedding_epochs = cfg.at("embedding_epochs").get<size_t>();
    m.config.history_window = cfg.at("history_window").get<size_t>();
    m.config.news_per_tweet = cfg.at("news_per_tweet").get<size_t>();
    m.config.sp_cap = cfg.at("sp_cap").get<int>();
    m.config.seed = cfg.at("seed").get<uint64_t>();
    return m;
}

features::FeatureModels feature_view(const DataBundle& bundle, const FittedModels& m) {
    features::FeatureModels v;
    v.tweets = &bundle.tweets;
    v.users = &bundle.users;
    v.news = &bundle.news;
    v.trending = &bundle.trending;
    v.lexicon = &bundle.lexicon;
    v.net = &bundle.net;
    v.tfidf_tweets = &m.tfidf_tweets;
    v.tfidf_news = &m.tfidf_news;
    v.emb_tweets = &m.emb_tweets;
    v.emb_news = &m.emb_news;
    v.history_window = m.config.history_window;
    v.news_per_tweet = m.config.news_per_tweet;
    v.sp_cap = m.config.sp_cap;
    return v;
}

hategen::LabeledDataset build_hategen_dataset(const DataBundle& bundle, const FittedModels& m) {
    features::FeatureModels view = feature_view(bundle, m);
    hategen::LabeledDataset ds;
    for (const corpus::Tweet* t : bundle.tweets.roots()) {
        std::vector<std::string> tags = t->hashtags;
        if (tags.empty()) tags.push_back("");
        int label = corpus::is_hateful(*t, bundle.lexicon) ? 1 : 0;
        for (const auto& tag : tags) {
            ds.X.push_back(features::hategen_vector(view, t->user_id, tag, t->timestamp));
            ds.y.push_back(label);
            ds.meta.push_back({t->user_id, tag, t->timestamp});
        }
    }
    return ds;
}

RetinaDataset build_retina_dataset(const DataBundle& bundle, const FittedModels& m,
                                   const RetinaDatasetConfig& cfg) {
    features::FeatureModels view = feature_view(bundle, m);
    const size_t n_bins = bundle.bin_offsets.size();

    auto roots = bundle.tweets.roots();
    std::vector<const corpus::Tweet*> eligible;
    for (const corpus::Tweet* r : roots) {
        if (bundle.net.has_node(r->user_id) &&
            !bundle.net.followers(bundle.net.intern_id(r->user_id)).empty())
            eligible.push_back(r);
    }
    if (cfg.max_roots > 0 && eligible.size() > cfg.max_roots) {
        Rng rng(cfg.seed ^ 0x700175ULL);
        for (size_t i = 0; i + 1 < eligible.size(); ++i) {
            size_t j = i + rng.next_below(eligible.size() - i);
            std::swap(eligible[i], eligible[j]);
        }
        eligible.resize(cfg.max_roots);
        std::sort(eligible.begin(), eligible.end(),
                  [](const corpus::Tweet* a, const corpus::Tweet* b) {
                      return a->tweet_id < b->tweet_id;
                  });
    }

    RetinaDataset ds;
    Rng cand_rng(cfg.seed ^ 0xca4dULL);
    for (const corpus::Tweet* r : eligible) {
        std::vector<std::string> cands = bundle.net.follower_names(r->user_id);
        std::sort(cands.begin(), cands.end());
        if (cfg.max_candidates > 0 && cands.size() > cfg.max_candidates) {
            for (size_t i = 0; i + 1 < cands.size(); ++i) {
                size_t j = i + cand_rng.next_below(cands.size() - i);
                std::swap(cands[i], cands[j]);
            }
            cands.resize(cfg.max_candidates);
            std::sort(cands.begin(), cands.end());
        }

        std::unordered_map<std::string, int64_t> delay_by_user;
        for (const corpus::Tweet* rt : bundle.tweets.retweets_of(r->tweet_id))
            if (!delay_by_user.count(rt->user_id))
                delay_by_user[rt->user_id] = rt->timestamp - r->timestamp;
        std::unordered_set<std::string> cand_set(cands.begin(), cands.end());
        for (const auto& [u, d] : delay_by_user)
            if (!cand_set.count(u)) ++ds.retweeters_outside_candidates;

        auto tweet_emb = features::root_tweet_embedding(view, *r);
        auto news_seq = features::news_embedding_sequence(view, r->timestamp);
        retina::MatrixXd x_news(news_seq.size(),
                                news_seq.empty() ? m.emb_news.dim : news_seq[0].size());
        for (size_t i = 0; i < news_seq.size(); ++i)
            for (size_t j = 0; j < news_seq[i].size(); ++j)
                x_news(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = news_seq[i][j];

        ds.group_offsets.push_back(ds.samples.size());
        ds.root_ids.push_back(r->tweet_id);
        for (const auto& cand : cands) {
            retina::Sample s;
            auto xu = features::retweet_candidate_vector(view, *r, cand, cfg.include_exogenous);
            s.x_user = Eigen::Map<retina::VectorXd>(xu.data(),
                                                    static_cast<Eigen::Index>(xu.size()));
            s.x_tweet = Eigen::Map<retina::VectorXd>(tweet_emb.data(),
                                                     static_cast<Eigen::Index>(tweet_emb.size()));
            s.x_news = x_news;
            s.candidate_id = cand;
            s.tweet_id = r->tweet_id;
            s.labels_per_bin.assign(n_bins, 0);
            auto it = delay_by_user.find(cand);
            if (it != delay_by_user.end()) {
                s.label = 1;
                ++ds.positives;
                for (size_t j = 0; j < n_bins; ++j) {
                    int64_t lo = j == 0 ? 0 : bundle.bin_offsets[j - 1];
                    if (it->second > lo && it->second <= bundle.bin_offsets[j])
                        s.labels_per_bin[j] = 1;
                }
            }
            ds.samples.push_back(std::move(s));
        }
    }
    ds.group_offsets.push_back(ds.samples.size());
    return ds;
}

GroupSplit split_groups(size_t n_groups, double test_fraction, uint64_t seed) {
    if (test_fraction < 0.0 || test_fraction > 1.0)
        throw std::runtime_error("split_groups: test_fraction must be in [0,1]");
    std::vector<size_t> idx(n_groups);
    for (size_t i = 0; i < n_groups; ++i) idx[i] = i;
    Rng rng(seed ^ 0x59717ULL);
    for (size_t i = 0; i + 1 < idx.size(); ++i) {
        size_t j = i + rng.next_below(idx.size() - i);
        std::swap(idx[i], idx[j]);
    }
    size_t n_test = static_cast<size_t>(std::lround(test_fraction * static_cast<double>(n_groups)));
    GroupSplit split;
    split.test.assign(idx.begin(), idx.begin() + static_cast<ptrdiff_t>(n_test));
    split.train.assign(idx.begin() + static_cast<ptrdiff_t>(n_test), idx.end());
    std::sort(split.test.begin(), split.test.end());
    std::sort(split.train.begin(), split.train.end());
    return split;
}

std::vector<retina::Sample> gather(const RetinaDataset& ds, const std::vector<size_t>& groups) {
    std::vector<retina::Sample> out;
    for (size_t g : groups) {
        if (g + 1 >= ds.group_offsets.size())
            throw std::runtime_error("gather: group index out of range");
        for (size_t i = ds.group_offsets[g]; i < ds.group_offsets[g + 1]; ++i)
            out.push_back(ds.samples[i]);
    }
    return out;
}

RetinaEvaluation evaluate_retina(const retina::RetinaModel& model, const RetinaDataset& ds,
                                 const std::vector<size_t>& groups,
                                 const std::vector<size_t>& ks) {
    const size_t n_intervals =
        model.mode() == retina::Mode::dynamic_head ? ds.samples.at(0).labels_per_bin.size() : 0;
    std::vector<double> scores;
    std::vector<int> labels;
    std::vector<std::vector<metrics::ScoredCandidate>> cascades;
    for (size_t g : groups) {
        std::vector<retina::Sample> group(
            ds.samples.begin() + static_cast<ptrdiff_t>(ds.group_offsets[g]),
            ds.samples.begin() + static_cast<ptrdiff_t>(ds.group_offsets[g + 1]));
        auto ranked = retina::predict_retweeters(model, group, n_intervals);
        std::unordered_map<std::string, int> label_of;
        for (const auto& s : group) label_of[s.candidate_id] = s.label;
        std::vector<metrics::ScoredCandidate> cascade;
        for (const auto& sc : ranked) {
            double score = sc.scores.empty()
                               ? sc.score
                               : std::accumulate(sc.scores.begin(), sc.scores.end(), 0.0) /
                                     static_cast<double>(sc.scores.size());
            scores.push_back(score);
            labels.push_back(label_of.at(sc.candidate_id));
            cascade.push_back({sc.candidate_id, score, label_of.at(sc.candidate_id)});
        }
        cascades.push_back(std::move(cascade));
    }
    RetinaEvaluation ev;
    ev.classification = metrics::classification_metrics(scores, labels);
    ev.ranking = metrics::ranking_metrics(cascades, ks);
    return ev;
}

BlockRanges hategen_blocks(const features::FeatureModels& m) {
    const size_t tfidf = m.tfidf_tweets->selected_dim;
    const size_t hl = m.lexicon->size();
    const size_t scalars = features::UserHistoryFeatures::kScalarCount;
    BlockRanges b;
    b.history_begin = 0;
    b.history_end = tfidf + hl + scalars;
    b.topic_begin = b.history_end;
    b.topic_end = b.topic_begin + 1;
    b.endogenous_begin = b.topic_end;
    b.endogenous_end = b.endogenous_begin + 50;
    b.exogenous_begin = b.endogenous_end;
    b.exogenous_end = b.exogenous_begin + m.tfidf_news->selected_dim;
    return b;
}

hategen::LabeledDataset drop_block(const hategen::LabeledDataset& ds, const BlockRanges& blocks,
                                   const std::string& name) {
    size_t begin = 0, end = 0;
    if (name == "history") {
        begin = blocks.history_begin, end = blocks.history_end;
    } else if (name == "topic") {
        begin = blocks.topic_begin, end = blocks.topic_end;
    } else if (name == "endogenous") {
        begin = blocks.endogenous_begin, end = blocks.endogenous_end;
    } else if (name == "exogenous") {
        begin = blocks.exogenous_begin, end = blocks.exogenous_end;
    } else {
        throw std::runtime_error("drop_block: unknown block " + name);
    }
    hategen::LabeledDataset out = ds;
    for (auto& row : out.X) {
        if (end > row.size()) throw std::runtime_error("drop_block: range exceeds row width");
        std::fill(row.begin() + static_cast<ptrdiff_t>(begin),
                  row.begin() + static_cast<ptrdiff_t>(end), 0.0);
    }
    return out;
}

}  // namespace diffusia::pipeline
