#include "diffusia/features.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace diffusia::features {

namespace {

// the user's own tweets strictly before t, most recent first, capped at window
std::vector<const corpus::Tweet*> history_window_of(const FeatureModels& m,
                                                    const std::string& user_id, int64_t t) {
    const auto& all = m.tweets->by_user(user_id);  // ascending timestamp
    std::vector<const corpus::Tweet*> window;
    for (auto it = all.rbegin(); it != all.rend() && window.size() < m.history_window; ++it) {
        if ((*it)->timestamp < t) window.push_back(*it);
    }
    return window;
}

void append(std::vector<double>& dst, const std::vector<double>& src) {
    dst.insert(dst.end(), src.begin(), src.end());
}

}  // namespace

std::vector<double> UserHistoryFeatures::scalars() const {
    return {hate_ratio, rt_hate_ratio, rt_volume_ratio, followers_count, account_age_days,
            topic_count};
}

UserHistoryFeatures user_history_features(const FeatureModels& m, const std::string& user_id,
                                          int64_t t) {
    const corpus::UserRecord* user = m.users->by_id(user_id);
    if (!user) throw std::runtime_error("user_history_features: unknown user " + user_id);

    UserHistoryFeatures f;
    auto window = history_window_of(m, user_id, t);

    std::string joined;
    std::vector<std::string> docs;
    size_t hateful = 0;
    for (const corpus::Tweet* tw : window) {
        joined += tw->text;
        joined += " ";
        docs.push_back(tw->text);
        if (corpus::is_hateful(*tw, *m.lexicon)) ++hateful;
    }
    f.tfidf_hist = text::transform_tfidf(*m.tfidf_tweets, joined);
    auto counts = text::hl_vector(*m.lexicon, docs);
    f.hl_hist.assign(counts.begin(), counts.end());
    f.hate_ratio = window.empty() ? 0.0
                                  : static_cast<double>(hateful) /
                                        static_cast<double>(window.size());

    // over the user's full pre-t activity: retweet interactions split by the
    // hatefulness of the root tweet
    int64_t own_rt_hate = 0, own_rt_nonhate = 0;       // retweets made by the user
    int64_t recv_rt_hate = 0, recv_rt_nonhate = 0;     // retweets received on the user's tweets
    std::set<std::string> topics;
    for (const corpus::Tweet* tw : m.tweets->by_user(user_id)) {
        if (tw->timestamp >= t) break;
        for (const auto& h : tw->hashtags) topics.insert(h);
        if (tw->is_retweet) {
            const corpus::Tweet* root = m.tweets->by_id(*tw->root_tweet_id);
            if (root && corpus::is_hateful(*root, *m.lexicon))
                ++own_rt_hate;
            else
                ++own_rt_nonhate;
        } else {
            bool hate = corpus::is_hateful(*tw, *m.lexicon);
            for (const corpus::Tweet* rt : m.tweets->retweets_of(tw->tweet_id)) {
                if (rt->timestamp >= t) break;
                hate ? ++recv_rt_hate : ++recv_rt_nonhate;
            }
        }
    }
    f.rt_hate_ratio = static_cast<double>(own_rt_hate) /
                      static_cast<double>(own_rt_nonhate + 1);
    f.rt_volume_ratio = static_cast<double>(recv_rt_hate) /
                        static_cast<double>(recv_rt_nonhate + 1);
    f.followers_count = static_cast<double>(user->followers_count);
    f.account_age_days =
        std::max(0.0, static_cast<double>(t - user->created_at) / 86400.0);
    f.topic_count = static_cast<double>(topics.size());
    return f;
}

double topic_affinity(const FeatureModels& m, const std::string& user_id,
                      const std::string& hashtag, int64_t t) {
    std::vector<double> tag_vec = text::embed(*m.emb_tweets, hashtag);
    double tag_norm = 0.0;
    for (double v : tag_vec) tag_norm += v * v;
    if (tag_norm == 0.0) return 0.0;
    auto window = history_window_of(m, user_id, t);
    if (window.empty()) return 0.0;
    double sum = 0.0;
    for (const corpus::Tweet* tw : window)
        sum += text::cosine(text::embed(*m.emb_tweets, tw->text), tag_vec);
    return sum / static_cast<double>(window.size());
}

std::vector<double> endogenous_vector(const FeatureModels& m, int64_t tweet_time,
                                      const std::vector<std::string>& tweet_hashtags,
                                      bool* missing_day) {
    std::vector<double> bits(50, 0.0);
    const corpus::TrendingDay* day = m.trending->by_date(corpus::day_of(tweet_time));
    if (!day) {
        if (missing_day) *missing_day = true;
        return bits;
    }
    if (missing_day) *missing_day = false;
    std::set<std::string> tags(tweet_hashtags.begin(), tweet_hashtags.end());
    for (size_t k = 0; k < day->hashtags.size() && k < 50; ++k)
        if (tags.count(day->hashtags[k])) bits[k] = 1.0;
    return bits;
}

std::vector<double> exogenous_tfidf(const FeatureModels& m, int64_t t) {
    auto articles = corpus::recent_news(*m.news, t, m.news_per_tweet);
    std::vector<double> avg(m.tfidf_news->selected_dim, 0.0);
    if (articles.empty()) return avg;
    for (const corpus::NewsArticle* a : articles) {
        auto vec = text::transform_tfidf(*m.tfidf_news, a->headline);
        for (size_t i = 0; i < avg.size(); ++i) avg[i] += vec[i];
    }
    for (double& v : avg) v /= static_cast<double>(articles.size());
    return avg;
}

PeerFeatures peer_features(const FeatureModels& m, const std::string& root_user,
                           const std::string& candidate, int64_t t) {
    PeerFeatures f;
    f.sp_len = m.net->shortest_path_len(root_user, candidate, m.sp_cap);
    for (const corpus::Tweet* tw : m.tweets->by_user(candidate)) {
        if (tw->timestamp >= t) break;
        if (!tw->is_retweet) continue;
        const corpus::Tweet* root = m.tweets->by_id(*tw->root_tweet_id);
        if (root && root->user_id == root_user) ++f.past_rts_of_root;
    }
    return f;
}

std::vector<double> hategen_vector(const FeatureModels& m, const std::string& user_id,
                                   const std::string& hashtag, int64_t t) {
    if (!m.tfidf_tweets || !m.tfidf_news || !m.emb_tweets || !m.lexicon || !m.trending)
        throw std::runtime_error("hategen_vector: sub-model missing");
    UserHistoryFeatures hist = user_history_features(m, user_id, t);
    std::vector<double> vec;
    vec.reserve(hategen_dim(m));
    append(vec, hist.tfidf_hist);
    append(vec, hist.hl_hist);
    for (double s : hist.scalars()) vec.push_back(std::log1p(s));
    vec.push_back(topic_affinity(m, user_id, hashtag, t));
    append(vec, endogenous_vector(m, t, {hashtag}));
    append(vec, exogenous_tfidf(m, t));
    return vec;
}

size_t hategen_dim(const FeatureModels& m) {
    return m.tfidf_tweets->selected_dim + m.lexicon->size() +
           UserHistoryFeatures::kScalarCount + 1 + 50 + m.tfidf_news->selected_dim;
}

std::vector<double> retweet_candidate_vector(const FeatureModels& m,
                                             const corpus::Tweet& root_tweet,
                                             const std::string& candidate,
                                             bool include_exogenous) {
    if (!m.tfidf_tweets || !m.lexicon || !m.net)
        throw std::runtime_error("retweet_candidate_vector: sub-model missing");
    const int64_t t0 = root_tweet.timestamp;
    UserHistoryFeatures hist = user_history_features(m, candidate, t0);
    std::vector<double> vec;
    vec.reserve(retweet_candidate_dim(m, include_exogenous));
    append(vec, hist.tfidf_hist);
    append(vec, hist.hl_hist);
    for (double s : hist.scalars()) vec.push_back(std::log1p(s));
    append(vec, endogenous_vector(m, t0, root_tweet.hashtags));
    PeerFeatures peer = peer_features(m, root_tweet.user_id, candidate, t0);
    vec.push_back(static_cast<double>(peer.sp_len));
    vec.push_back(std::log1p(static_cast<double>(peer.past_rts_of_root)));
    auto hl = text::hl_vector(*m.lexicon, {root_tweet.text});
    for (int64_t c : hl) vec.push_back(static_cast<double>(c));
    append(vec, text::transform_tfidf(*m.tfidf_tweets, root_tweet.text));
    if (include_exogenous) append(vec, exogenous_tfidf(m, t0));
    return vec;
}

size_t retweet_candidate_dim(const FeatureModels& m, bool include_exogenous) {
    size_t dim = m.tfidf_tweets->selected_dim + m.lexicon->size() +
                 UserHistoryFeatures::kScalarCount + 50 + 2 + m.lexicon->size() +
                 m.tfidf_tweets->selected_dim;
    if (include_exogenous) dim += m.tfidf_news->selected_dim;
    return dim;
}

std::vector<double> root_tweet_embedding(const FeatureModels& m, const corpus::Tweet& root) {
    return text::embed(*m.emb_tweets, root.text);
}

std::vector<std::vector<double>> news_embedding_sequence(const FeatureModels& m, int64_t t) {
    auto articles = corpus::recent_news(*m.news, t, m.news_per_tweet);
    std::vector<std::vector<double>> seq;
    seq.reserve(articles.size());
    for (const corpus::NewsArticle* a : articles)
        seq.push_back(text::embed(*m.emb_news, a->headline));
    return seq;
}

ScalarStats ScalarStats::fit(const std::vector<std::vector<double>>& rows) {
    ScalarStats s;
    if (rows.empty()) return s;
    size_t dim = rows[0].size();
    s.mean.assign(dim, 0.0);
    s.stdev.assign(dim, 0.0);
    for (const auto& row : rows)
        for (size_t i = 0; i < dim; ++i) s.mean[i] += row[i];
    for (double& v : s.mean) v /= static_cast<double>(rows.size());
    for (const auto& row : rows)
        for (size_t i = 0; i < dim; ++i) {
            double d = row[i] - s.mean[i];
            s.stdev[i] += d * d;
        }
    for (double& v : s.stdev) {
        v = std::sqrt(v / static_cast<double>(rows.size()));
        if (v < 1e-12) v = 1.0;  // constant column: leave centered only
    }
    return s;
}

void ScalarStats::apply(std::vector<double>& row) const {
    for (size_t i = 0; i < row.size() && i < mean.size(); ++i)
        row[i] = (row[i] - mean[i]) / stdev[i];
}

}  // namespace diffusia::features
