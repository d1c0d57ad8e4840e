#include "diffusia/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <ctime>
#include <fstream>
#include <set>
#include <stdexcept>

#include "diffusia/jsonl.hpp"
#include "diffusia/text.hpp"

namespace diffusia::corpus {

const std::vector<const Tweet*> TweetStore::kEmpty;

std::string normalize_text(const std::string& raw) {
    // ASCII lowercase; non-ASCII bytes pass through untouched. The synthetic
    // corpora and lexicon are ASCII, so this is the NFC fixed point here.
    std::string out;
    out.reserve(raw.size());
    for (unsigned char c : raw) {
        out.push_back(c < 128 ? static_cast<char>(std::tolower(c)) : static_cast<char>(c));
    }
    return out;
}

std::string day_of(int64_t epoch_seconds) {
    std::time_t t = static_cast<std::time_t>(epoch_seconds);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", tm.tm_year + 1900, tm.tm_mon + 1,
                  tm.tm_mday);
    return buf;
}

void TweetStore::add(Tweet t) {
    if (t.timestamp <= 0) throw std::runtime_error("tweet " + t.tweet_id + ": timestamp must be > 0");
    if (t.is_retweet != t.root_tweet_id.has_value())
        throw std::runtime_error("tweet " + t.tweet_id + ": is_retweet and root_tweet_id disagree");
    if (by_id_.count(t.tweet_id))
        throw std::runtime_error("duplicate tweet_id " + t.tweet_id);
    // dedup hashtags, keep first occurrence order
    std::vector<std::string> tags;
    std::set<std::string> seen;
    for (auto& h : t.hashtags)
        if (seen.insert(h).second) tags.push_back(h);
    t.hashtags = std::move(tags);
    by_id_[t.tweet_id] = tweets_.size();
    tweets_.push_back(std::move(t));
}

void TweetStore::finalize() {
    by_user_.clear();
    by_root_.clear();
    report_ = {};
    for (const Tweet& t : tweets_) by_user_[t.user_id].push_back(&t);
    for (auto& [_, v] : by_user_)
        std::sort(v.begin(), v.end(),
                  [](const Tweet* a, const Tweet* b) { return a->timestamp < b->timestamp; });
    for (const Tweet& t : tweets_) {
        if (!t.is_retweet) continue;
        auto root_it = by_id_.find(*t.root_tweet_id);
        if (root_it == by_id_.end()) {
            report_.dangling_roots.push_back(t.tweet_id);
            continue;
        }
        const Tweet& root = tweets_[root_it->second];
        if (t.timestamp < root.timestamp) {
            report_.time_anomalies.push_back(t.tweet_id);
            continue;  // quarantined: kept in the store, excluded from the cascade
        }
        by_root_[*t.root_tweet_id].push_back(&t);
    }
    for (auto& [_, v] : by_root_)
        std::sort(v.begin(), v.end(),
                  [](const Tweet* a, const Tweet* b) { return a->timestamp < b->timestamp; });
}

const Tweet* TweetStore::by_id(const std::string& tweet_id) const {
    auto it = by_id_.find(tweet_id);
    return it == by_id_.end() ? nullptr : &tweets_[it->second];
}

const std::vector<const Tweet*>& TweetStore::by_user(const std::string& user_id) const {
    auto it = by_user_.find(user_id);
    return it == by_user_.end() ? kEmpty : it->second;
}

const std::vector<const Tweet*>& TweetStore::retweets_of(const std::string& root_tweet_id) const {
    auto it = by_root_.find(root_tweet_id);
    return it == by_root_.end() ? kEmpty : it->second;
}

std::vector<const Tweet*> TweetStore::roots() const {
    std::vector<const Tweet*> out;
    for (const Tweet& t : tweets_)
        if (!t.is_retweet) out.push_back(&t);
    std::sort(out.begin(), out.end(),
              [](const Tweet* a, const Tweet* b) { return a->timestamp < b->timestamp; });
    return out;
}

size_t TweetStore::cascade_count() const { return by_root_.size(); }

void UserStore::add(UserRecord u) {
    if (u.followers_count < 0)
        throw std::runtime_error("user " + u.user_id + ": negative followers_count");
    if (by_id_.count(u.user_id)) throw std::runtime_error("duplicate user_id " + u.user_id);
    by_id_[u.user_id] = users_.size();
    users_.push_back(std::move(u));
}

const UserRecord* UserStore::by_id(const std::string& user_id) const {
    auto it = by_id_.find(user_id);
    return it == by_id_.end() ? nullptr : &users_[it->second];
}

void NewsStore::add(NewsArticle a) {
    std::string headline = a.headline;
    headline.erase(0, headline.find_first_not_of(" \t\r\n"));
    if (headline.empty())
        throw std::runtime_error("news " + a.news_id + ": empty headline");
    if (seen_.count(a.news_id)) throw std::runtime_error("duplicate news_id " + a.news_id);
    seen_[a.news_id] = true;
    articles_.push_back(std::move(a));
}

void NewsStore::finalize() {
    std::stable_sort(articles_.begin(), articles_.end(),
                     [](const NewsArticle& a, const NewsArticle& b) {
                         return a.timestamp < b.timestamp;
                     });
}

void TrendingStore::add(TrendingDay d) {
    if (d.hashtags.size() != 50)
        throw std::runtime_error("trending " + d.date + ": expected 50 hashtags, got " +
                                 std::to_string(d.hashtags.size()));
    std::set<std::string> uniq(d.hashtags.begin(), d.hashtags.end());
    if (uniq.size() != d.hashtags.size())
        throw std::runtime_error("trending " + d.date + ": duplicate hashtags");
    if (by_date_.count(d.date)) throw std::runtime_error("duplicate trending date " + d.date);
    by_date_[d.date] = days_.size();
    days_.push_back(std::move(d));
}

const TrendingDay* TrendingStore::by_date(const std::string& date) const {
    auto it = by_date_.find(date);
    return it == by_date_.end() ? nullptr : &days_[it->second];
}

namespace {

std::string require_string(const json& obj, const char* key, size_t lineno) {
    if (!obj.contains(key) || !obj[key].is_string())
        throw std::runtime_error("line " + std::to_string(lineno) + ": missing/invalid '" +
                                 key + "'");
    return obj[key].get<std::string>();
}

int64_t require_int(const json& obj, const char* key, size_t lineno) {
    if (!obj.contains(key) || !obj[key].is_number_integer())
        throw std::runtime_error("line " + std::to_string(lineno) + ": missing/invalid '" +
                                 key + "'");
    return obj[key].get<int64_t>();
}

}  // namespace

TweetStore load_tweets(const std::filesystem::path& path) {
    TweetStore store;
    for_each_jsonl(path, [&](size_t lineno, const json& obj) {
        Tweet t;
        t.tweet_id = require_string(obj, "tweet_id", lineno);
        t.user_id = require_string(obj, "user_id", lineno);
        t.timestamp = require_int(obj, "timestamp", lineno);
        t.text = normalize_text(require_string(obj, "text", lineno));
        if (obj.contains("hashtags")) {
            for (const auto& h : obj["hashtags"])
                t.hashtags.push_back(normalize_text(h.get<std::string>()));
        }
        t.is_retweet = obj.value("is_retweet", false);
        if (obj.contains("root_tweet_id") && !obj["root_tweet_id"].is_null())
            t.root_tweet_id = obj["root_tweet_id"].get<std::string>();
        if (obj.contains("hate_label") && !obj["hate_label"].is_null()) {
            std::string lbl = obj["hate_label"].get<std::string>();
            if (lbl == "hate")
                t.hate_label = HateLabel::hate;
            else if (lbl == "non_hate")
                t.hate_label = HateLabel::non_hate;
            else
                throw std::runtime_error("line " + std::to_string(lineno) +
                                         ": bad hate_label '" + lbl + "'");
        }
        try {
            store.add(std::move(t));
        } catch (const std::exception& e) {
            throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": " +
                                     e.what());
        }
    });
    store.finalize();
    return store;
}

UserStore load_users(const std::filesystem::path& path) {
    UserStore store;
    for_each_jsonl(path, [&](size_t lineno, const json& obj) {
        UserRecord u;
        u.user_id = require_string(obj, "user_id", lineno);
        u.followers_count = require_int(obj, "followers_count", lineno);
        u.created_at = require_int(obj, "created_at", lineno);
        try {
            store.add(std::move(u));
        } catch (const std::exception& e) {
            throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": " +
                                     e.what());
        }
    });
    return store;
}

NewsStore load_news(const std::filesystem::path& path) {
    NewsStore store;
    for_each_jsonl(path, [&](size_t lineno, const json& obj) {
        NewsArticle a;
        a.news_id = require_string(obj, "news_id", lineno);
        a.timestamp = require_int(obj, "timestamp", lineno);
        a.headline = normalize_text(require_string(obj, "headline", lineno));
        try {
            store.add(std::move(a));
        } catch (const std::exception& e) {
            throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": " +
                                     e.what());
        }
    });
    store.finalize();
    return store;
}

TrendingStore load_trending(const std::filesystem::path& path) {
    TrendingStore store;
    for_each_jsonl(path, [&](size_t lineno, const json& obj) {
        TrendingDay d;
        d.date = require_string(obj, "date", lineno);
        if (!obj.contains("hashtags") || !obj["hashtags"].is_array())
            throw std::runtime_error("line " + std::to_string(lineno) + ": missing 'hashtags'");
        for (const auto& h : obj["hashtags"])
            d.hashtags.push_back(normalize_text(h.get<std::string>()));
        try {
            store.add(std::move(d));
        } catch (const std::exception& e) {
            throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": " +
                                     e.what());
        }
    });
    return store;
}

HateLexicon load_lexicon(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    HateLexicon lex;
    std::set<std::string> seen;
    std::string line;
    while (std::getline(in, line)) {
        while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
        std::string term = normalize_text(line);
        if (term.empty()) continue;
        if (seen.insert(term).second) lex.terms.push_back(term);
    }
    return lex;
}

void save_tweets(const TweetStore& store, const std::filesystem::path& path) {
    JsonlWriter w(path);
    for (const Tweet& t : store.all()) {
        json obj{{"tweet_id", t.tweet_id},
                 {"user_id", t.user_id},
                 {"timestamp", t.timestamp},
                 {"text", t.text},
                 {"hashtags", t.hashtags},
                 {"is_retweet", t.is_retweet}};
        if (t.root_tweet_id) obj["root_tweet_id"] = *t.root_tweet_id;
        if (t.hate_label)
            obj["hate_label"] = *t.hate_label == HateLabel::hate ? "hate" : "non_hate";
        w.write(obj);
    }
}

void save_users(const UserStore& store, const std::filesystem::path& path) {
    JsonlWriter w(path);
    for (const UserRecord& u : store.all())
        w.write(json{{"user_id", u.user_id},
                     {"followers_count", u.followers_count},
                     {"created_at", u.created_at}});
}

void save_news(const NewsStore& store, const std::filesystem::path& path) {
    JsonlWriter w(path);
    for (const NewsArticle& a : store.all())
        w.write(json{{"news_id", a.news_id}, {"timestamp", a.timestamp},
                     {"headline", a.headline}});
}

std::vector<const NewsArticle*> recent_news(const NewsStore& store, int64_t t, size_t n) {
    if (n < 1) throw std::runtime_error("recent_news: n must be >= 1");
    const auto& arts = store.all();
    // first article with timestamp > t
    auto it = std::upper_bound(arts.begin(), arts.end(), t,
                               [](int64_t val, const NewsArticle& a) { return val < a.timestamp; });
    std::vector<const NewsArticle*> out;
    while (it != arts.begin() && out.size() < n) {
        --it;
        out.push_back(&*it);
    }
    return out;
}

bool is_hateful(const Tweet& t, const HateLexicon& lexicon) {
    if (t.hate_label) return *t.hate_label == HateLabel::hate;
    return text::hl_count(lexicon, t.text) > 0;
}

}  // namespace diffusia::corpus
