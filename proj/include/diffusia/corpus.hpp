#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace diffusia::corpus {

enum class HateLabel { hate, non_hate };

struct Tweet {
    std::string tweet_id;
    std::string user_id;
    int64_t timestamp = 0;  // epoch seconds UTC
    std::string text;       // normalized at load
    std::vector<std::string> hashtags;  // lowercase, deduplicated
    bool is_retweet = false;
    std::optional<std::string> root_tweet_id;  // present iff is_retweet
    std::optional<HateLabel> hate_label;
};

struct UserRecord {
    std::string user_id;
    int64_t followers_count = 0;
    int64_t created_at = 0;
};

struct NewsArticle {
    std::string news_id;
    int64_t timestamp = 0;
    std::string headline;
};

struct TrendingDay {
    std::string date;  // "YYYY-MM-DD"
    std::vector<std::string> hashtags;  // exactly 50, no duplicates
};

// Ordered, deduplicated; order fixed at load time and defines HL vector indexing.
struct HateLexicon {
    std::vector<std::string> terms;
    size_t size() const { return terms.size(); }
};

// Cascade anomalies and dangling references are retained and reported, never
// silently dropped.
struct IngestReport {
    std::vector<std::string> dangling_roots;     // retweet ids whose root is absent
    std::vector<std::string> time_anomalies;     // retweet ids timestamped before their root
    size_t missing_trending_days = 0;
};

class TweetStore {
public:
    void add(Tweet t);  // throws on duplicate tweet_id
    void finalize();    // builds indices and the anomaly report

    const Tweet* by_id(const std::string& tweet_id) const;
    // tweets of a user, ascending timestamp
    const std::vector<const Tweet*>& by_user(const std::string& user_id) const;
    // retweets of a root, ascending timestamp (anomalous ones quarantined)
    const std::vector<const Tweet*>& retweets_of(const std::string& root_tweet_id) const;
    std::vector<const Tweet*> roots() const;  // non-retweet tweets, ascending timestamp

    size_t size() const { return tweets_.size(); }
    size_t cascade_count() const;
    const IngestReport& report() const { return report_; }
    const std::vector<Tweet>& all() const { return tweets_; }

private:
    std::vector<Tweet> tweets_;
    std::unordered_map<std::string, size_t> by_id_;
    std::unordered_map<std::string, std::vector<const Tweet*>> by_user_;
    std::unordered_map<std::string, std::vector<const Tweet*>> by_root_;
    IngestReport report_;
    static const std::vector<const Tweet*> kEmpty;
};

class UserStore {
public:
    void add(UserRecord u);  // throws on duplicate user_id
    const UserRecord* by_id(const std::string& user_id) const;
    size_t size() const { return users_.size(); }
    const std::vector<UserRecord>& all() const { return users_; }

private:
    std::vector<UserRecord> users_;
    std::unordered_map<std::string, size_t> by_id_;
};

class NewsStore {
public:
    void add(NewsArticle a);  // throws on duplicate news_id
    void finalize();          // sorts by timestamp
    size_t size() const { return articles_.size(); }
    const std::vector<NewsArticle>& all() const { return articles_; }

private:
    std::vector<NewsArticle> articles_;
    std::unordered_map<std::string, bool> seen_;
};

class TrendingStore {
public:
    void add(TrendingDay d);  // throws on duplicate date or bad shape
    const TrendingDay* by_date(const std::string& date) const;
    size_t size() const { return days_.size(); }
    const std::vector<TrendingDay>& all() const { return days_; }

private:
    std::vector<TrendingDay> days_;
    std::unordered_map<std::string, size_t> by_date_;
};

// Single normalization point: every text field passes through here at load.
std::string normalize_text(const std::string& raw);

// "YYYY-MM-DD" for an epoch-seconds timestamp (UTC)
std::string day_of(int64_t epoch_seconds);

TweetStore load_tweets(const std::filesystem::path& path);
UserStore load_users(const std::filesystem::path& path);
NewsStore load_news(const std::filesystem::path& path);
TrendingStore load_trending(const std::filesystem::path& path);
HateLexicon load_lexicon(const std::filesystem::path& path);

void save_tweets(const TweetStore& store, const std::filesystem::path& path);
void save_users(const UserStore& store, const std::filesystem::path& path);
void save_news(const NewsStore& store, const std::filesystem::path& path);

// The n articles with largest timestamp <= t, newest first; short list if
// fewer exist.
std::vector<const NewsArticle*> recent_news(const NewsStore& store, int64_t t, size_t n);

// hate label if present, else lexicon fallback (any lexicon term occurrence)
bool is_hateful(const Tweet& t, const HateLexicon& lexicon);

}  // namespace diffusia::corpus
