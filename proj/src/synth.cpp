#include "diffusia/synth.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>

#include "diffusia/graph.hpp"
#include "diffusia/jsonl.hpp"
#include "diffusia/rng.hpp"

namespace diffusia::synth {

namespace {

std::string user_name(size_t i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "u%05zu", i);
    return buf;
}

std::string pad_id(const char* prefix, size_t i) {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%s%06zu", prefix, i);
    return buf;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

World generate_world(const WorldConfig& cfg) {
    if (cfg.n_users < 2 || cfg.n_tweets < 1 || cfg.n_news < 1 || cfg.n_hashtags < 1)
        throw std::runtime_error("generate_world: counts must be >= 1 (users >= 2)");
    if (cfg.n_tweets < cfg.n_hashtags)
        throw std::runtime_error("generate_world: infeasible config (n_tweets < n_hashtags)");
    if (cfg.hate_user_fraction < 0 || cfg.hate_user_fraction > 1 ||
        cfg.exogenous_coupling < 0 || cfg.exogenous_coupling > 1)
        throw std::runtime_error("generate_world: fractions must be in [0,1]");

    Rng master(cfg.seed ^ 0x5e3d11ULL);
    World world;

    // --- lexicon ---
    for (size_t i = 0; i < cfg.lexicon_size; ++i)
        world.lexicon.terms.push_back("badword" + std::to_string(i));

    // --- follower graph: preferential attachment ---
    Rng graph_rng = master.stream(1);
    std::vector<double> attach_weight(cfg.n_users, 1.0);
    std::vector<int64_t> follower_count(cfg.n_users, 0);
    for (size_t i = 1; i < cfg.n_users; ++i) {
        size_t m = std::min(cfg.follows_per_user, i);
        std::set<size_t> chosen;
        double total = 0.0;
        for (size_t j = 0; j < i; ++j) total += attach_weight[j];
        size_t guard = 0;
        while (chosen.size() < m && guard++ < 50 * m) {
            double r = graph_rng.next_double() * total;
            size_t pick = 0;
            for (size_t j = 0; j < i; ++j) {
                r -= attach_weight[j];
                if (r <= 0.0) { pick = j; break; }
            }
            chosen.insert(pick);
        }
        for (size_t j : chosen) {
            world.edges.emplace_back(user_name(j), user_name(i));  // i follows j
            ++follower_count[j];
            attach_weight[j] += cfg.pa_exponent;
        }
    }

    // --- users ---
    Rng user_rng = master.stream(2);
    std::vector<size_t> favorite_topic(cfg.n_users);
    std::vector<bool> hate_user(cfg.n_users);
    for (size_t i = 0; i < cfg.n_users; ++i) {
        favorite_topic[i] = user_rng.next_below(cfg.n_hashtags);
        hate_user[i] = user_rng.next_double() < cfg.hate_user_fraction;
        corpus::UserRecord u;
        u.user_id = user_name(i);
        u.followers_count = follower_count[i];
        u.created_at = cfg.start_time - 86400 * (30 + static_cast<int64_t>(user_rng.next_below(970)));
        world.users.add(std::move(u));
    }

    // --- topic vocabulary ---
    auto topic_words = [](size_t topic) {
        std::vector<std::string> words;
        for (size_t j = 0; j < 8; ++j)
            words.push_back("t" + std::to_string(topic) + "w" + std::to_string(j));
        return words;
    };
    auto topic_tag = [](size_t topic) { return "tag" + std::to_string(topic); };

    // --- news stream with a drifting hot topic ---
    Rng news_rng = master.stream(3);
    const size_t n_epochs = 12;
    std::vector<size_t> hot_topic(n_epochs);
    for (size_t e = 0; e < n_epochs; ++e) hot_topic[e] = news_rng.next_below(cfg.n_hashtags);
    auto epoch_of = [&](int64_t t) {
        int64_t off = std::clamp<int64_t>(t - cfg.start_time, 0, cfg.horizon - 1);
        return static_cast<size_t>(off * static_cast<int64_t>(n_epochs) / cfg.horizon);
    };
    std::vector<int64_t> news_times(cfg.n_news);
    for (auto& t : news_times)
        t = cfg.start_time + static_cast<int64_t>(news_rng.next_double() *
                                                  static_cast<double>(cfg.horizon));
    std::sort(news_times.begin(), news_times.end());
    std::vector<size_t> news_topic(cfg.n_news);
    for (size_t i = 0; i < cfg.n_news; ++i) {
        size_t hot = hot_topic[epoch_of(news_times[i])];
        news_topic[i] = news_rng.next_double() < 0.5 ? hot : news_rng.next_below(cfg.n_hashtags);
        corpus::NewsArticle a;
        a.news_id = pad_id("n", i);
        a.timestamp = news_times[i];
        auto words = topic_words(news_topic[i]);
        std::string headline;
        for (size_t w = 0; w < 4; ++w) {
            headline += words[news_rng.next_below(words.size())];
            headline += " ";
        }
        headline += "news";
        a.headline = headline;
        world.news.add(std::move(a));
    }
    world.news.finalize();

    // the exogenous signal: fraction of the last `news_per_tweet` articles
    // about a crisis topic (fixed subset of the topic space); time-varying,
    // present only in the news stream
    auto is_crisis = [&](size_t topic) { return topic % cfg.crisis_topic_stride == 0; };
    auto news_climate = [&](int64_t t) {
        auto recent = corpus::recent_news(world.news, t, cfg.news_per_tweet);
        if (recent.empty()) return 0.0;
        size_t match = 0;
        for (const corpus::NewsArticle* a : recent) {
            // recover topic from the id (positions are stable after sort)
            size_t idx = std::stoul(a->news_id.substr(1));
            if (is_crisis(news_topic[idx])) ++match;
        }
        return static_cast<double>(match) / static_cast<double>(recent.size());
    };

    // --- dynamic label bins: log-spaced from 1 minute to obs_window ---
    world.bin_offsets.resize(cfg.n_bins);
    const double lo = std::log(60.0), hi = std::log(static_cast<double>(cfg.obs_window));
    for (size_t j = 0; j < cfg.n_bins; ++j) {
        double f = cfg.n_bins == 1 ? 1.0 : static_cast<double>(j) / (cfg.n_bins - 1);
        world.bin_offsets[j] = static_cast<int64_t>(std::exp(lo + f * (hi - lo)));
    }

    // --- root tweets ---
    Rng tweet_rng = master.stream(4);
    struct Root {
        size_t author;
        size_t topic;
        int64_t t;
        bool hateful;
        std::string id;
    };
    std::vector<Root> roots(cfg.n_tweets);
    // leave room for retweets inside the observation window
    const int64_t tweet_span = std::max<int64_t>(1, cfg.horizon - cfg.obs_window);
    for (size_t i = 0; i < cfg.n_tweets; ++i) {
        Root& r = roots[i];
        r.author = tweet_rng.next_below(cfg.n_users);
        r.t = cfg.start_time + 1 +
              static_cast<int64_t>(tweet_rng.next_double() * static_cast<double>(tweet_span));
        r.topic = i < cfg.n_hashtags
                      ? i  // every hashtag appears at least once (feasibility)
                      : (tweet_rng.next_double() < cfg.hot_topic_prob
                             ? hot_topic[epoch_of(r.t)]
                             : favorite_topic[r.author]);
        r.id = pad_id("t", i);
    }
    std::sort(roots.begin(), roots.end(),
              [](const Root& a, const Root& b) { return a.t < b.t; });
    for (size_t i = 0; i < roots.size(); ++i) {
        Root& r = roots[i];
        r.id = pad_id("t", i);
        double rate = cfg.hate_tweet_rate + cfg.hate_news_coupling * (news_climate(r.t) - 0.2);
        rate = std::clamp(rate, 0.0, 1.0);
        r.hateful = hate_user[r.author] && tweet_rng.next_double() < rate;
    }

    for (const Root& r : roots) {
        corpus::Tweet tw;
        tw.tweet_id = r.id;
        tw.user_id = user_name(r.author);
        tw.timestamp = r.t;
        auto words = topic_words(r.topic);
        std::string body;
        size_t n_words = 4 + tweet_rng.next_below(4);
        for (size_t w = 0; w < n_words; ++w) {
            body += words[tweet_rng.next_below(words.size())];
            body += " ";
        }
        if (r.hateful) {
            body += world.lexicon.terms[tweet_rng.next_below(world.lexicon.size())];
            body += " ";
        }
        body += "#" + topic_tag(r.topic);
        tw.text = corpus::normalize_text(body);
        tw.hashtags = {topic_tag(r.topic)};
        tw.hate_label = r.hateful ? corpus::HateLabel::hate : corpus::HateLabel::non_hate;
        world.tweets.add(std::move(tw));
    }

    // --- retweets from the planted logistic ground truth ---
    auto net = graph::InfoNetwork::build(world.edges);
    Rng rt_rng = master.stream(5);
    size_t rt_counter = 0;
    for (const Root& r : roots) {
        const std::string author = user_name(r.author);
        if (!net.has_node(author)) continue;
        double nm = news_climate(r.t);
        for (uint32_t f : net.followers(net.intern_id(author))) {
            const std::string& cand = net.name(f);
            size_t cand_idx = std::stoul(cand.substr(1));
            double aff = favorite_topic[cand_idx] == r.topic ? 1.0 : 0.0;
            double logit = cfg.bias + cfg.w_affinity * aff +
                           cfg.exogenous_coupling * cfg.w_news * (2.0 * nm - 0.4) +
                           cfg.w_hate * (r.hateful ? 1.0 : 0.0);
            double p = sigmoid(logit);
            TruthRow row;
            row.tweet_id = r.id;
            row.candidate_id = cand;
            row.p_true = p;
            row.news_signal = nm;
            row.labels_per_bin.assign(cfg.n_bins, 0);
            if (rt_rng.next_double() < p) {
                row.label = 1;
                // front-loaded retweet delay
                double u = rt_rng.next_double();
                auto delay = static_cast<int64_t>(
                    60.0 + u * u * static_cast<double>(cfg.obs_window - 60));
                for (size_t j = 0; j < cfg.n_bins; ++j) {
                    int64_t lo_edge = j == 0 ? 0 : world.bin_offsets[j - 1];
                    if (delay > lo_edge && delay <= world.bin_offsets[j]) row.labels_per_bin[j] = 1;
                }
                corpus::Tweet rt;
                rt.tweet_id = pad_id("r", rt_counter++);
                rt.user_id = cand;
                rt.timestamp = r.t + delay;
                rt.text = "rt " + topic_tag(r.topic);
                rt.hashtags = {topic_tag(r.topic)};
                rt.is_retweet = true;
                rt.root_tweet_id = r.id;
                world.tweets.add(std::move(rt));
            }
            world.truth.push_back(std::move(row));
        }
    }
    world.tweets.finalize();

    // --- trending calendar: 50 tags per day, tweet-count ranked ---
    std::map<std::string, std::map<std::string, size_t>> day_counts;
    for (const auto& tw : world.tweets.all())
        for (const auto& h : tw.hashtags) ++day_counts[corpus::day_of(tw.timestamp)][h];
    for (int64_t day = cfg.start_time / 86400; day <= (cfg.start_time + cfg.horizon) / 86400;
         ++day) {
        std::string date = corpus::day_of(day * 86400);
        corpus::TrendingDay td;
        td.date = date;
        std::vector<std::pair<size_t, std::string>> ranked;
        for (const auto& [tag, n] : day_counts[date]) ranked.emplace_back(n, tag);
        std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first > b.first;
            return a.second < b.second;
        });
        std::set<std::string> used;
        for (const auto& [n, tag] : ranked) {
            if (td.hashtags.size() >= 50) break;
            td.hashtags.push_back(tag);
            used.insert(tag);
        }
        for (size_t i = 0; td.hashtags.size() < 50; ++i) {
            std::string tag = i < cfg.n_hashtags ? topic_tag(i) : "filler" + std::to_string(i);
            if (!used.count(tag)) {
                td.hashtags.push_back(tag);
                used.insert(tag);
            }
        }
        world.trending.add(std::move(td));
    }
    return world;
}

void write_world(const World& world, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    corpus::save_tweets(world.tweets, dir / "tweets.jsonl");
    corpus::save_users(world.users, dir / "users.jsonl");
    corpus::save_news(world.news, dir / "news.jsonl");
    {
        JsonlWriter w(dir / "trending.jsonl");
        for (const auto& d : world.trending.all())
            w.write(json{{"date", d.date}, {"hashtags", d.hashtags}});
    }
    {
        JsonlWriter w(dir / "edges.jsonl");
        for (const auto& [src, dst] : world.edges) w.write(json{{"src", src}, {"dst", dst}});
    }
    {
        std::string lex;
        for (const auto& t : world.lexicon.terms) lex += t + "\n";
        write_file(dir / "lexicon.txt", lex);
    }
    {
        JsonlWriter w(dir / "truth.sidecar");
        for (const auto& row : world.truth)
            w.write(json{{"tweet_id", row.tweet_id},
                         {"candidate_id", row.candidate_id},
                         {"p_true", row.p_true},
                         {"news_signal", row.news_signal},
                         {"label", row.label},
                         {"labels_per_bin", row.labels_per_bin}});
    }
    {
        json bins = json::array();
        for (int64_t b : world.bin_offsets) bins.push_back(b);
        write_file(dir / "bins.json", bins.dump() + "\n");
    }
}

std::vector<TruthRow> load_sidecar(const std::filesystem::path& path) {
    std::vector<TruthRow> rows;
    for_each_jsonl(path, [&](size_t, const json& obj) {
        TruthRow row;
        row.tweet_id = obj["tweet_id"].get<std::string>();
        row.candidate_id = obj["candidate_id"].get<std::string>();
        row.p_true = obj["p_true"].get<double>();
        row.news_signal = obj.value("news_signal", 0.0);
        row.label = obj["label"].get<int>();
        row.labels_per_bin = obj["labels_per_bin"].get<std::vector<int>>();
        rows.push_back(std::move(row));
    });
    return rows;
}

}  // namespace diffusia::synth
