#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <numeric>
#include <string>
#include <vector>

#include "diffusia/baselines.hpp"
#include "diffusia/corpus.hpp"
#include "diffusia/hategen.hpp"
#include "diffusia/jsonl.hpp"
#include "diffusia/metrics.hpp"
#include "diffusia/pipeline.hpp"
#include "diffusia/retina.hpp"
#include "diffusia/rng.hpp"
#include "diffusia/synth.hpp"

namespace fs = std::filesystem;
using namespace diffusia;

namespace {

constexpr const char* kVersion = "0.1.0";

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// merged run options: flags > config file > defaults
struct RunConfig {
    json values = json::object();

    static RunConfig from_file(const std::string& path) {
        RunConfig c;
        if (!path.empty()) {
            if (!fs::exists(path)) throw UsageError("config file not found: " + path);
            c.values = json::parse(read_file(path));
            if (!c.values.is_object()) throw UsageError("config file must hold a JSON object");
        }
        return c;
    }
    template <typename T>
    T get(const std::string& key, T fallback) const {
        if (values.contains(key)) return values.at(key).get<T>();
        return fallback;
    }
    void override_if(const CLI::App* cmd, const std::string& flag, const std::string& key,
                     const json& value) {
        if (cmd->count(flag) > 0) values[key] = value;
    }
};

int thread_cap() {
    const char* env = std::getenv("DIFFUSIA_THREADS");
    if (!env) return 1;
    int n = std::atoi(env);
    return n > 0 ? n : 1;
}

std::string hash_hex(uint64_t h) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

json hash_inputs(const std::vector<fs::path>& inputs) {
    json out = json::object();
    for (const auto& p : inputs)
        if (fs::exists(p)) out[p.filename().string()] = hash_hex(fnv1a(read_file(p)));
    return out;
}

std::vector<fs::path> data_files(const fs::path& dir) {
    std::vector<fs::path> files;
    for (const char* name : {"tweets.jsonl", "users.jsonl", "news.jsonl", "trending.jsonl",
                             "edges.jsonl", "lexicon.txt", "bins.json"})
        files.push_back(dir / name);
    return files;
}

void write_manifest(const fs::path& out_dir, const std::string& subcommand, uint64_t seed,
                    const json& config, const json& input_hashes,
                    const std::vector<std::string>& artifacts) {
    json m{{"subcommand", subcommand},
           {"seed", seed},
           {"config", config},
           {"inputs", input_hashes},
           {"artifacts", artifacts},
           {"threads", thread_cap()},
           {"versions", json{{"diffusia", kVersion},
                             {"formats", json::array({"diffusia-text-v1", "diffusia-clf-v1",
                                                      "diffusia-retina-v1"})}}}};
    write_file(out_dir / "manifest.json", m.dump(2) + "\n");
}

json report_json(const metrics::ClassificationReport& r) {
    json out{{"macro_f1", r.macro_f1},
             {"accuracy", r.accuracy},
             {"positive", json{{"precision", r.positive.precision},
                               {"recall", r.positive.recall},
                               {"f1", r.positive.f1}}},
             {"negative", json{{"precision", r.negative.precision},
                               {"recall", r.negative.recall},
                               {"f1", r.negative.f1}}},
             {"confusion", json{{"tp", r.tp}, {"fp", r.fp}, {"tn", r.tn}, {"fn", r.fn}}}};
    if (r.auc) out["auc"] = *r.auc;
    return out;
}

pipeline::ModelConfig model_config(const RunConfig& cfg, uint64_t seed) {
    pipeline::ModelConfig mc;
    mc.tfidf_keep = cfg.get<size_t>("tfidf_keep", mc.tfidf_keep);
    mc.emb_tweet_dim = cfg.get<size_t>("emb_tweet_dim", mc.emb_tweet_dim);
    mc.emb_news_dim = cfg.get<size_t>("emb_news_dim", mc.emb_news_dim);
    mc.embedding_kind = cfg.get<std::string>("embedding_kind", mc.embedding_kind);
    mc.embedding_epochs = cfg.get<size_t>("embedding_epochs", mc.embedding_epochs);
    mc.history_window = cfg.get<size_t>("history", mc.history_window);
    mc.news_per_tweet = cfg.get<size_t>("news_per_tweet", mc.news_per_tweet);
    mc.sp_cap = cfg.get<int>("sp_cap", mc.sp_cap);
    mc.seed = seed;
    return mc;
}

pipeline::RetinaDatasetConfig dataset_config(const RunConfig& cfg, uint64_t seed) {
    pipeline::RetinaDatasetConfig dc;
    dc.include_exogenous = cfg.get<bool>("include_exogenous", false);
    dc.max_roots = cfg.get<size_t>("max_roots", 0);
    dc.max_candidates = cfg.get<size_t>("max_candidates", 0);
    dc.seed = seed;
    return dc;
}

std::vector<size_t> parse_ks(const std::string& list) {
    std::vector<size_t> ks;
    std::string cur;
    for (char c : list + ",") {
        if (c == ',') {
            if (!cur.empty()) ks.push_back(std::stoul(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (ks.empty()) throw UsageError("--k needs a comma-separated list of positive integers");
    return ks;
}

graph::Cascade cascade_of(const corpus::TweetStore& tweets, const corpus::Tweet& root) {
    graph::Cascade c;
    c.root_tweet_id = root.tweet_id;
    c.root_user = root.user_id;
    c.root_timestamp = root.timestamp;
    std::unordered_set<std::string> seen{root.user_id};
    for (const corpus::Tweet* rt : tweets.retweets_of(root.tweet_id))
        if (seen.insert(rt->user_id).second) c.events.push_back({rt->user_id, rt->timestamp});
    return c;
}

// ---- subcommand bodies ----

void run_ingest(const std::string& data, const std::string& out, const RunConfig& cfg) {
    fs::create_directories(out);
    pipeline::DataBundle b = pipeline::load_bundle(data);
    corpus::save_tweets(b.tweets, fs::path(out) / "tweets.jsonl");
    corpus::save_users(b.users, fs::path(out) / "users.jsonl");
    corpus::save_news(b.news, fs::path(out) / "news.jsonl");
    const auto& rep = b.tweets.report();
    json report{{"tweets", b.tweets.size()},
                {"users", b.users.size()},
                {"news", b.news.size()},
                {"trending_days", b.trending.size()},
                {"lexicon_terms", b.lexicon.size()},
                {"edges", b.edges.size()},
                {"nodes", b.net.node_count()},
                {"dropped_self_loops", b.net.dropped_self_loops()},
                {"cascades", b.tweets.cascade_count()},
                {"dangling_roots", rep.dangling_roots},
                {"time_anomalies", rep.time_anomalies}};
    write_file(fs::path(out) / "ingest_report.json", report.dump(2) + "\n");
    write_manifest(out, "ingest", 0, cfg.values, hash_inputs(data_files(data)),
                   {"tweets.jsonl", "users.jsonl", "news.jsonl", "ingest_report.json"});
}

void run_synth(const std::string& out, uint64_t seed, const RunConfig& cfg) {
    synth::WorldConfig wc;
    wc.n_users = cfg.get<size_t>("n_users", wc.n_users);
    wc.n_tweets = cfg.get<size_t>("n_tweets", wc.n_tweets);
    wc.n_news = cfg.get<size_t>("n_news", wc.n_news);
    wc.n_hashtags = cfg.get<size_t>("n_hashtags", wc.n_hashtags);
    wc.lexicon_size = cfg.get<size_t>("lexicon_size", wc.lexicon_size);
    wc.follows_per_user = cfg.get<size_t>("follows_per_user", wc.follows_per_user);
    wc.hate_user_fraction = cfg.get<double>("hate_user_fraction", wc.hate_user_fraction);
    wc.hate_tweet_rate = cfg.get<double>("hate_tweet_rate", wc.hate_tweet_rate);
    wc.hate_news_coupling = cfg.get<double>("hate_news_coupling", wc.hate_news_coupling);
    wc.exogenous_coupling = cfg.get<double>("exogenous_coupling", wc.exogenous_coupling);
    wc.hot_topic_prob = cfg.get<double>("hot_topic_prob", wc.hot_topic_prob);
    wc.n_bins = cfg.get<size_t>("n_bins", wc.n_bins);
    wc.news_per_tweet = cfg.get<size_t>("news_per_tweet", wc.news_per_tweet);
    wc.bias = cfg.get<double>("bias", wc.bias);
    wc.w_affinity = cfg.get<double>("w_affinity", wc.w_affinity);
    wc.w_news = cfg.get<double>("w_news", wc.w_news);
    wc.w_hate = cfg.get<double>("w_hate", wc.w_hate);
    wc.seed = seed;
    synth::World world = synth::generate_world(wc);
    synth::write_world(world, out);
    write_manifest(out, "synth", seed, cfg.values, json::object(),
                   {"tweets.jsonl", "users.jsonl", "news.jsonl", "trending.jsonl", "edges.jsonl",
                    "lexicon.txt", "truth.sidecar", "bins.json"});
}

void run_featurize(const std::string& data, const std::string& out, uint64_t seed,
                   const RunConfig& cfg) {
    fs::create_directories(out);
    pipeline::DataBundle b = pipeline::load_bundle(data);
    pipeline::FittedModels m = pipeline::fit_models(b, model_config(cfg, seed));
    pipeline::save_models(m, out);
    features::FeatureModels view = pipeline::feature_view(b, m);
    json stats{{"tfidf_tweet_dim", m.tfidf_tweets.selected_dim},
               {"tfidf_news_dim", m.tfidf_news.selected_dim},
               {"emb_tweet_dim", m.emb_tweets.dim},
               {"emb_news_dim", m.emb_news.dim},
               {"hategen_dim", features::hategen_dim(view)},
               {"retweet_dim", features::retweet_candidate_dim(view)},
               {"retweet_dim_with_exogenous", features::retweet_candidate_dim(view, true)}};
    write_file(fs::path(out) / "feature_stats.json", stats.dump(2) + "\n");
    write_manifest(out, "featurize", seed, cfg.values, hash_inputs(data_files(data)),
                   {"tfidf_tweets.json", "tfidf_news.json", "emb_tweets.json", "emb_news.json",
                    "feature_config.json", "feature_stats.json"});
}

hategen::LabeledDataset select_rows(const hategen::LabeledDataset& ds,
                                    const std::vector<size_t>& rows) {
    hategen::LabeledDataset out;
    for (size_t i : rows) {
        out.X.push_back(ds.X[i]);
        out.y.push_back(ds.y[i]);
        out.meta.push_back(ds.meta[i]);
    }
    return out;
}

struct HategenRun {
    hategen::Classifier model;
    metrics::ClassificationReport test_report;
    size_t train_rows = 0, test_rows = 0;
};

HategenRun train_hategen_once(const hategen::LabeledDataset& ds, const RunConfig& cfg,
                              uint64_t seed) {
    const std::string kind_name = cfg.get<std::string>("classifier", "logistic");
    hategen::ClassifierKind kind;
    if (kind_name == "logistic")
        kind = hategen::ClassifierKind::logistic_regression;
    else if (kind_name == "tree")
        kind = hategen::ClassifierKind::decision_tree;
    else
        throw UsageError("classifier must be logistic or tree");

    pipeline::GroupSplit split =
        pipeline::split_groups(ds.rows(), cfg.get<double>("test_fraction", 0.2), seed);
    hategen::LabeledDataset train = select_rows(ds, split.train);
    hategen::LabeledDataset test = select_rows(ds, split.test);

    const std::string sampling = cfg.get<std::string>("sampling", "none");
    if (sampling == "down")
        train = hategen::downsample(train, seed);
    else if (sampling == "up")
        train = hategen::upsample(train, seed);
    else if (sampling != "none")
        throw UsageError("sampling must be none, down or up");

    hategen::TrainingConfig tc;
    tc.seed = seed;
    tc.class_balanced = cfg.get<bool>("class_balanced", true);
    tc.max_depth = cfg.get<size_t>("max_depth", tc.max_depth);
    tc.learning_rate = cfg.get<double>("learning_rate", tc.learning_rate);
    tc.epochs = cfg.get<size_t>("epochs", tc.epochs);

    HategenRun run{hategen::Classifier::train(kind, train, tc), {}, train.rows(), test.rows()};
    std::vector<double> scores;
    for (const auto& row : test.X) scores.push_back(run.model.predict_proba(row));
    run.test_report = metrics::classification_metrics(scores, test.y);
    return run;
}

void run_train_hategen(const std::string& data, const std::string& out, uint64_t seed,
                       const RunConfig& cfg) {
    fs::create_directories(out);
    pipeline::DataBundle b = pipeline::load_bundle(data);
    pipeline::FittedModels m = pipeline::fit_models(b, model_config(cfg, seed));
    hategen::LabeledDataset ds = pipeline::build_hategen_dataset(b, m);
    HategenRun run = train_hategen_once(ds, cfg, seed);

    pipeline::save_models(m, fs::path(out) / "features");
    run.model.save(fs::path(out) / "model.json");
    json report{{"rows", ds.rows()},
                {"positives", ds.positives()},
                {"train_rows", run.train_rows},
                {"test_rows", run.test_rows},
                {"test", report_json(run.test_report)}};
    write_file(fs::path(out) / "metrics.json", report.dump(2) + "\n");
    write_manifest(out, "train-hategen", seed, cfg.values, hash_inputs(data_files(data)),
                   {"model.json", "metrics.json", "features"});
}

void run_ablate_hategen(const std::string& data, const std::string& out, uint64_t seed,
                        const std::string& drop_list, const RunConfig& cfg) {
    fs::create_directories(out);
    pipeline::DataBundle b = pipeline::load_bundle(data);
    pipeline::FittedModels m = pipeline::fit_models(b, model_config(cfg, seed));
    features::FeatureModels view = pipeline::feature_view(b, m);
    hategen::LabeledDataset ds = pipeline::build_hategen_dataset(b, m);
    pipeline::BlockRanges blocks = pipeline::hategen_blocks(view);

    std::vector<std::string> groups;
    {
        std::string cur;
        for (char c : drop_list + ",") {
            if (c == ',') {
                if (!cur.empty()) groups.push_back(cur);
                cur.clear();
            } else {
                cur += c;
            }
        }
    }
    if (groups.empty()) groups = {"history", "topic", "endogenous", "exogenous"};

    json table = json::array();
    HategenRun base = train_hategen_once(ds, cfg, seed);
    table.push_back(json{{"dropped", "none"}, {"macro_f1", base.test_report.macro_f1},
                         {"accuracy", base.test_report.accuracy}});
    for (const auto& g : groups) {
        hategen::LabeledDataset dropped = pipeline::drop_block(ds, blocks, g);
        HategenRun run = train_hategen_once(dropped, cfg, seed);
        table.push_back(json{{"dropped", g}, {"macro_f1", run.test_report.macro_f1},
                             {"accuracy", run.test_report.accuracy}});
    }
    write_file(fs::path(out) / "ablation.json", table.dump(2) + "\n");
    write_manifest(out, "ablate-hategen", seed, cfg.values, hash_inputs(data_files(data)),
                   {"ablation.json"});
}

void run_train_retina(const std::string& data, const std::string& out, uint64_t seed,
                      const std::string& mode_name, double lambda, const RunConfig& cfg) {
    fs::create_directories(out);
    retina::Mode mode;
    if (mode_name == "static")
        mode = retina::Mode::static_head;
    else if (mode_name == "dynamic")
        mode = retina::Mode::dynamic_head;
    else
        throw UsageError("--mode must be static or dynamic");

    pipeline::DataBundle b = pipeline::load_bundle(data);
    pipeline::FittedModels m = pipeline::fit_models(b, model_config(cfg, seed));
    pipeline::RetinaDatasetConfig dc = dataset_config(cfg, seed);
    pipeline::RetinaDataset ds = pipeline::build_retina_dataset(b, m, dc);
    if (ds.samples.empty()) throw std::runtime_error("train-retina: no candidate samples");

    double test_fraction = cfg.get<double>("test_fraction", 0.2);
    pipeline::GroupSplit split =
        pipeline::split_groups(ds.group_offsets.size() - 1, test_fraction, seed);
    std::vector<retina::Sample> train = pipeline::gather(ds, split.train);

    retina::TrainConfig tc;
    tc.batch_size = cfg.get<size_t>("batch_size",
                                    mode == retina::Mode::dynamic_head ? 32 : 16);
    tc.optimizer = cfg.get<std::string>("optimizer", "adam") == "sgd" ? retina::Optimizer::sgd
                                                                      : retina::Optimizer::adam;
    tc.learning_rate = cfg.get<double>("learning_rate", 1e-3);
    tc.lambda = lambda;
    tc.epochs = cfg.get<size_t>("epochs", 10);
    tc.seed = seed;
    tc.n_intervals = b.bin_offsets.size();

    size_t hdim = cfg.get<size_t>("hdim", 32);
    bool use_attention = cfg.get<bool>("use_attention", true);
    retina::RetinaModel model = retina::RetinaModel::init(
        mode, static_cast<size_t>(train[0].x_user.size()),
        static_cast<size_t>(train[0].x_tweet.size()), m.emb_news.dim, hdim, seed, use_attention);
    retina::RetinaModel::TrainResult tr = model.train(train, tc);

    pipeline::RetinaEvaluation ev =
        pipeline::evaluate_retina(model, ds, split.test, {1, 5, 10, 20, 50});

    pipeline::save_models(m, fs::path(out) / "features");
    model.save(fs::path(out) / "model.json");
    json dsj{{"include_exogenous", dc.include_exogenous},
             {"max_roots", dc.max_roots},
             {"max_candidates", dc.max_candidates},
             {"test_fraction", test_fraction},
             {"seed", seed}};
    write_file(fs::path(out) / "dataset.json", dsj.dump(2) + "\n");
    json report{{"mode", mode_name},
                {"samples", ds.samples.size()},
                {"positives", ds.positives},
                {"cascades", ds.group_offsets.size() - 1},
                {"retweeters_outside_candidates", ds.retweeters_outside_candidates},
                {"pos_weight", tr.pos_weight},
                {"loss_per_epoch", tr.loss_per_epoch},
                {"test", report_json(ev.classification)}};
    json ranking = json::object();
    for (const auto& [k, v] : ev.ranking.map_at_k) ranking["map@" + std::to_string(k)] = v;
    for (const auto& [k, v] : ev.ranking.hits_at_k) ranking["hits@" + std::to_string(k)] = v;
    report["ranking"] = ranking;
    write_file(fs::path(out) / "metrics.json", report.dump(2) + "\n");
    write_manifest(out, "train-retina", seed, cfg.values, hash_inputs(data_files(data)),
                   {"model.json", "metrics.json", "dataset.json", "features"});
}

void run_predict(const std::string& data, const std::string& model_dir, const std::string& out,
                 const std::string& k_list, const RunConfig& cfg) {
    fs::create_directories(out);
    pipeline::DataBundle b = pipeline::load_bundle(data);
    pipeline::FittedModels m = pipeline::load_models(fs::path(model_dir) / "features");
    retina::RetinaModel model = retina::RetinaModel::load(fs::path(model_dir) / "model.json");
    json dsj = json::parse(read_file(fs::path(model_dir) / "dataset.json"));
    pipeline::RetinaDatasetConfig dc;
    dc.include_exogenous = dsj.at("include_exogenous").get<bool>();
    dc.max_roots = dsj.at("max_roots").get<size_t>();
    dc.max_candidates = dsj.at("max_candidates").get<size_t>();
    dc.seed = dsj.at("seed").get<uint64_t>();
    pipeline::RetinaDataset ds = pipeline::build_retina_dataset(b, m, dc);

    size_t top_k = parse_ks(k_list.empty() ? "20" : k_list).back();
    size_t n_intervals =
        model.mode() == retina::Mode::dynamic_head ? b.bin_offsets.size() : 0;
    JsonlWriter w(fs::path(out) / "predictions.jsonl");
    for (size_t g = 0; g + 1 < ds.group_offsets.size(); ++g) {
        std::vector<retina::Sample> group(
            ds.samples.begin() + static_cast<ptrdiff_t>(ds.group_offsets[g]),
            ds.samples.begin() + static_cast<ptrdiff_t>(ds.group_offsets[g + 1]));
        auto ranked = retina::predict_retweeters(model, group, n_intervals);
        json cands = json::array();
        for (size_t i = 0; i < ranked.size() && i < top_k; ++i) {
            json c{{"candidate_id", ranked[i].candidate_id}};
            if (ranked[i].scores.empty())
                c["score"] = ranked[i].score;
            else
                c["scores"] = ranked[i].scores;
            cands.push_back(std::move(c));
        }
        w.write(json{{"tweet_id", ds.root_ids[g]}, {"candidates", cands}});
    }
    write_manifest(out, "predict", dc.seed, cfg.values, hash_inputs(data_files(data)),
                   {"predictions.jsonl"});
}

void run_simulate(const std::string& kind, const std::string& data, const std::string& out,
                  uint64_t seed, const RunConfig& cfg) {
    if (kind != "sir" && kind != "threshold")
        throw UsageError("simulate needs a mode: sir or threshold");
    fs::create_directories(out);
    pipeline::DataBundle b = pipeline::load_bundle(data);

    size_t max_cascades = cfg.get<size_t>("max_cascades", 100);
    size_t done = 0;
    size_t tp = 0, fp = 0, tn = 0, fn = 0;
    JsonlWriter w(fs::path(out) / "simulation.jsonl");
    for (const corpus::Tweet* r : b.tweets.roots()) {
        if (done >= max_cascades) break;
        if (b.tweets.retweets_of(r->tweet_id).empty()) continue;
        if (!b.net.has_node(r->user_id)) continue;
        uint32_t root_node = b.net.intern_id(r->user_id);
        if (b.net.followers(root_node).empty()) continue;
        ++done;

        std::unordered_set<uint32_t> activated;
        json steps = json::array();
        if (kind == "sir") {
            baselines::SirConfig sc;
            sc.beta = cfg.get<double>("beta", sc.beta);
            sc.gamma = cfg.get<double>("gamma", sc.gamma);
            sc.max_steps = cfg.get<size_t>("max_steps", sc.max_steps);
            sc.seed = seed + done;
            auto res = baselines::simulate_sir(b.net, {root_node}, sc);
            activated = std::move(res.activated);
            for (const auto& s : res.steps)
                steps.push_back(json{{"infected", s.infected.size()},
                                     {"recovered", s.recovered.size()},
                                     {"new", s.newly_active.size()}});
        } else {
            baselines::ThresholdConfig tc;
            tc.uniform_random = cfg.get<std::string>("thresholds", "uniform") == "uniform";
            tc.fixed_value = cfg.get<double>("threshold_value", tc.fixed_value);
            tc.max_steps = cfg.get<size_t>("max_steps", tc.max_steps);
            tc.seed = seed + done;
            auto res = baselines::simulate_threshold(b.net, {root_node}, tc);
            activated = std::move(res.activated);
            for (const auto& round : res.activation_rounds)
                steps.push_back(json{{"new", round.size()}});
        }

        std::unordered_set<std::string> actual;
        for (const corpus::Tweet* rt : b.tweets.retweets_of(r->tweet_id))
            actual.insert(rt->user_id);
        auto followers = b.net.followers(root_node);
        for (uint32_t f : followers) {
            bool pred = activated.count(f) > 0;
            bool pos = actual.count(b.net.name(f)) > 0;
            if (pred && pos) ++tp;
            else if (pred) ++fp;
            else if (pos) ++fn;
            else ++tn;
        }
        w.write(json{{"tweet_id", r->tweet_id},
                     {"activated", activated.size()},
                     {"actual_retweeters", actual.size()},
                     {"steps", steps}});
    }
    auto f1 = [](double p, double r) { return p + r > 0 ? 2 * p * r / (p + r) : 0.0; };
    double prec_p = tp + fp > 0 ? double(tp) / double(tp + fp) : 0.0;
    double rec_p = tp + fn > 0 ? double(tp) / double(tp + fn) : 0.0;
    double prec_n = tn + fn > 0 ? double(tn) / double(tn + fn) : 0.0;
    double rec_n = tn + fp > 0 ? double(tn) / double(tn + fp) : 0.0;
    json report{{"model", kind},
                {"cascades", done},
                {"confusion", json{{"tp", tp}, {"fp", fp}, {"tn", tn}, {"fn", fn}}},
                {"macro_f1", (f1(prec_p, rec_p) + f1(prec_n, rec_n)) / 2.0}};
    write_file(fs::path(out) / "simulation_report.json", report.dump(2) + "\n");
    write_manifest(out, "simulate-" + kind, seed, cfg.values, hash_inputs(data_files(data)),
                   {"simulation.jsonl", "simulation_report.json"});
}

void run_evaluate(const std::string& data, const std::string& model_dir, const std::string& out,
                  const std::string& k_list, const RunConfig& cfg) {
    fs::create_directories(out);
    pipeline::DataBundle b = pipeline::load_bundle(data);
    pipeline::FittedModels m = pipeline::load_models(fs::path(model_dir) / "features");
    retina::RetinaModel model = retina::RetinaModel::load(fs::path(model_dir) / "model.json");
    json dsj = json::parse(read_file(fs::path(model_dir) / "dataset.json"));
    pipeline::RetinaDatasetConfig dc;
    dc.include_exogenous = dsj.at("include_exogenous").get<bool>();
    dc.max_roots = dsj.at("max_roots").get<size_t>();
    dc.max_candidates = dsj.at("max_candidates").get<size_t>();
    dc.seed = dsj.at("seed").get<uint64_t>();
    pipeline::RetinaDataset ds = pipeline::build_retina_dataset(b, m, dc);

    std::vector<size_t> ks = parse_ks(k_list.empty() ? "1,5,10,20,50" : k_list);
    std::string split_name = cfg.get<std::string>("split", "test");
    std::vector<size_t> groups;
    if (split_name == "all") {
        groups.resize(ds.group_offsets.size() - 1);
        std::iota(groups.begin(), groups.end(), 0);
    } else {
        pipeline::GroupSplit split = pipeline::split_groups(
            ds.group_offsets.size() - 1, dsj.at("test_fraction").get<double>(),
            dsj.at("seed").get<uint64_t>());
        groups = split_name == "train" ? split.train : split.test;
    }
    pipeline::RetinaEvaluation ev = pipeline::evaluate_retina(model, ds, groups, ks);

    json report{{"split", split_name},
                {"cascades", groups.size()},
                {"classification", report_json(ev.classification)},
                {"cascades_scored", ev.ranking.cascades_scored},
                {"cascades_skipped", ev.ranking.cascades_skipped}};
    json table = json::array();
    for (size_t k : ks)
        table.push_back(json{{"k", k},
                             {"map", ev.ranking.map_at_k.at(k)},
                             {"hits", ev.ranking.hits_at_k.at(k)}});
    report["ranking"] = table;
    write_file(fs::path(out) / "evaluation.json", report.dump(2) + "\n");
    // plot-ready series
    std::string tsv = "k\tmap\thits\n";
    for (size_t k : ks)
        tsv += std::to_string(k) + "\t" + std::to_string(ev.ranking.map_at_k.at(k)) + "\t" +
               std::to_string(ev.ranking.hits_at_k.at(k)) + "\n";
    write_file(fs::path(out) / "ranking_series.tsv", tsv);
    write_manifest(out, "evaluate", dc.seed, cfg.values, hash_inputs(data_files(data)),
                   {"evaluation.json", "ranking_series.tsv"});
}

void run_growth(const std::string& data, const std::string& model_dir, const std::string& out,
                const RunConfig& cfg) {
    fs::create_directories(out);
    pipeline::DataBundle b = pipeline::load_bundle(data);

    size_t max_cascades = cfg.get<size_t>("max_cascades", 50);
    std::vector<const corpus::Tweet*> roots;
    for (const corpus::Tweet* r : b.tweets.roots())
        if (!b.tweets.retweets_of(r->tweet_id).empty() && b.net.has_node(r->user_id))
            roots.push_back(r);
    std::stable_sort(roots.begin(), roots.end(),
                     [&](const corpus::Tweet* a, const corpus::Tweet* c) {
                         return b.tweets.retweets_of(a->tweet_id).size() >
                                b.tweets.retweets_of(c->tweet_id).size();
                     });
    if (roots.size() > max_cascades) roots.resize(max_cascades);

    std::string tsv = "tweet_id\tbin\toffset_s\tretweets\tsusceptible\n";
    for (const corpus::Tweet* r : roots) {
        graph::Cascade c = cascade_of(b.tweets, *r);
        std::vector<int64_t> edges{r->timestamp};
        for (int64_t off : b.bin_offsets) edges.push_back(r->timestamp + off);
        graph::GrowthCurves curves = graph::growth_curves(b.net, c, edges);
        for (size_t j = 1; j < edges.size(); ++j)
            tsv += r->tweet_id + "\t" + std::to_string(j) + "\t" +
                   std::to_string(b.bin_offsets[j - 1]) + "\t" +
                   std::to_string(curves.retweet_counts[j]) + "\t" +
                   std::to_string(curves.susceptible_counts[j]) + "\n";
    }
    write_file(fs::path(out) / "growth.tsv", tsv);
    std::vector<std::string> artifacts{"growth.tsv"};

    // with a dynamic model: predicted vs actual cumulative counts per bin
    if (!model_dir.empty()) {
        pipeline::FittedModels m = pipeline::load_models(fs::path(model_dir) / "features");
        retina::RetinaModel model = retina::RetinaModel::load(fs::path(model_dir) / "model.json");
        if (model.mode() != retina::Mode::dynamic_head)
            throw UsageError("growth --model needs a dynamic-mode model");
        json dsj = json::parse(read_file(fs::path(model_dir) / "dataset.json"));
        pipeline::RetinaDatasetConfig dc;
        dc.include_exogenous = dsj.at("include_exogenous").get<bool>();
        dc.max_roots = dsj.at("max_roots").get<size_t>();
        dc.max_candidates = dsj.at("max_candidates").get<size_t>();
        dc.seed = dsj.at("seed").get<uint64_t>();
        pipeline::RetinaDataset ds = pipeline::build_retina_dataset(b, m, dc);

        const size_t n_bins = b.bin_offsets.size();
        std::vector<double> pred(n_bins, 0.0), actual(n_bins, 0.0);
        for (const auto& s : ds.samples) {
            std::vector<double> p = model.dynamic_forward(s, n_bins);
            for (size_t j = 0; j < n_bins; ++j) {
                pred[j] += p[j];
                actual[j] += s.labels_per_bin[j];
            }
        }
        for (size_t j = 1; j < n_bins; ++j) {
            pred[j] += pred[j - 1];
            actual[j] += actual[j - 1];
        }
        auto ratios = metrics::growth_ratio(pred, actual);
        std::string rt = "bin\toffset_s\tpredicted\tactual\tratio\n";
        for (size_t j = 0; j < n_bins; ++j) {
            rt += std::to_string(j + 1) + "\t" + std::to_string(b.bin_offsets[j]) + "\t" +
                  std::to_string(pred[j]) + "\t" + std::to_string(actual[j]) + "\t" +
                  (ratios[j] ? std::to_string(*ratios[j]) : std::string("nan")) + "\n";
        }
        write_file(fs::path(out) / "growth_ratio.tsv", rt);
        artifacts.push_back("growth_ratio.tsv");
    }
    write_manifest(out, "growth", 0, cfg.values, hash_inputs(data_files(data)), artifacts);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"diffusia: hateful-content diffusion toolkit"};
    app.require_subcommand(1);

    std::string data, out, config_path, model_dir, mode = "static", k_list, drop_list;
    std::string sim_kind;
    uint64_t seed = 0;
    double lambda = 2.0;
    size_t history = 30, news_per_tweet = 60;

    auto add_common = [&](CLI::App* cmd, bool needs_data, bool needs_out) {
        auto* d = cmd->add_option("--data", data, "data directory");
        if (needs_data) d->required();
        auto* o = cmd->add_option("--out", out, "output directory");
        if (needs_out) o->required();
        cmd->add_option("--seed", seed, "random seed");
        cmd->add_option("--config", config_path, "JSON config file");
        return cmd;
    };

    auto* c_ingest = add_common(app.add_subcommand("ingest", "validate and normalize a corpus"),
                                true, true);
    auto* c_synth = add_common(app.add_subcommand("synth", "generate a synthetic world"),
                               false, true);
    auto* c_feat = add_common(app.add_subcommand("featurize", "fit text and feature models"),
                              true, true);
    c_feat->add_option("--history", history, "history window length");
    c_feat->add_option("--news-per-tweet", news_per_tweet, "news window length");
    auto* c_hategen = add_common(
        app.add_subcommand("train-hategen", "train an originator classifier"), true, true);
    c_hategen->add_option("--history", history, "history window length");
    c_hategen->add_option("--news-per-tweet", news_per_tweet, "news window length");
    auto* c_ablate = add_common(
        app.add_subcommand("ablate-hategen", "signal-group ablation for the originator task"),
        true, true);
    c_ablate->add_option("--drop", drop_list, "comma-separated signal groups");
    auto* c_retina = add_common(app.add_subcommand("train-retina", "train a retweeter model"),
                                true, true);
    c_retina->add_option("--mode", mode, "static|dynamic");
    c_retina->add_option("--lambda", lambda, "class-weight scale");
    c_retina->add_option("--history", history, "history window length");
    c_retina->add_option("--news-per-tweet", news_per_tweet, "news window length");
    auto* c_predict = add_common(app.add_subcommand("predict", "rank retweet candidates"),
                                 true, true);
    c_predict->add_option("--model", model_dir, "trained model directory")->required();
    c_predict->add_option("--k", k_list, "list length");
    auto* c_sim = add_common(app.add_subcommand("simulate", "epidemic baselines"), true, true);
    c_sim->add_option("kind", sim_kind, "sir|threshold")->required();
    auto* c_eval = add_common(app.add_subcommand("evaluate", "score a trained retweeter model"),
                              true, true);
    c_eval->add_option("--model", model_dir, "trained model directory")->required();
    c_eval->add_option("--k", k_list, "comma-separated cutoffs");
    auto* c_growth = add_common(app.add_subcommand("growth", "cascade growth series"),
                                true, true);
    c_growth->add_option("--model", model_dir, "dynamic model directory (optional)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        RunConfig cfg = RunConfig::from_file(config_path);
        // flags win over the config file
        for (CLI::App* cmd : {c_feat, c_hategen, c_retina}) {
            cfg.override_if(cmd, "--history", "history", history);
            cfg.override_if(cmd, "--news-per-tweet", "news_per_tweet", news_per_tweet);
        }

        if (c_ingest->parsed()) run_ingest(data, out, cfg);
        else if (c_synth->parsed()) run_synth(out, seed, cfg);
        else if (c_feat->parsed()) run_featurize(data, out, seed, cfg);
        else if (c_hategen->parsed()) run_train_hategen(data, out, seed, cfg);
        else if (c_ablate->parsed()) run_ablate_hategen(data, out, seed, drop_list, cfg);
        else if (c_retina->parsed()) run_train_retina(data, out, seed, mode, lambda, cfg);
        else if (c_predict->parsed()) run_predict(data, model_dir, out, k_list, cfg);
        else if (c_sim->parsed()) run_simulate(sim_kind, data, out, seed, cfg);
        else if (c_eval->parsed()) run_evaluate(data, model_dir, out, k_list, cfg);
        else if (c_growth->parsed()) run_growth(data, model_dir, out, cfg);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
