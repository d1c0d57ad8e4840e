#include "diffusia/text.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <stdexcept>
#include <unordered_map>

#include "diffusia/jsonl.hpp"
#include "diffusia/rng.hpp"

namespace diffusia::text {

namespace {

bool is_word_char(unsigned char c) {
    return std::isalnum(c) || c == '_' || c >= 128;
}

bool starts_with(const std::string& s, size_t pos, const char* prefix) {
    return s.compare(pos, std::char_traits<char>::length(prefix), prefix) == 0;
}

}  // namespace

std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> tokens;
    size_t i = 0;
    const size_t n = text.size();
    while (i < n) {
        unsigned char c = text[i];
        if (starts_with(text, i, "http://") || starts_with(text, i, "https://") ||
            starts_with(text, i, "www.")) {
            while (i < n && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
            continue;
        }
        if (c == '@') {
            ++i;
            while (i < n && is_word_char(text[i])) ++i;
            continue;
        }
        if (!is_word_char(c)) {  // '#' falls here: sigil dropped, body kept
            ++i;
            continue;
        }
        size_t start = i;
        while (i < n && is_word_char(text[i])) ++i;
        tokens.emplace_back(text, start, i - start);
    }
    return tokens;
}

namespace {

std::vector<std::string> terms_of(const std::vector<std::string>& tokens, bool bigrams) {
    std::vector<std::string> terms = tokens;
    if (bigrams) {
        for (size_t i = 0; i + 1 < tokens.size(); ++i)
            terms.push_back(tokens[i] + " " + tokens[i + 1]);
    }
    return terms;
}

}  // namespace

TfidfModel fit_tfidf(const std::vector<std::string>& docs, size_t keep, bool bigrams,
                     bool idf_desc) {
    if (docs.empty() || keep < 1) throw std::runtime_error("fit_tfidf: empty corpus or keep < 1");
    std::unordered_map<std::string, size_t> df;
    size_t nonempty = 0;
    for (const auto& doc : docs) {
        auto terms = terms_of(tokenize(doc), bigrams);
        if (!terms.empty()) ++nonempty;
        std::sort(terms.begin(), terms.end());
        terms.erase(std::unique(terms.begin(), terms.end()), terms.end());
        for (const auto& t : terms) ++df[t];
    }
    if (nonempty == 0) throw std::runtime_error("fit_tfidf: all documents empty");
    const double N = static_cast<double>(docs.size());
    std::vector<std::pair<std::string, double>> scored;
    scored.reserve(df.size());
    for (const auto& [term, d] : df)
        scored.emplace_back(term, std::log((1.0 + N) / (1.0 + d)) + 1.0);
    std::sort(scored.begin(), scored.end(), [&](const auto& a, const auto& b) {
        if (a.second != b.second) return idf_desc ? a.second > b.second : a.second < b.second;
        return a.first < b.first;
    });
    if (scored.size() > keep) scored.resize(keep);

    TfidfModel model;
    model.use_bigrams = bigrams;
    // column order: lexicographic over the selected terms (stable across runs)
    std::sort(scored.begin(), scored.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    model.idf.reserve(scored.size());
    for (const auto& [term, idf] : scored) {
        model.vocabulary[term] = model.idf.size();
        model.idf.push_back(idf);
    }
    model.selected_dim = model.idf.size();
    return model;
}

std::vector<double> transform_tfidf(const TfidfModel& model, const std::string& doc) {
    std::vector<double> vec(model.selected_dim, 0.0);
    for (const auto& term : terms_of(tokenize(doc), model.use_bigrams)) {
        auto it = model.vocabulary.find(term);
        if (it != model.vocabulary.end()) vec[it->second] += model.idf[it->second];
    }
    double norm2 = 0.0;
    for (double v : vec) norm2 += v * v;
    if (norm2 > 0.0) {
        double inv = 1.0 / std::sqrt(norm2);
        for (double& v : vec) v *= inv;
    }
    return vec;
}

int64_t hl_count_tokens(const std::vector<std::string>& term_tokens,
                        const std::vector<std::string>& doc_tokens) {
    if (term_tokens.empty() || doc_tokens.size() < term_tokens.size()) return 0;
    int64_t count = 0;
    for (size_t i = 0; i + term_tokens.size() <= doc_tokens.size(); ++i) {
        bool match = true;
        for (size_t j = 0; j < term_tokens.size(); ++j)
            if (doc_tokens[i + j] != term_tokens[j]) { match = false; break; }
        if (match) ++count;
    }
    return count;
}

std::vector<int64_t> hl_vector(const corpus::HateLexicon& lexicon,
                               const std::vector<std::string>& docs) {
    std::vector<std::vector<std::string>> term_tokens;
    term_tokens.reserve(lexicon.terms.size());
    for (const auto& t : lexicon.terms) term_tokens.push_back(tokenize(t));
    std::vector<int64_t> counts(lexicon.terms.size(), 0);
    for (const auto& doc : docs) {
        auto doc_tokens = tokenize(doc);
        for (size_t i = 0; i < term_tokens.size(); ++i)
            counts[i] += hl_count_tokens(term_tokens[i], doc_tokens);
    }
    return counts;
}

int64_t hl_count(const corpus::HateLexicon& lexicon, const std::string& doc) {
    auto counts = hl_vector(lexicon, {doc});
    int64_t total = 0;
    for (int64_t c : counts) total += c;
    return total;
}

namespace {

std::vector<double> hashed_token_vector(const std::string& token, uint64_t seed, size_t dim) {
    Rng rng(fnv1a(token) ^ (seed * 0x9e3779b97f4a7c15ULL + 0x1234567890abcdefULL));
    std::vector<double> v(dim);
    double inv = 1.0 / std::sqrt(static_cast<double>(dim));
    for (double& x : v) x = rng.next_normal() * inv;
    return v;
}

}  // namespace

DocEmbeddingModel fit_doc_embedding(const std::vector<std::string>& docs, size_t dim,
                                    uint64_t seed, size_t epochs, const std::string& kind) {
    if (dim < 2) throw std::runtime_error("fit_doc_embedding: dim must be >= 2");
    if (docs.empty()) throw std::runtime_error("fit_doc_embedding: empty corpus");
    if (kind != "hashed" && kind != "trained")
        throw std::runtime_error("fit_doc_embedding: unknown kind '" + kind + "'");

    DocEmbeddingModel model;
    model.dim = dim;
    model.seed = seed;
    model.epochs = epochs;
    model.kind = kind;

    std::vector<std::vector<std::string>> token_docs;
    token_docs.reserve(docs.size());
    uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& d : docs) {
        h = fnv1a(d, h);
        token_docs.push_back(tokenize(d));
    }
    model.corpus_hash = h;

    // document frequency -> idf used by embed()
    std::unordered_map<std::string, size_t> df;
    for (auto toks : token_docs) {
        std::sort(toks.begin(), toks.end());
        toks.erase(std::unique(toks.begin(), toks.end()), toks.end());
        for (const auto& t : toks) ++df[t];
    }
    const double N = static_cast<double>(docs.size());
    for (const auto& [tok, d] : df)
        model.token_idf[tok] = std::log((1.0 + N) / (1.0 + d)) + 1.0;

    if (kind == "hashed") {
        for (const auto& [tok, _] : model.token_idf)
            model.token_vectors[tok] = hashed_token_vector(tok, seed, dim);
        return model;
    }

    // skip-gram with negative sampling, window 2, 2 negatives, fixed doc order
    std::vector<std::string> vocab;
    std::unordered_map<std::string, size_t> index;
    for (const auto& [tok, _] : model.token_idf) {  // std::map: lexicographic order
        index[tok] = vocab.size();
        vocab.push_back(tok);
    }
    const size_t V = vocab.size();
    Rng rng(seed ^ 0x5eedc0de5eedc0deULL);
    std::vector<std::vector<double>> in(V, std::vector<double>(dim));
    std::vector<std::vector<double>> out(V, std::vector<double>(dim, 0.0));
    for (auto& v : in)
        for (double& x : v) x = (rng.next_double() - 0.5) / static_cast<double>(dim);

    const double lr = 0.05;
    const int negatives = 2;
    const int window = 2;
    auto sigmoid = [](double x) { return 1.0 / (1.0 + std::exp(-x)); };
    for (size_t epoch = 0; epoch < epochs; ++epoch) {
        for (const auto& toks : token_docs) {
            for (size_t i = 0; i < toks.size(); ++i) {
                size_t center = index[toks[i]];
                size_t lo = i >= static_cast<size_t>(window) ? i - window : 0;
                size_t hi = std::min(toks.size(), i + window + 1);
                for (size_t j = lo; j < hi; ++j) {
                    if (j == i) continue;
                    size_t ctx = index[toks[j]];
                    // positive pair + sampled negatives
                    for (int s = 0; s <= negatives; ++s) {
                        size_t target = s == 0 ? ctx : rng.next_below(V);
                        double label = s == 0 ? 1.0 : 0.0;
                        double dot = 0.0;
                        for (size_t d2 = 0; d2 < dim; ++d2)
                            dot += in[center][d2] * out[target][d2];
                        double g = lr * (label - sigmoid(dot));
                        for (size_t d2 = 0; d2 < dim; ++d2) {
                            double tmp = in[center][d2];
                            in[center][d2] += g * out[target][d2];
                            out[target][d2] += g * tmp;
                        }
                    }
                }
            }
        }
    }
    for (size_t i = 0; i < V; ++i) model.token_vectors[vocab[i]] = in[i];
    return model;
}

std::vector<double> embed(const DocEmbeddingModel& model, const std::string& doc) {
    std::vector<double> v(model.dim, 0.0);
    double weight_sum = 0.0;
    for (const auto& tok : tokenize(doc)) {
        auto it = model.token_vectors.find(tok);
        if (it == model.token_vectors.end()) continue;
        double w = 1.0;
        auto idf_it = model.token_idf.find(tok);
        if (idf_it != model.token_idf.end()) w = idf_it->second;
        for (size_t d = 0; d < model.dim; ++d) v[d] += w * it->second[d];
        weight_sum += w;
    }
    if (weight_sum > 0.0)
        for (double& x : v) x /= weight_sum;
    return v;
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw std::runtime_error("cosine: length mismatch");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

void save_tfidf(const TfidfModel& model, const std::filesystem::path& path) {
    json obj;
    obj["format"] = "diffusia-text-v1";
    obj["kind"] = "tfidf";
    obj["use_bigrams"] = model.use_bigrams;
    obj["selected_dim"] = model.selected_dim;
    json vocab = json::object();
    for (const auto& [term, idx] : model.vocabulary) vocab[term] = idx;
    obj["vocabulary"] = vocab;
    obj["idf"] = model.idf;
    write_file(path, obj.dump(2) + "\n");
}

TfidfModel load_tfidf(const std::filesystem::path& path) {
    json obj = json::parse(read_file(path));
    if (obj.value("format", "") != "diffusia-text-v1" || obj.value("kind", "") != "tfidf")
        throw std::runtime_error("not a diffusia-text-v1 tfidf container: " + path.string());
    TfidfModel model;
    model.use_bigrams = obj["use_bigrams"].get<bool>();
    model.selected_dim = obj["selected_dim"].get<size_t>();
    for (auto it = obj["vocabulary"].begin(); it != obj["vocabulary"].end(); ++it)
        model.vocabulary[it.key()] = it.value().get<size_t>();
    model.idf = obj["idf"].get<std::vector<double>>();
    return model;
}

void save_embedding(const DocEmbeddingModel& model, const std::filesystem::path& path) {
    json obj;
    obj["format"] = "diffusia-text-v1";
    obj["kind"] = "embedding";
    obj["dim"] = model.dim;
    obj["embedding_kind"] = model.kind;
    obj["corpus_hash"] = model.corpus_hash;
    obj["seed"] = model.seed;
    obj["epochs"] = model.epochs;
    json vecs = json::object();
    for (const auto& [tok, v] : model.token_vectors) vecs[tok] = v;
    obj["token_vectors"] = vecs;
    json idf = json::object();
    for (const auto& [tok, w] : model.token_idf) idf[tok] = w;
    obj["token_idf"] = idf;
    write_file(path, obj.dump() + "\n");
}

DocEmbeddingModel load_embedding(const std::filesystem::path& path) {
    json obj = json::parse(read_file(path));
    if (obj.value("format", "") != "diffusia-text-v1" || obj.value("kind", "") != "embedding")
        throw std::runtime_error("not a diffusia-text-v1 embedding container: " + path.string());
    DocEmbeddingModel model;
    model.dim = obj["dim"].get<size_t>();
    model.kind = obj["embedding_kind"].get<std::string>();
    model.corpus_hash = obj["corpus_hash"].get<uint64_t>();
    model.seed = obj["seed"].get<uint64_t>();
    model.epochs = obj["epochs"].get<size_t>();
    for (auto it = obj["token_vectors"].begin(); it != obj["token_vectors"].end(); ++it)
        model.token_vectors[it.key()] = it.value().get<std::vector<double>>();
    for (auto it = obj["token_idf"].begin(); it != obj["token_idf"].end(); ++it)
        model.token_idf[it.key()] = it.value().get<double>();
    return model;
}

}  // namespace diffusia::text
