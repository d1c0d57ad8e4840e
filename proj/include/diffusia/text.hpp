#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "diffusia/corpus.hpp"

namespace diffusia::text {

// Expects normalized (lowercase) input. Strips URLs, @-mentions and the '#'
// sigil; splits on word boundaries; hashtag bodies survive as tokens.
std::vector<std::string> tokenize(const std::string& normalized_text);

struct TfidfModel {
    // term -> column index; std::map keeps index order stable (lexicographic)
    std::map<std::string, size_t> vocabulary;
    std::vector<double> idf;  // by column index
    size_t selected_dim = 0;
    bool use_bigrams = true;
};

// idf(t) = ln((1+N)/(1+df(t))) + 1. Vocabulary = `keep` terms ranked by idf
// (descending by default; ties lexicographic ascending).
TfidfModel fit_tfidf(const std::vector<std::string>& docs, size_t keep,
                     bool bigrams = true, bool idf_desc = true);

// tf * idf over vocabulary terms, L2-normalized when nonzero.
std::vector<double> transform_tfidf(const TfidfModel& model, const std::string& doc);

// counts[i] = occurrences of lexicon term i across docs; multi-word terms
// match contiguous token sequences.
std::vector<int64_t> hl_vector(const corpus::HateLexicon& lexicon,
                               const std::vector<std::string>& docs);
int64_t hl_count(const corpus::HateLexicon& lexicon, const std::string& doc);

struct DocEmbeddingModel {
    size_t dim = 0;
    std::map<std::string, std::vector<double>> token_vectors;
    std::map<std::string, double> token_idf;
    uint64_t corpus_hash = 0;
    uint64_t seed = 0;
    size_t epochs = 0;
    std::string kind;  // "trained" | "hashed"
};

// kind "hashed": deterministic random-projection token vectors (no training).
// kind "trained": shallow skip-gram with negative sampling, seeded SGD.
DocEmbeddingModel fit_doc_embedding(const std::vector<std::string>& docs, size_t dim,
                                    uint64_t seed, size_t epochs,
                                    const std::string& kind = "hashed");

// idf-weighted mean of known token vectors; zero vector if none known.
std::vector<double> embed(const DocEmbeddingModel& model, const std::string& doc);

// dot/(|a||b|); 0.0 when either norm is zero. Throws on length mismatch.
double cosine(const std::vector<double>& a, const std::vector<double>& b);

// `diffusia-text-v1` container
void save_tfidf(const TfidfModel& model, const std::filesystem::path& path);
TfidfModel load_tfidf(const std::filesystem::path& path);
void save_embedding(const DocEmbeddingModel& model, const std::filesystem::path& path);
DocEmbeddingModel load_embedding(const std::filesystem::path& path);

}  // namespace diffusia::text
