#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kgdiff/ontology.hpp"

namespace kgdiff {

/// Text → fixed-dimension vector provider.
class Embedder {
public:
    virtual ~Embedder() = default;
    virtual std::vector<std::vector<float>> embed(std::span<const std::string> texts) = 0;
    /// Identifies the vector space; part of the index cache key.
    virtual std::string model_id() const = 0;
};

/// Deterministic in-process embedder: hashed bag of lowercase alphanumeric
/// tokens. Texts with the same token multiset map to identical vectors.
class HashingEmbedder : public Embedder {
public:
    explicit HashingEmbedder(std::size_t dimension = 256) : dimension_(dimension) {}
    std::vector<std::vector<float>> embed(std::span<const std::string> texts) override;
    std::string model_id() const override { return "hashing-" + std::to_string(dimension_); }

    std::size_t calls() const noexcept { return calls_.load(); }
    std::size_t texts_embedded() const noexcept { return texts_.load(); }

private:
    std::size_t dimension_;
    std::atomic<std::size_t> calls_{0};
    std::atomic<std::size_t> texts_{0};
};

/// Client for an OpenAI-style `POST {base_url}/embeddings` endpoint.
class HttpEmbedder : public Embedder {
public:
    HttpEmbedder(std::string base_url, std::string model, std::string api_key = {},
                 std::chrono::milliseconds timeout = std::chrono::milliseconds(60000), std::size_t batch = 64);
    std::vector<std::vector<float>> embed(std::span<const std::string> texts) override;
    std::string model_id() const override { return model_; }

private:
    std::string base_url_, model_, api_key_;
    std::chrono::milliseconds timeout_;
    std::size_t batch_;
};

/// Lowercase ASCII alphanumeric runs.
std::vector<std::string> tokenize(std::string_view text);

enum class VocabKind { Class, Link };
std::string_view to_string(VocabKind kind);

struct IndexEntry {
    VocabKind kind = VocabKind::Class;
    std::string id;
    std::string text;
    std::vector<float> vector;  // unit length (or all zero)
};

struct EmbeddingIndex {
    std::string ontology_hash;
    std::string model;
    std::size_t dimension = 0;
    std::vector<IndexEntry> entries;

    void save(const std::filesystem::path& file) const;
    static EmbeddingIndex load(const std::filesystem::path& file);
};

/// "label. comment." (the comment part omitted when empty).
std::string class_text(const ClassDef& c);
/// "label: from-label → to-label. comment."
std::string link_text(const LinkDef& l, const Ontology& o);

/// Cache file for an ontology/model pair inside `data_dir`.
std::filesystem::path index_path(const std::filesystem::path& data_dir, const Ontology& o, const Embedder& e);

/// Loads the cached index for (ontology hash, model) from `data_dir`, or
/// embeds every class (except the synthetic root) and link and persists it.
EmbeddingIndex build_embedding_index(const Ontology& o, Embedder& embedder, const std::filesystem::path& data_dir);

struct Candidate {
    VocabKind kind = VocabKind::Class;
    std::string id;
    double score = 0;
};

struct Candidates {
    std::vector<Candidate> classes;
    std::vector<Candidate> links;
};

inline constexpr std::size_t kDefaultCandidates = 16;

/// Top-k classes and top-k links by cosine similarity to the whole request,
/// ties broken by ascending id.
Candidates retrieve_candidates(const EmbeddingIndex& idx, std::string_view request, Embedder& embedder,
                               std::size_t k = kDefaultCandidates);

double cosine(std::span<const float> a, std::span<const float> b);

}  // namespace kgdiff
