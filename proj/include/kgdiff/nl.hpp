#pragma once

#include <chrono>
#include <deque>
#include <filesystem>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "kgdiff/changeset.hpp"
#include "kgdiff/embedding.hpp"

namespace kgdiff {

struct ChatMessage {
    std::string role;  // "system", "user", "assistant"
    std::string content;
    bool operator==(const ChatMessage&) const = default;
};

/// Structured-output language model: returns a document that should conform
/// to `schema`.
class LanguageModel {
public:
    virtual ~LanguageModel() = default;
    virtual std::string complete(const std::vector<ChatMessage>& messages, const nlohmann::json& schema) = 0;
};

/// Chat-completions-style endpoint (`POST {base_url}/chat/completions`) with
/// a json_schema response format.
class HttpLanguageModel : public LanguageModel {
public:
    HttpLanguageModel(std::string base_url, std::string model, std::string api_key = {},
                      std::chrono::milliseconds timeout = std::chrono::milliseconds(120000));
    std::string complete(const std::vector<ChatMessage>& messages, const nlohmann::json& schema) override;

private:
    std::string base_url_, model_, api_key_;
    std::chrono::milliseconds timeout_;
};

/// Replays canned replies in order and records every prompt it receives.
class ScriptedLanguageModel : public LanguageModel {
public:
    explicit ScriptedLanguageModel(std::vector<std::string> replies = {});
    void push(std::string reply);
    std::string complete(const std::vector<ChatMessage>& messages, const nlohmann::json& schema) override;

    std::vector<std::vector<ChatMessage>> prompts() const;

private:
    mutable std::mutex mutex_;
    std::deque<std::string> replies_;
    std::vector<std::vector<ChatMessage>> prompts_;
};

struct FewShotExample {
    std::string graph;    // graph summary text
    std::string request;
    nlohmann::json changeset;
};

std::vector<FewShotExample> load_few_shot(const std::filesystem::path& file);
/// The exemplar file shipped with the library.
std::filesystem::path default_few_shot_path();

/// Plain-text listing of the graph's nodes, edges and sub-queries with ids.
std::string graph_summary(const PrototypeGraph& g, const Ontology& o);

std::vector<ChatMessage> build_prompt(std::string_view request, const ConstrainedSchema& schema,
                                      const PrototypeGraph& g, const Ontology& o,
                                      const std::vector<FewShotExample>& few_shot);

/// Append-only JSON-lines record of prompts and raw replies.
class AuditLog {
public:
    explicit AuditLog(std::filesystem::path file) : file_(std::move(file)) {}
    void append(const nlohmann::json& record);
    const std::filesystem::path& file() const noexcept { return file_; }

private:
    std::filesystem::path file_;
    std::mutex mutex_;
};

/// Sends the prompt, parses the reply and checks it against the schema.
/// LmError from the model; SchemaViolationError for off-schema replies.
ChangeSet request_changeset(LanguageModel& lm, std::string_view request, const ConstrainedSchema& schema,
                            const PrototypeGraph& g, const Ontology& o, const std::vector<FewShotExample>& few_shot,
                            AuditLog* audit = nullptr);

struct Proposal {
    Candidates candidates;
    ChangeSet raw;
    RepairResult repaired;
    ApplyResult applied;
    std::uint64_t base_version = 0;
};

struct NlContext {
    const EmbeddingIndex* index = nullptr;
    Embedder* embedder = nullptr;
    LanguageModel* lm = nullptr;
    const std::vector<FewShotExample>* few_shot = nullptr;
    AuditLog* audit = nullptr;
    std::size_t k = kDefaultCandidates;
};

/// Retrieve, constrain, generate, repair and apply (to a copy of `g`).
Proposal propose_changeset(const NlContext& ctx, std::string_view request, const PrototypeGraph& g,
                           const Ontology& o);

}  // namespace kgdiff
