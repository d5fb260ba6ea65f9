#pragma once

#include <chrono>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "kgdiff/embedding.hpp"
#include "kgdiff/nl.hpp"
#include "kgdiff/overview.hpp"

namespace kgdiff {

struct ServerConfig {
    std::filesystem::path data_dir = "kgdiff-data";
    std::string host = "127.0.0.1";
    int port = 8080;  // 0 picks a free port
    std::string sparql_endpoint;  // default for new sessions
    std::string lm_url, lm_model, lm_api_key;
    std::string embed_url, embed_model, embed_api_key;
    bool mock_models = false;  // hashing embedder, no language model
    std::size_t instance_limit = 1000;
    std::size_t distribution_limit = 100000;
    bool expand_subclasses = false;
    std::chrono::milliseconds debounce{300};
    std::chrono::milliseconds query_timeout{30000};
    std::string cors_origin = "*";
    std::filesystem::path few_shot;  // empty: the shipped exemplars

    /// Applies keys present in `j` (same names as the fields; durations in
    /// `debounce_ms` / `query_timeout_ms`).
    void merge(const nlohmann::json& j);
    /// KGDIFF_CONFIG (JSON file) first, then KGDIFF_* variables.
    void merge_environment();
};

/// The HTTP API. Sessions live in memory and are written through to
/// `data_dir` on every change, so a restart resumes them.
class Server {
public:
    explicit Server(ServerConfig config);
    ~Server();
    Server(const Server&) = delete;
    Server& operator=(const Server&) = delete;

    void set_embedder(std::shared_ptr<Embedder> e);
    void set_language_model(std::shared_ptr<LanguageModel> lm);

    /// Binds the listening socket; returns the port.
    int bind();
    /// Serves until stop(); binds first if needed.
    void listen();
    /// listen() on a background thread.
    void start();
    void stop();

    int port() const;
    std::string base_url() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace kgdiff
