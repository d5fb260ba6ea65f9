#pragma once

#include <atomic>
#include <chrono>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <thread>

#include "kgdiff/results.hpp"
#include "kgdiff/triple_store.hpp"

namespace kgdiff {

inline constexpr std::chrono::milliseconds kDefaultQueryTimeout{30000};

/// SPARQL 1.1 Query Results JSON.
std::string results_to_json(const ResultTable& t);
/// Throws MalformedResultsError on anything that is not a SELECT result.
ResultTable parse_results_json(std::string_view text);

/// Runs a SELECT against an HTTP(S) SPARQL endpoint. No retries.
/// NetworkError, TimeoutError, EndpointError (non-200), MalformedResultsError.
ResultTable execute(const std::string& endpoint_url, const std::string& query,
                    std::chrono::milliseconds timeout = kDefaultQueryTimeout);

/// Runs a COUNT query and returns the single integer it yields.
std::size_t execute_count(const std::string& endpoint_url, const std::string& query,
                          std::chrono::milliseconds timeout = kDefaultQueryTimeout);

/// Loopback SPARQL endpoint over a TripleStore, evaluated by the local
/// engine. Serves GET ?query=, form POST and application/sparql-query POST
/// at /sparql. Faults can be injected for client tests.
class LocalEndpoint {
public:
    struct Faults {
        std::chrono::milliseconds delay{0};
        int status = 0;       // when non-zero, reply with this status and `body`
        std::string body;
        bool malformed = false;  // reply 200 with a non-JSON body
    };

    explicit LocalEndpoint(TripleStore store);
    ~LocalEndpoint();
    LocalEndpoint(const LocalEndpoint&) = delete;
    LocalEndpoint& operator=(const LocalEndpoint&) = delete;

    /// Binds an ephemeral port on 127.0.0.1 and returns the endpoint URL.
    std::string start();
    void stop();

    std::string url() const;
    int port() const noexcept { return port_; }
    void set_faults(Faults f);
    std::size_t request_count() const noexcept { return requests_.load(); }

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    std::thread thread_;
    int port_ = 0;
    std::atomic<std::size_t> requests_{0};
};

}  // namespace kgdiff
