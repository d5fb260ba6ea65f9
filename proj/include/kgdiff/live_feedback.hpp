#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "kgdiff/proto_graph.hpp"

namespace kgdiff {

struct FeedbackEvent {
    enum class Type { Count, Error };
    Type type = Type::Count;
    std::uint64_t version = 0;
    std::string version_tag;
    std::size_t count = 0;  // Count
    std::string code;       // Error
    std::string message;
};

/// Debounced result counts for a graph that is being edited. Each notify()
/// restarts the debounce window; when it expires the latest graph is counted
/// on a worker thread. A count whose graph was superseded while it ran is
/// discarded. Errors become Error events; they never reach the caller.
class LiveFeedback {
public:
    using CountFn = std::function<std::size_t(const PrototypeGraph&)>;
    using Listener = std::function<void(const FeedbackEvent&)>;

    explicit LiveFeedback(CountFn count, std::chrono::milliseconds debounce = std::chrono::milliseconds(300));
    ~LiveFeedback();
    LiveFeedback(const LiveFeedback&) = delete;
    LiveFeedback& operator=(const LiveFeedback&) = delete;

    void notify(const PrototypeGraph& g);

    std::uint64_t subscribe(Listener l);
    void unsubscribe(std::uint64_t id);

    std::size_t queries_issued() const;
    std::size_t discarded() const;
    std::vector<FeedbackEvent> history() const;
    std::optional<FeedbackEvent> last_event() const;

    /// Blocks until no notification is pending or running (or the timeout passes).
    bool wait_idle(std::chrono::milliseconds timeout);

private:
    void run();
    void emit(const FeedbackEvent& e);

    CountFn count_;
    std::chrono::milliseconds debounce_;
    mutable std::mutex mutex_;
    std::condition_variable cv_;
    std::optional<PrototypeGraph> pending_;
    std::chrono::steady_clock::time_point due_;
    std::uint64_t latest_version_ = 0;
    bool running_query_ = false;
    bool stopping_ = false;
    std::size_t issued_ = 0;
    std::size_t discarded_ = 0;
    std::vector<FeedbackEvent> history_;
    std::map<std::uint64_t, Listener> listeners_;
    std::uint64_t next_listener_ = 0;
    std::thread worker_;
};

}  // namespace kgdiff
