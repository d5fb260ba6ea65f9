#include "kgdiff/live_feedback.hpp"

#include "kgdiff/error.hpp"

namespace kgdiff {

LiveFeedback::LiveFeedback(CountFn count, std::chrono::milliseconds debounce)
    : count_(std::move(count)), debounce_(debounce), worker_([this] { run(); }) {}

LiveFeedback::~LiveFeedback() {
    {
        std::lock_guard lock(mutex_);
        stopping_ = true;
    }
    cv_.notify_all();
    worker_.join();
}

void LiveFeedback::notify(const PrototypeGraph& g) {
    {
        std::lock_guard lock(mutex_);
        pending_ = g;
        latest_version_ = g.version();
        due_ = std::chrono::steady_clock::now() + debounce_;
    }
    cv_.notify_all();
}

std::uint64_t LiveFeedback::subscribe(Listener l) {
    std::lock_guard lock(mutex_);
    listeners_[next_listener_] = std::move(l);
    return next_listener_++;
}

void LiveFeedback::unsubscribe(std::uint64_t id) {
    std::lock_guard lock(mutex_);
    listeners_.erase(id);
}

std::size_t LiveFeedback::queries_issued() const {
    std::lock_guard lock(mutex_);
    return issued_;
}

std::size_t LiveFeedback::discarded() const {
    std::lock_guard lock(mutex_);
    return discarded_;
}

std::vector<FeedbackEvent> LiveFeedback::history() const {
    std::lock_guard lock(mutex_);
    return history_;
}

std::optional<FeedbackEvent> LiveFeedback::last_event() const {
    std::lock_guard lock(mutex_);
    if (history_.empty()) return std::nullopt;
    return history_.back();
}

bool LiveFeedback::wait_idle(std::chrono::milliseconds timeout) {
    std::unique_lock lock(mutex_);
    return cv_.wait_for(lock, timeout, [this] { return !pending_ && !running_query_; });
}

void LiveFeedback::emit(const FeedbackEvent& e) {
    // called with mutex_ held
    history_.push_back(e);
    for (const auto& [id, l] : listeners_) l(e);
}

void LiveFeedback::run() {
    std::unique_lock lock(mutex_);
    while (true) {
        cv_.wait(lock, [this] { return stopping_ || pending_.has_value(); });
        if (stopping_) return;
        if (std::chrono::steady_clock::now() < due_) {
            cv_.wait_until(lock, due_, [this] { return stopping_; });
            continue;  // re-check: a newer notify may have moved the deadline
        }
        PrototypeGraph g = std::move(*pending_);
        pending_.reset();
        running_query_ = true;
        ++issued_;
        lock.unlock();

        FeedbackEvent e;
        e.version = g.version();
        e.version_tag = g.version_tag();
        try {
            e.count = count_(g);
        } catch (const Error& err) {
            e.type = FeedbackEvent::Type::Error;
            e.code = err.code();
            e.message = err.what();
        } catch (const std::exception& err) {
            e.type = FeedbackEvent::Type::Error;
            e.code = "InternalError";
            e.message = err.what();
        }

        lock.lock();
        running_query_ = false;
        if (pending_ || latest_version_ != e.version) ++discarded_;
        else emit(e);
        cv_.notify_all();
    }
}

}  // namespace kgdiff
