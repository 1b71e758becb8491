#include "helmtrace/parallel.hpp"

#include <algorithm>

namespace helmtrace {

WorkerPool::WorkerPool(int threads) {
    const int extra = std::max(threads, 1) - 1;
    workers_.reserve(static_cast<std::size_t>(extra));
    for (int id = 1; id <= extra; ++id) workers_.emplace_back([this, id] { loop(id); });
}

WorkerPool::~WorkerPool() {
    {
        std::lock_guard lock(mutex_);
        stop_ = true;
    }
    start_.notify_all();
    for (auto& t : workers_) t.join();
}

std::pair<std::size_t, std::size_t> WorkerPool::chunk(int id) const {
    const auto parts = static_cast<std::size_t>(size());
    const std::size_t base = count_ / parts, extra = count_ % parts;
    const auto i = static_cast<std::size_t>(id);
    const std::size_t begin = i * base + std::min(i, extra);
    return {begin, begin + base + (i < extra ? 1 : 0)};
}

void WorkerPool::run(std::size_t count, const Task& task) {
    if (workers_.empty()) {
        task(0, count);
        return;
    }
    {
        std::lock_guard lock(mutex_);
        task_ = &task;
        count_ = count;
        pending_ = static_cast<int>(workers_.size());
        error_ = nullptr;
        ++generation_;
    }
    start_.notify_all();
    std::exception_ptr local;
    try {
        const auto [b, e] = chunk(0);
        task(b, e);
    } catch (...) {
        local = std::current_exception();
    }
    std::unique_lock lock(mutex_);
    done_.wait(lock, [this] { return pending_ == 0; });
    task_ = nullptr;
    if (local) std::rethrow_exception(local);
    if (error_) std::rethrow_exception(error_);
}

void WorkerPool::loop(int id) {
    std::uint64_t seen = 0;
    for (;;) {
        const Task* task;
        {
            std::unique_lock lock(mutex_);
            start_.wait(lock, [&] { return stop_ || generation_ != seen; });
            if (stop_) return;
            seen = generation_;
            task = task_;
        }
        std::exception_ptr failure;
        try {
            const auto [b, e] = chunk(id);
            (*task)(b, e);
        } catch (...) {
            failure = std::current_exception();
        }
        {
            std::lock_guard lock(mutex_);
            if (failure && !error_) error_ = failure;
            --pending_;
        }
        done_.notify_one();
    }
}

}  // namespace helmtrace
