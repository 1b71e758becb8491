#ifndef HELMTRACE_PARALLEL_HPP
#define HELMTRACE_PARALLEL_HPP

#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace helmtrace {

/// Fixed set of workers that split an index range into contiguous chunks.
/// Chunk i always goes to worker i, so any per-chunk work is reproducible;
/// reductions are left to the caller, who should combine in index order.
class WorkerPool {
public:
    using Task = std::function<void(std::size_t begin, std::size_t end)>;

    explicit WorkerPool(int threads = 1);
    ~WorkerPool();
    WorkerPool(const WorkerPool&) = delete;
    WorkerPool& operator=(const WorkerPool&) = delete;

    int size() const { return static_cast<int>(workers_.size()) + 1; }

    /// Runs task over [0, count) and returns when every chunk is done.
    /// The first exception thrown by any chunk is rethrown here.
    void run(std::size_t count, const Task& task);

private:
    void loop(int id);
    std::pair<std::size_t, std::size_t> chunk(int id) const;

    std::vector<std::thread> workers_;
    std::mutex mutex_;
    std::condition_variable start_, done_;
    const Task* task_ = nullptr;
    std::size_t count_ = 0;
    std::uint64_t generation_ = 0;
    int pending_ = 0;
    bool stop_ = false;
    std::exception_ptr error_;
};

}  // namespace helmtrace

#endif  // HELMTRACE_PARALLEL_HPP
