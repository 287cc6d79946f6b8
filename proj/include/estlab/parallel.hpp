#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace estlab {

/// Worker cap for Monte-Carlo loops. 0 means "use the hardware".
struct Parallelism {
    unsigned threads = 0;

    /// Reads ESTLAB_THREADS; unset or unparsable means auto.
    static Parallelism from_env()
    {
        const char* raw = std::getenv("ESTLAB_THREADS");
        if (raw == nullptr)
            return {};
        try {
            const long v = std::stol(raw);
            return {v > 0 ? static_cast<unsigned>(v) : 0U};
        } catch (const std::exception&) {
            return {};
        }
    }

    unsigned resolved() const noexcept
    {
        if (threads > 0)
            return threads;
        return std::max(1U, std::thread::hardware_concurrency());
    }
};

/// Welford mean/variance with Chan's pairwise merge.
class RunningStats {
public:
    void add(double x) noexcept
    {
        ++count_;
        const double delta = x - mean_;
        mean_ += delta / static_cast<double>(count_);
        m2_ += delta * (x - mean_);
    }

    void merge(const RunningStats& other) noexcept
    {
        if (other.count_ == 0)
            return;
        if (count_ == 0) {
            *this = other;
            return;
        }
        const double n_a = static_cast<double>(count_);
        const double n_b = static_cast<double>(other.count_);
        const double n = n_a + n_b;
        const double delta = other.mean_ - mean_;
        mean_ += delta * n_b / n;
        m2_ += other.m2_ + delta * delta * n_a * n_b / n;
        count_ += other.count_;
    }

    std::uint64_t count() const noexcept { return count_; }
    double mean() const noexcept { return mean_; }
    double variance() const noexcept { return count_ > 1 ? m2_ / static_cast<double>(count_ - 1) : 0.0; }
    double std_error() const noexcept
    {
        return count_ > 1 ? std::sqrt(variance() / static_cast<double>(count_)) : 0.0;
    }

private:
    std::uint64_t count_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

/// Trials per work unit. Fixed so that the reduction tree does not depend on
/// the thread count.
inline constexpr std::uint64_t kChunkTrials = 1U << 13;

/// Splits [0, trials) into fixed chunks, evaluates `chunk_fn(begin, end)` for
/// each on a worker pool and returns the per-chunk results in chunk order.
/// Callers fold the result left to right, which makes the outcome independent
/// of scheduling.
template <class ChunkFn>
auto run_chunks(std::uint64_t trials, ChunkFn&& chunk_fn, Parallelism par)
    -> std::vector<decltype(chunk_fn(std::uint64_t{}, std::uint64_t{}))>
{
    using Result = decltype(chunk_fn(std::uint64_t{}, std::uint64_t{}));
    const std::uint64_t n_chunks = (trials + kChunkTrials - 1) / kChunkTrials;
    std::vector<Result> results(n_chunks);
    if (n_chunks == 0)
        return results;

    auto do_chunk = [&](std::uint64_t c) {
        const std::uint64_t begin = c * kChunkTrials;
        results[c] = chunk_fn(begin, std::min(trials, begin + kChunkTrials));
    };

    const auto workers = static_cast<std::uint64_t>(std::min<std::uint64_t>(par.resolved(), n_chunks));
    if (workers <= 1) {
        for (std::uint64_t c = 0; c < n_chunks; ++c)
            do_chunk(c);
        return results;
    }

    std::atomic<std::uint64_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::uint64_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::uint64_t c = next.fetch_add(1); c < n_chunks; c = next.fetch_add(1)) {
                    try {
                        do_chunk(c);
                    } catch (...) {
                        std::lock_guard lock(failure_mutex);
                        if (!failure)
                            failure = std::current_exception();
                        next.store(n_chunks);
                    }
                }
            });
        }
    }
    if (failure)
        std::rethrow_exception(failure);
    return results;
}

} // namespace estlab
