#pragma once

#include <atomic>
#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace dml {

/// Worker count resolution: explicit setting, then the DML_WORKERS
/// environment variable, then hardware concurrency.
inline std::size_t resolve_workers(std::size_t configured) {
    if (const char* env = std::getenv("DML_WORKERS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v >= 1) return static_cast<std::size_t>(v);
    }
    if (configured >= 1) return configured;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? hw : 1;
}

/// Runs independent jobs on up to `workers` threads and joins them all.
/// Jobs must only write to their own result slots; the first exception
/// is rethrown after all threads finish.
inline void run_jobs(std::vector<std::function<void()>>& jobs, std::size_t workers) {
    if (jobs.empty()) return;
    const std::size_t thread_count = std::min(workers, jobs.size());
    if (thread_count <= 1) {
        for (auto& job : jobs) job();
        return;
    }
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::thread> threads;
    threads.reserve(thread_count);
    for (std::size_t t = 0; t < thread_count; ++t) {
        threads.emplace_back([&] {
            for (;;) {
                const std::size_t index = next.fetch_add(1);
                if (index >= jobs.size()) return;
                try {
                    jobs[index]();
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!failed.exchange(true)) first_error = std::current_exception();
                }
            }
        });
    }
    for (auto& thread : threads) thread.join();
    if (failed) std::rethrow_exception(first_error);
}

}  // namespace dml
