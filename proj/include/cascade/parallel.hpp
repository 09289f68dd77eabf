#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace cascade
{

/// Worker count: CASCADE_TRACER_JOBS if set and positive, else the
/// available hardware parallelism.
inline int default_jobs()
{
    if (const char* env = std::getenv("CASCADE_TRACER_JOBS"))
    {
        try
        {
            const int v = std::stoi(env);
            if (v > 0) return v;
        }
        catch (const std::exception&)
        {
        }
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs body(i) for i in [0, n) on up to `jobs` threads. Indices are handed
/// out dynamically; the first exception is rethrown after all workers stop.
inline void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& body)
{
    if (jobs <= 0) jobs = default_jobs();
    const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(jobs), n);
    if (workers <= 1)
    {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto work = [&] {
        for (;;)
        {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try
            {
                body(i);
            }
            catch (...)
            {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
                next.store(n);
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

} // namespace cascade
