#include "stochavg/random.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

namespace stochavg {

std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t path, std::uint64_t stream)
{
    std::uint64_t h = splitmix64(master);
    h = splitmix64(h ^ (path * 0xd6e8feb86659fd93ull));
    return splitmix64(h ^ (stream * 0xa0761d6478bd642full + 0x2545f4914f6cdd1dull));
}

NoisePath::NoisePath(std::size_t n1, std::size_t steps, double dtau,
                     std::vector<Complex> increments)
    : n1_(n1), steps_(steps), dtau_(dtau), increments_(std::move(increments))
{
    if (increments_.size() != n1_ * steps_)
        throw DimensionMismatch("noise path holds the wrong number of increments");
}

NoisePath NoisePath::generate(std::size_t n1, std::size_t steps, double dtau,
                              std::uint64_t master, std::uint64_t path, std::uint64_t stream)
{
    if (!(dtau > 0.0))
        throw InvalidArgument("dtau must be positive");
    RandomStream rng(master, path, stream);
    double const sq = std::sqrt(dtau);
    std::vector<Complex> inc(n1 * steps);
    for (auto& z : inc)
        z = rng.complex_increment(sq);
    return NoisePath(n1, steps, dtau, std::move(inc));
}

NoisePath NoisePath::coarsen() const
{
    if (steps_ % 2 != 0)
        throw InvalidArgument("coarsening needs an even number of steps");
    std::vector<Complex> inc(n1_ * (steps_ / 2));
    for (std::size_t j = 0; j < steps_ / 2; ++j)
    {
        for (std::size_t l = 0; l < n1_; ++l)
            inc[j * n1_ + l] = step(2 * j)[l] + step(2 * j + 1)[l];
    }
    return NoisePath(n1_, steps_ / 2, 2.0 * dtau_, std::move(inc));
}

namespace {

std::atomic<int> g_threads{0};

}  // namespace

void set_thread_count(int threads)
{
    if (threads < 0)
        throw InvalidArgument("thread count must be >= 0");
    g_threads = threads;
}

int thread_count()
{
    int t = g_threads;
    if (t == 0)
        t = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    return t;
}

void parallel_for(std::size_t count, std::function<void(std::size_t)> const& body)
{
    std::size_t const workers = std::min<std::size_t>(thread_count(), count);
    if (workers <= 1)
    {
        for (std::size_t i = 0; i < count; ++i)
            body(i);
        return;
    }

    std::atomic<std::size_t> next{0};
    std::mutex mutex;
    std::size_t failed_index = std::numeric_limits<std::size_t>::max();
    std::exception_ptr failure;

    auto worker = [&] {
        for (;;)
        {
            std::size_t i = next.fetch_add(1);
            if (i >= count)
                return;
            try
            {
                body(i);
            }
            catch (...)
            {
                std::lock_guard lock(mutex);
                if (i < failed_index)
                {
                    failed_index = i;
                    failure = std::current_exception();
                }
            }
        }
    };
    std::vector<std::thread> pool;
    for (std::size_t t = 1; t < workers; ++t)
        pool.emplace_back(worker);
    worker();
    for (auto& t : pool)
        t.join();
    if (failure)
        std::rethrow_exception(failure);
}

}  // namespace stochavg
