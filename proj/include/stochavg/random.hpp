#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "stochavg/types.hpp"

namespace stochavg {

std::uint64_t splitmix64(std::uint64_t x);

/// Seed of the stream identified by (master_seed, path_index, stream_id).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t path, std::uint64_t stream);

/// One reproducible stream of Gaussian draws.
class RandomStream
{
  public:
    RandomStream(std::uint64_t master, std::uint64_t path, std::uint64_t stream)
        : engine_(derive_seed(master, path, stream))
    {
    }

    double gaussian() { return normal_(engine_); }
    double uniform() { return std::uniform_real_distribution<double>()(engine_); }
    std::size_t index(std::size_t count)
    {
        return std::uniform_int_distribution<std::size_t>(0, count - 1)(engine_);
    }

    /// Complex Wiener increment: real and imaginary parts each N(0, dtau).
    Complex complex_increment(double sqrt_dtau)
    {
        double re = gaussian();
        double im = gaussian();
        return Complex{re * sqrt_dtau, im * sqrt_dtau};
    }

    std::mt19937_64& engine() { return engine_; }

  private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_;
};

/// Complex increments of an n1-dimensional Wiener path on a uniform grid.
class NoisePath
{
  public:
    NoisePath(std::size_t n1, std::size_t steps, double dtau, std::vector<Complex> increments);

    static NoisePath generate(std::size_t n1, std::size_t steps, double dtau,
                              std::uint64_t master, std::uint64_t path, std::uint64_t stream);

    std::size_t n1() const { return n1_; }
    std::size_t steps() const { return steps_; }
    double dtau() const { return dtau_; }
    Complex const* step(std::size_t j) const { return increments_.data() + j * n1_; }

    /// Same Brownian path on the grid of step 2 dtau (pairwise sums).
    NoisePath coarsen() const;

  private:
    std::size_t n1_;
    std::size_t steps_;
    double dtau_;
    std::vector<Complex> increments_;
};

//---------------------------------------------------------------------------//
// Deterministic parallel loops
//---------------------------------------------------------------------------//

/// 0 selects the hardware concurrency.
void set_thread_count(int threads);
int thread_count();

/*!
 * Run body(i) for i in [0, count).
 *
 * Every index writes its own output slot, so results do not depend on the
 * thread count. If bodies throw, the exception of the smallest failing index
 * is rethrown.
 */
void parallel_for(std::size_t count, std::function<void(std::size_t)> const& body);

}  // namespace stochavg
