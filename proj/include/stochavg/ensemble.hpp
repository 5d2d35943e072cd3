#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "stochavg/types.hpp"

namespace stochavg {

/// Integration grid: M uniform steps of size dtau, with a subset of nodes recorded.
struct TimeGrid
{
    double dtau = 0.0;
    std::size_t steps = 0;
    std::vector<std::size_t> recorded;  // sorted step indices

    /*!
     * Build from a horizon and a list of times to keep; an empty list keeps
     * every node. Times must sit on the grid (to 1e-9 relative).
     */
    static TimeGrid make(double T, double dtau, std::vector<double> const& record_times = {});

    double time(std::size_t step) const { return static_cast<double>(step) * dtau; }
    std::vector<double> times() const;
};

struct EnsembleMeta
{
    std::uint64_t spec_hash = 0;
    std::string integrator;
    double dtau = 0.0;
    std::uint64_t master_seed = 0;
};

/// Sampled paths on a shared grid: states[path][node][k].
template <class T>
class Ensemble
{
  public:
    Ensemble() = default;
    Ensemble(std::size_t n_paths, std::size_t dim, TimeGrid grid, EnsembleMeta meta)
        : n_paths_(n_paths),
          dim_(dim),
          grid_(std::move(grid)),
          meta_(std::move(meta)),
          data_(n_paths * dim * grid_.recorded.size())
    {
    }

    std::size_t n_paths() const { return n_paths_; }
    std::size_t dim() const { return dim_; }
    std::size_t nodes() const { return grid_.recorded.size(); }
    TimeGrid const& grid() const { return grid_; }
    EnsembleMeta const& meta() const { return meta_; }
    double time(std::size_t node) const { return grid_.time(grid_.recorded[node]); }
    std::vector<double> times() const { return grid_.times(); }

    /// Index of the recorded node at time t; throws if absent.
    std::size_t node_at(double t) const;

    T& at(std::size_t path, std::size_t node, std::size_t k)
    {
        return data_[(path * nodes() + node) * dim_ + k];
    }
    T const& at(std::size_t path, std::size_t node, std::size_t k) const
    {
        return data_[(path * nodes() + node) * dim_ + k];
    }
    T* row(std::size_t path, std::size_t node) { return &at(path, node, 0); }
    T const* row(std::size_t path, std::size_t node) const { return &at(path, node, 0); }

    std::vector<T> const& data() const { return data_; }

  private:
    std::size_t n_paths_ = 0;
    std::size_t dim_ = 0;
    TimeGrid grid_;
    EnsembleMeta meta_;
    std::vector<T> data_;
};

using StateEnsemble = Ensemble<Complex>;
using ActionEnsemble = Ensemble<double>;

ActionEnsemble actions_of(StateEnsemble const& states);

/// Header `path,time,k,re,im`; k is 1-based.
void write_csv(std::ostream& os, StateEnsemble const& ensemble);
/// Header `path,time,k,I`.
void write_csv(std::ostream& os, ActionEnsemble const& ensemble);

/// Shortest text that reads back to the same double.
std::string format_double(double x);

}  // namespace stochavg
