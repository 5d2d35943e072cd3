#include "stochavg/ensemble.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <ostream>

namespace stochavg {

TimeGrid TimeGrid::make(double T, double dtau, std::vector<double> const& record_times)
{
    if (!(T > 0.0) || !std::isfinite(T))
        throw InvalidArgument("horizon T must be positive");
    if (!(dtau > 0.0) || dtau > T)
        throw InvalidArgument("dtau must lie in (0, T]");
    auto on_grid = [&](double t, char const* what) {
        double x = t / dtau;
        double r = std::round(x);
        if (std::abs(x - r) > 1e-9 * std::max(1.0, x))
            throw InvalidArgument(std::string(what) + " is not a multiple of dtau");
        return static_cast<std::size_t>(r);
    };
    TimeGrid grid;
    grid.dtau = dtau;
    grid.steps = on_grid(T, "horizon T");
    if (record_times.empty())
    {
        grid.recorded.resize(grid.steps + 1);
        for (std::size_t j = 0; j <= grid.steps; ++j)
            grid.recorded[j] = j;
        return grid;
    }
    for (double t : record_times)
    {
        if (t < 0.0 || t > T * (1.0 + 1e-12))
            throw InvalidArgument("record time outside [0, T]");
        grid.recorded.push_back(on_grid(t, "record time"));
    }
    std::sort(grid.recorded.begin(), grid.recorded.end());
    grid.recorded.erase(std::unique(grid.recorded.begin(), grid.recorded.end()),
                        grid.recorded.end());
    return grid;
}

std::vector<double> TimeGrid::times() const
{
    std::vector<double> out;
    for (std::size_t j : recorded)
        out.push_back(time(j));
    return out;
}

template <class T>
std::size_t Ensemble<T>::node_at(double t) const
{
    double x = t / grid_.dtau;
    auto step = static_cast<std::size_t>(std::llround(x));
    if (std::abs(x - static_cast<double>(step)) > 1e-9 * std::max(1.0, x))
        throw InvalidArgument("time " + format_double(t) + " is not on the grid");
    auto it = std::lower_bound(grid_.recorded.begin(), grid_.recorded.end(), step);
    if (it == grid_.recorded.end() || *it != step)
        throw InvalidArgument("time " + format_double(t) + " was not recorded");
    return static_cast<std::size_t>(it - grid_.recorded.begin());
}

template class Ensemble<Complex>;
template class Ensemble<double>;

ActionEnsemble actions_of(StateEnsemble const& states)
{
    EnsembleMeta meta = states.meta();
    ActionEnsemble out(states.n_paths(), states.dim(), states.grid(), meta);
    for (std::size_t p = 0; p < states.n_paths(); ++p)
    {
        for (std::size_t i = 0; i < states.nodes(); ++i)
        {
            for (std::size_t k = 0; k < states.dim(); ++k)
                out.at(p, i, k) = action_of(states.at(p, i, k));
        }
    }
    return out;
}

std::string format_double(double x)
{
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

void write_csv(std::ostream& os, StateEnsemble const& e)
{
    os << "path,time,k,re,im\n";
    for (std::size_t p = 0; p < e.n_paths(); ++p)
    {
        for (std::size_t i = 0; i < e.nodes(); ++i)
        {
            std::string t = format_double(e.time(i));
            for (std::size_t k = 0; k < e.dim(); ++k)
            {
                Complex z = e.at(p, i, k);
                os << p << ',' << t << ',' << k + 1 << ',' << format_double(z.real()) << ','
                   << format_double(z.imag()) << '\n';
            }
        }
    }
}

void write_csv(std::ostream& os, ActionEnsemble const& e)
{
    os << "path,time,k,I\n";
    for (std::size_t p = 0; p < e.n_paths(); ++p)
    {
        for (std::size_t i = 0; i < e.nodes(); ++i)
        {
            std::string t = format_double(e.time(i));
            for (std::size_t k = 0; k < e.dim(); ++k)
                os << p << ',' << t << ',' << k + 1 << ',' << format_double(e.at(p, i, k)) << '\n';
        }
    }
}

}  // namespace stochavg
