#pragma once

#include <string>

#include "stochavg/config.hpp"
#include "stochavg/random.hpp"

namespace stochavg::test {

/// System from config lines; `body` holds the sections after [system].
inline SystemSpec make_spec(std::string const& system, std::string const& body)
{
    return parse_system_config("format = 1\n[system]\n" + system + "\n" + body).system;
}

inline ComplexVec random_state(RandomStream& rng, std::size_t n, double scale = 1.0)
{
    ComplexVec v(n);
    for (auto& z : v)
        z = Complex{scale * rng.gaussian(), scale * rng.gaussian()};
    return v;
}

inline double max_abs_diff(ComplexVec const& a, ComplexVec const& b)
{
    double m = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k)
        m = std::max(m, std::abs(a[k] - b[k]));
    return m;
}

}  // namespace stochavg::test
