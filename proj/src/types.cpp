#include "stochavg/types.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace stochavg {

Frequencies::Frequencies(std::vector<double> lambdas) : lambdas_(std::move(lambdas))
{
    if (lambdas_.empty())
        throw InvalidArgument("frequency vector must be nonempty");
    for (double l : lambdas_)
    {
        if (!std::isfinite(l) || std::abs(l) <= 1e-12)
            throw InvalidArgument("frequencies must be finite and nonzero");
    }
}

ActionVector::ActionVector(std::vector<double> values) : values_(std::move(values))
{
    for (double x : values_)
    {
        if (!(x >= 0.0) || !std::isfinite(x))
            throw InvalidArgument("actions must be finite and nonnegative");
    }
}

ActionVector ActionVector::from_state(ComplexVec const& a)
{
    std::vector<double> out(a.size());
    std::transform(a.begin(), a.end(), out.begin(), action_of);
    return ActionVector(std::move(out));
}

double ActionVector::min() const
{
    return values_.empty() ? 0.0 : *std::min_element(values_.begin(), values_.end());
}

RotationVector::RotationVector(std::vector<double> omegas) : omegas_(std::move(omegas))
{
    constexpr double two_pi = 2.0 * std::numbers::pi;
    for (double& w : omegas_)
    {
        if (!std::isfinite(w))
            throw InvalidArgument("rotation angles must be finite");
        w = std::fmod(w, two_pi);
        if (w < 0.0)
            w += two_pi;
        if (w >= two_pi)
            w = 0.0;
    }
}

bool all_finite(ComplexVec const& v)
{
    return std::all_of(v.begin(), v.end(), [](Complex z) {
        return std::isfinite(z.real()) && std::isfinite(z.imag());
    });
}

}  // namespace stochavg
