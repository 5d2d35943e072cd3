#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "stochavg/expr.hpp"
#include "stochavg/system.hpp"

namespace stochavg {

/// Finite-order scan for integer relations sum_j m_j lambda_j ~ 0.
struct ResonanceReport
{
    bool resonant = false;
    std::optional<std::vector<int>> witness;  // set iff resonant
    double min_abs = 0.0;
    std::vector<int> argmin;  // minimizing m, resonant or not
    int order_bound = 0;
    double tol = 0.0;
};

/*!
 * Exhaustively scan nonzero m with |m|_inf <= order_bound.
 *
 * Ties in |m . Lambda| prefer the smaller |m|_inf, then a positive first
 * nonzero entry, then lexicographic order.
 */
ResonanceReport check_nonresonance(Frequencies const& freqs, int order_bound, double tol);

/// Extreme eigenvalues of Psi(v) Psi(v)^* over sampled states; a diagnostic only.
struct EllipticityReport
{
    double lambda_lower = 0.0;
    double lambda_upper = 0.0;
    bool pass = false;
    int sample_count = 0;
    std::uint64_t seed = 0;
    double max_radius = 10.0;
};

EllipticityReport check_ellipticity(SystemSpec const& spec, int sample_count,
                                    std::uint64_t seed);

/// Sampled estimate of the growth constant (1+R)^-m0 (Lip + sup) on balls B_R.
struct GrowthReport
{
    double c_m0_estimate = 0.0;
    std::vector<double> radii;
    std::vector<double> per_radius;
    int samples_per_radius = 0;
    std::uint64_t seed = 0;
};

/// `n` = 0 infers the variable count from the expression.
GrowthReport estimate_growth(FieldExpr const& expr, double m0, std::vector<double> const& radii,
                             std::uint64_t seed, std::size_t n = 0,
                             int samples_per_radius = 512);

}  // namespace stochavg
