#include "stochavg/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "stochavg/hermitian.hpp"

namespace stochavg {

namespace {

int inf_norm(std::vector<int> const& m)
{
    int r = 0;
    for (int x : m)
        r = std::max(r, std::abs(x));
    return r;
}

bool first_nonzero_positive(std::vector<int> const& m)
{
    for (int x : m)
    {
        if (x != 0)
            return x > 0;
    }
    return false;
}

// Strict preference between two vectors achieving the same |m . Lambda|.
bool preferred(std::vector<int> const& a, std::vector<int> const& b)
{
    int na = inf_norm(a), nb = inf_norm(b);
    if (na != nb)
        return na < nb;
    bool pa = first_nonzero_positive(a), pb = first_nonzero_positive(b);
    if (pa != pb)
        return pa;
    return a < b;
}

// Uniform point in the ball of radius r in C^n (= R^{2n}).
ComplexVec sample_ball(std::mt19937_64& rng, std::size_t n, double r, bool on_sphere)
{
    std::normal_distribution<double> gauss;
    std::uniform_real_distribution<double> unif;
    ComplexVec v(n);
    double norm2 = 0.0;
    for (auto& z : v)
    {
        z = Complex{gauss(rng), gauss(rng)};
        norm2 += std::norm(z);
    }
    double radius = on_sphere ? r : r * std::pow(unif(rng), 1.0 / (2.0 * n));
    double scale = norm2 > 0 ? radius / std::sqrt(norm2) : 0.0;
    for (auto& z : v)
        z *= scale;
    return v;
}

double distance(ComplexVec const& a, ComplexVec const& b)
{
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k)
        s += std::norm(a[k] - b[k]);
    return std::sqrt(s);
}

}  // namespace

ResonanceReport check_nonresonance(Frequencies const& freqs, int order_bound, double tol)
{
    if (order_bound < 1)
        throw InvalidArgument("order_bound must be >= 1");
    if (!(tol > 0.0))
        throw InvalidArgument("tol must be positive");
    std::size_t const n = freqs.size();
    ResonanceReport report;
    report.order_bound = order_bound;
    report.tol = tol;
    report.min_abs = std::numeric_limits<double>::infinity();

    std::vector<int> m(n, -order_bound);
    std::vector<double> terms(n);
    for (;;)
    {
        bool nonzero = std::any_of(m.begin(), m.end(), [](int x) { return x != 0; });
        if (nonzero)
        {
            // Sorted summation keeps the result invariant under permutations of Lambda.
            for (std::size_t j = 0; j < n; ++j)
                terms[j] = m[j] * freqs[j];
            std::sort(terms.begin(), terms.end());
            double s = 0.0;
            for (double t : terms)
                s += t;
            double value = std::abs(s);
            if (value < report.min_abs
                || (value == report.min_abs && preferred(m, report.argmin)))
            {
                report.min_abs = value;
                report.argmin = m;
            }
        }
        std::size_t j = 0;
        while (j < n && m[j] == order_bound)
            m[j++] = -order_bound;
        if (j == n)
            break;
        ++m[j];
    }
    report.resonant = report.min_abs < tol;
    if (report.resonant)
        report.witness = report.argmin;
    return report;
}

EllipticityReport check_ellipticity(SystemSpec const& spec, int sample_count,
                                    std::uint64_t seed)
{
    if (sample_count < 1)
        throw InvalidArgument("sample_count must be >= 1");
    std::size_t const n = spec.n(), n1 = spec.n1();
    EllipticityReport report;
    report.sample_count = sample_count;
    report.seed = seed;
    report.lambda_lower = std::numeric_limits<double>::infinity();
    report.lambda_upper = -std::numeric_limits<double>::infinity();

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif;
    for (int s = 0; s <= sample_count; ++s)
    {
        ComplexVec v(n);
        if (s > 0)
            v = sample_ball(rng, n, report.max_radius * unif(rng), true);
        ComplexVec psi = spec.dispersion(v);
        Eigen::Map<Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> m(
            psi.data(), n, n1);
        HermitianMatrix g(m * m.adjoint(), 1e-8 * (1.0 + m.cwiseAbs2().sum()));
        auto eig = g.eigenvalues();
        report.lambda_lower = std::min(report.lambda_lower, eig(0));
        report.lambda_upper = std::max(report.lambda_upper, eig(n - 1));
    }
    report.pass = report.lambda_lower > 0.0;
    return report;
}

GrowthReport estimate_growth(FieldExpr const& expr, double m0, std::vector<double> const& radii,
                             std::uint64_t seed, std::size_t n, int samples_per_radius)
{
    if (radii.empty())
        throw InvalidArgument("radii must be nonempty");
    for (double r : radii)
    {
        if (!(r >= 1.0))
            throw InvalidArgument("radii must be >= 1");
    }
    if (n == 0)
        n = std::max<std::size_t>(1, expr.arity());

    GrowthReport report;
    report.radii = radii;
    report.samples_per_radius = samples_per_radius;
    report.seed = seed;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss;

    for (double r : radii)
    {
        std::vector<ComplexVec> pts;
        std::vector<Complex> vals;
        double sup = 0.0;
        for (int s = 0; s < samples_per_radius; ++s)
        {
            pts.push_back(sample_ball(rng, n, r, s % 2 == 0));
            vals.push_back(expr.evaluate(pts.back()));
            sup = std::max(sup, std::abs(vals.back()));
        }
        double lip = 0.0;
        // Random pairs catch global variation, local pairs the derivative scale.
        for (int s = 0; s + 1 < samples_per_radius; s += 2)
        {
            double dist = distance(pts[s], pts[s + 1]);
            if (dist > 0)
                lip = std::max(lip, std::abs(vals[s] - vals[s + 1]) / dist);
        }
        double const h = 1e-4 * r;
        for (int s = 0; s < samples_per_radius; ++s)
        {
            ComplexVec y = pts[s];
            ComplexVec dir(n);
            double norm2 = 0.0;
            for (auto& z : dir)
            {
                z = Complex{gauss(rng), gauss(rng)};
                norm2 += std::norm(z);
            }
            for (std::size_t k = 0; k < n; ++k)
                y[k] += dir[k] * (h / std::sqrt(norm2));
            // Keep the partner inside the ball.
            double ny = std::sqrt(std::accumulate(y.begin(), y.end(), 0.0,
                                                  [](double acc, Complex z) {
                                                      return acc + std::norm(z);
                                                  }));
            if (ny > r)
            {
                for (auto& z : y)
                    z *= r / ny;
            }
            double dist = distance(pts[s], y);
            if (dist > 0)
                lip = std::max(lip, std::abs(vals[s] - expr.evaluate(y)) / dist);
        }
        double value = std::pow(1.0 + r, -m0) * (lip + sup);
        report.per_radius.push_back(value);
        report.c_m0_estimate = std::max(report.c_m0_estimate, value);
    }
    return report;
}

}  // namespace stochavg
