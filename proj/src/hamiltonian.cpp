#include "stochavg/hamiltonian.hpp"

#include <cmath>
#include <random>

namespace stochavg {

HamiltonianSpec::HamiltonianSpec(FieldExpr h, std::size_t n) : h_(std::move(h)), n_(n)
{
    if (h_.arity() > n_)
        throw DimensionMismatch("hamiltonian references a variable beyond n");
    std::mt19937_64 rng(0x5eed'4a11ull);
    std::normal_distribution<double> gauss;
    for (int s = 0; s < 64; ++s)
    {
        ComplexVec v(n_);
        for (auto& z : v)
            z = Complex{gauss(rng), gauss(rng)};
        Complex value = h_.evaluate(v);
        if (std::abs(value.imag()) > 1e-10 * std::max(1.0, std::abs(value)))
            throw InvalidArgument("hamiltonian is not real-valued");
    }
    try
    {
        poly_ = to_polynomial(h_, n_);
    }
    catch (NonPolynomial const&)
    {
        poly_.reset();
    }
}

Poly const& HamiltonianSpec::poly() const
{
    if (!poly_)
        throw NonPolynomial("hamiltonian has no polynomial form");
    return *poly_;
}

ComplexVec wirtinger_dbar(HamiltonianSpec const& h, ComplexVec const& v, WirtingerMethod method)
{
    std::size_t const n = h.n();
    if (v.size() != n)
        throw DimensionMismatch("state dimension differs from hamiltonian");
    ComplexVec out(n);
    if (method.kind == WirtingerMethod::Kind::Symbolic)
    {
        Poly const& p = h.poly();
        for (std::size_t k = 0; k < n; ++k)
            out[k] = p.dbar(k).evaluate(v);
        return out;
    }
    if (!(method.step > 0.0 && method.step <= 1e-3))
        throw InvalidArgument("finite-difference step must lie in (0, 1e-3]");
    double const s = method.step;
    auto value = [&](ComplexVec const& x) { return h.h().evaluate(x).real(); };
    for (std::size_t k = 0; k < n; ++k)
    {
        ComplexVec plus = v, minus = v;
        plus[k] += s;
        minus[k] -= s;
        double dx = (value(plus) - value(minus)) / (2.0 * s);
        plus[k] = v[k] + Complex{0.0, s};
        minus[k] = v[k] - Complex{0.0, s};
        double dy = (value(plus) - value(minus)) / (2.0 * s);
        out[k] = 0.5 * Complex{dx, dy};
    }
    return out;
}

std::vector<Poly> hamiltonian_field_poly(Poly const& h)
{
    std::vector<Poly> out;
    for (std::size_t k = 0; k < h.nvars(); ++k)
        out.push_back(h.dbar(k) * Complex{0.0, 1.0});
    return out;
}

std::vector<FieldExpr> hamiltonian_field(HamiltonianSpec const& h)
{
    std::vector<FieldExpr> out;
    for (Poly const& p : hamiltonian_field_poly(h.poly()))
        out.push_back(to_field_expr(p));
    return out;
}

double averaged_hamiltonian(HamiltonianSpec const& h, ComplexVec const& a, AveragingMethod method)
{
    if (a.size() != h.n())
        throw DimensionMismatch("state dimension differs from hamiltonian");
    return average_function(h.h(), a, method).real();
}

std::vector<double> orthogonality_residual(HamiltonianSpec const& h, ComplexVec const& v)
{
    std::size_t const n = h.n();
    if (v.size() != n)
        throw DimensionMismatch("state dimension differs from hamiltonian");
    Poly avg = average_poly(h.poly());
    std::vector<double> out(n);
    for (std::size_t k = 0; k < n; ++k)
    {
        Complex field = Complex{0.0, 1.0} * avg.dbar(k).evaluate(v);
        out[k] = (field * std::conj(v[k])).real();
    }
    return out;
}

FieldExpr to_field_expr(Poly const& p)
{
    return parse_field_expr(p.to_string(), p.nvars());
}

}  // namespace stochavg
