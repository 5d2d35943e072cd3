#include "stochavg/poly.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

namespace stochavg {

namespace {

std::string fmt_real(double x)
{
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

// Coefficient text and whether it should be subtracted; empty text means 1.
std::pair<std::string, bool> fmt_coeff(Complex c)
{
    if (c.imag() == 0.0)
    {
        double a = std::abs(c.real());
        return {a == 1.0 ? "" : fmt_real(a), c.real() < 0};
    }
    if (c.real() == 0.0)
    {
        double b = std::abs(c.imag());
        return {b == 1.0 ? "i" : fmt_real(b) + "*i", c.imag() < 0};
    }
    std::string re = c.real() < 0 ? "-" + fmt_real(-c.real()) : fmt_real(c.real());
    std::string im = fmt_real(std::abs(c.imag())) + "*i";
    return {"(" + re + (c.imag() < 0 ? " - " : " + ") + im + ")", false};
}

std::string fmt_power(std::string const& base, unsigned e)
{
    return e == 1 ? base : base + "^" + std::to_string(e);
}

}  // namespace

Poly Poly::constant(std::size_t n, Complex c)
{
    Poly p(n);
    p.add_term(Exponents(2 * n, 0), c);
    return p;
}

Poly Poly::var(std::size_t n, std::size_t k)
{
    Poly p(n);
    Exponents e(2 * n, 0);
    e.at(k) = 1;
    p.add_term(e, 1.0);
    return p;
}

Poly Poly::conj_var(std::size_t n, std::size_t k)
{
    Poly p(n);
    Exponents e(2 * n, 0);
    e.at(n + k) = 1;
    p.add_term(e, 1.0);
    return p;
}

unsigned Poly::degree() const
{
    unsigned deg = 0;
    for (auto const& [key, c] : terms_)
        deg = std::max(deg, std::accumulate(key.begin(), key.end(), 0u));
    return deg;
}

Complex Poly::coefficient(Exponents const& key) const
{
    auto it = terms_.find(key);
    return it == terms_.end() ? Complex{} : it->second;
}

void Poly::add_term(Exponents const& key, Complex c)
{
    if (key.size() != 2 * n_)
        throw DimensionMismatch("monomial exponent length does not match 2n");
    if (c == Complex{})
        return;
    auto [it, inserted] = terms_.emplace(key, c);
    if (!inserted)
    {
        it->second += c;
        if (it->second == Complex{})
            terms_.erase(it);
    }
}

Poly& Poly::operator+=(Poly const& other)
{
    if (other.n_ != n_)
        throw DimensionMismatch("polynomials over different variable counts");
    for (auto const& [key, c] : other.terms_)
        add_term(key, c);
    return *this;
}

Poly& Poly::operator-=(Poly const& other)
{
    if (other.n_ != n_)
        throw DimensionMismatch("polynomials over different variable counts");
    for (auto const& [key, c] : other.terms_)
        add_term(key, -c);
    return *this;
}

Poly& Poly::operator*=(Complex c)
{
    if (c == Complex{})
    {
        terms_.clear();
        return *this;
    }
    for (auto it = terms_.begin(); it != terms_.end();)
    {
        it->second *= c;
        it = (it->second == Complex{}) ? terms_.erase(it) : std::next(it);
    }
    return *this;
}

Poly operator*(Poly const& a, Poly const& b)
{
    if (a.n_ != b.n_)
        throw DimensionMismatch("polynomials over different variable counts");
    Poly result(a.n_);
    Exponents key(2 * a.n_);
    for (auto const& [ka, ca] : a.terms_)
    {
        for (auto const& [kb, cb] : b.terms_)
        {
            for (std::size_t j = 0; j < key.size(); ++j)
                key[j] = static_cast<std::uint16_t>(ka[j] + kb[j]);
            result.add_term(key, ca * cb);
        }
    }
    return result;
}

Poly Poly::pow(unsigned e) const
{
    Poly result = constant(n_, 1.0);
    Poly base = *this;
    while (e)
    {
        if (e & 1u)
            result = result * base;
        e >>= 1;
        if (e)
            base = base * base;
    }
    return result;
}

Poly Poly::conj() const
{
    Poly result(n_);
    Exponents key(2 * n_);
    for (auto const& [k, c] : terms_)
    {
        std::copy(k.begin() + n_, k.end(), key.begin());
        std::copy(k.begin(), k.begin() + n_, key.begin() + n_);
        result.add_term(key, std::conj(c));
    }
    return result;
}

Poly Poly::dbar(std::size_t k) const
{
    if (k >= n_)
        throw DimensionMismatch("derivative index out of range");
    Poly result(n_);
    for (auto const& [key, c] : terms_)
    {
        std::uint16_t b = key[n_ + k];
        if (b == 0)
            continue;
        Exponents lowered = key;
        lowered[n_ + k] = b - 1;
        result.add_term(lowered, c * static_cast<double>(b));
    }
    return result;
}

Poly Poly::d(std::size_t k) const
{
    if (k >= n_)
        throw DimensionMismatch("derivative index out of range");
    Poly result(n_);
    for (auto const& [key, c] : terms_)
    {
        std::uint16_t a = key[k];
        if (a == 0)
            continue;
        Exponents lowered = key;
        lowered[k] = a - 1;
        result.add_term(lowered, c * static_cast<double>(a));
    }
    return result;
}

Poly Poly::filter(std::function<bool(Exponents const&)> const& keep) const
{
    Poly result(n_);
    for (auto const& [key, c] : terms_)
    {
        if (keep(key))
            result.terms_.emplace(key, c);
    }
    return result;
}

Complex Poly::evaluate(ComplexVec const& v) const
{
    if (v.size() < n_)
        throw DimensionMismatch("state shorter than polynomial variable count");
    Complex total{};
    for (auto const& [key, c] : terms_)
    {
        Complex term = c;
        for (std::size_t j = 0; j < n_; ++j)
        {
            for (unsigned a = 0; a < key[j]; ++a)
                term *= v[j];
            for (unsigned b = 0; b < key[n_ + j]; ++b)
                term *= std::conj(v[j]);
        }
        total += term;
    }
    return total;
}

std::string Poly::to_string() const
{
    if (terms_.empty())
        return "0";
    std::string out;
    for (auto const& [key, c] : terms_)
    {
        std::vector<std::string> factors;
        for (std::size_t j = 0; j < n_; ++j)
        {
            unsigned a = key[j], b = key[n_ + j];
            unsigned m = std::min(a, b);
            std::string idx = std::to_string(j + 1);
            if (m)
                factors.push_back(fmt_power("abs2(v" + idx + ")", m));
            if (a > m)
                factors.push_back(fmt_power("v" + idx, a - m));
            if (b > m)
                factors.push_back(fmt_power("cv" + idx, b - m));
        }
        auto [ctext, negative] = fmt_coeff(c);
        std::string body = ctext;
        for (auto const& f : factors)
            body += (body.empty() ? "" : "*") + f;
        if (body.empty())
            body = "1";
        if (out.empty())
            out = negative ? "-" + body : body;
        else
            out += (negative ? " - " : " + ") + body;
    }
    return out;
}

//---------------------------------------------------------------------------//

Poly to_polynomial(FieldExpr const& expr, std::size_t n)
{
    using Kind = FieldExpr::Kind;
    if (expr.arity() > n)
        throw DimensionMismatch("expression references a variable beyond n");
    switch (expr.kind())
    {
        case Kind::Literal: return Poly::constant(n, expr.literal_value());
        case Kind::ImagUnit: return Poly::constant(n, Complex{0.0, 1.0});
        case Kind::Var: return Poly::var(n, expr.index());
        case Kind::ConjVar: return Poly::conj_var(n, expr.index());
        case Kind::Abs2:
            return Poly::var(n, expr.index()) * Poly::conj_var(n, expr.index());
        case Kind::Add: return to_polynomial(expr.lhs(), n) + to_polynomial(expr.rhs(), n);
        case Kind::Sub: return to_polynomial(expr.lhs(), n) - to_polynomial(expr.rhs(), n);
        case Kind::Mul: return to_polynomial(expr.lhs(), n) * to_polynomial(expr.rhs(), n);
        case Kind::Neg: return -to_polynomial(expr.lhs(), n);
        case Kind::Pow: return to_polynomial(expr.lhs(), n).pow(expr.exponent());
        case Kind::Opaque:
            throw NonPolynomial("expression '" + expr.opaque_name()
                                + "' has no polynomial form");
    }
    throw NonPolynomial("unsupported expression node");
}

//---------------------------------------------------------------------------//

PolyEvaluator::PolyEvaluator(std::vector<Poly> const& polys)
{
    n_ = polys.empty() ? 0 : polys.front().nvars();
    offsets_.push_back(0);
    for (Poly const& p : polys)
    {
        if (p.nvars() != n_)
            throw DimensionMismatch("polynomials over different variable counts");
        for (auto const& [key, c] : p.terms())
        {
            coeffs_.push_back(c);
            exps_.insert(exps_.end(), key.begin(), key.end());
            for (auto e : key)
                max_exp_ = std::max<unsigned>(max_exp_, e);
        }
        offsets_.push_back(coeffs_.size());
    }
}

void PolyEvaluator::evaluate(ComplexVec const& v, Complex* out) const
{
    if (v.size() < n_)
        throw DimensionMismatch("state shorter than polynomial variable count");
    std::size_t const stride = max_exp_ + 1;
    // powers[(j * 2 + conj) * stride + e]
    Complex stack_table[64];
    std::vector<Complex> heap_table;
    Complex* table = stack_table;
    if (2 * n_ * stride > 64)
    {
        heap_table.resize(2 * n_ * stride);
        table = heap_table.data();
    }
    for (std::size_t j = 0; j < n_; ++j)
    {
        Complex* p = table + 2 * j * stride;
        Complex* q = p + stride;
        p[0] = q[0] = 1.0;
        for (std::size_t e = 1; e < stride; ++e)
        {
            p[e] = p[e - 1] * v[j];
            q[e] = q[e - 1] * std::conj(v[j]);
        }
    }
    for (std::size_t o = 0; o + 1 < offsets_.size(); ++o)
    {
        Complex total{};
        for (std::size_t t = offsets_[o]; t < offsets_[o + 1]; ++t)
        {
            Complex term = coeffs_[t];
            std::uint16_t const* e = exps_.data() + t * 2 * n_;
            for (std::size_t j = 0; j < n_; ++j)
            {
                if (e[j])
                    term *= table[2 * j * stride + e[j]];
                if (e[n_ + j])
                    term *= table[(2 * j + 1) * stride + e[n_ + j]];
            }
            total += term;
        }
        out[o] = total;
    }
}

Complex PolyEvaluator::operator()(ComplexVec const& v) const
{
    if (outputs() != 1)
        throw DimensionMismatch("operator() requires a single-output evaluator");
    Complex out;
    evaluate(v, &out);
    return out;
}

}  // namespace stochavg
