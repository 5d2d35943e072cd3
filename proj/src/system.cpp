#include "stochavg/system.hpp"

#include <cmath>
#include <random>
#include <sstream>

namespace stochavg {

std::string to_string(PsiKind kind)
{
    switch (kind)
    {
        case PsiKind::Constant: return "constant";
        case PsiKind::Elliptic: return "elliptic";
        case PsiKind::Smooth: return "smooth";
    }
    return "smooth";
}

PsiKind psi_kind_from_string(std::string const& text)
{
    if (text == "constant")
        return PsiKind::Constant;
    if (text == "elliptic")
        return PsiKind::Elliptic;
    if (text == "smooth")
        return PsiKind::Smooth;
    throw InvalidArgument("unknown psi_kind '" + text + "' (constant|elliptic|smooth)");
}

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed)
{
    std::uint64_t h = seed;
    for (unsigned char c : bytes)
    {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

struct SystemSpec::Compiled
{
    bool polynomial = false;
    std::vector<Poly> p1_poly;
    std::vector<Poly> p2_poly;
    std::optional<Poly> h_poly;
    std::vector<Poly> psi_poly;
    PolyEvaluator drift_full;
    PolyEvaluator drift_p1;
    PolyEvaluator psi_eval;
    ComplexVec constant_psi;
    std::uint64_t hash = 0;
};

SystemSpec::SystemSpec(std::shared_ptr<Params const> params,
                       std::shared_ptr<Compiled const> compiled)
    : params_(std::move(params)), compiled_(std::move(compiled)), freqs_(params_->lambdas)
{
}

SystemSpec SystemSpec::create(Params params)
{
    Frequencies freqs(params.lambdas);
    std::size_t const n = freqs.size();
    if (!(params.epsilon > 0.0 && params.epsilon <= 1.0))
        throw InvalidArgument("epsilon must lie in (0, 1]");
    if (params.p1.empty())
        params.p1.assign(n, FieldExpr::literal(0.0));
    if (params.p1.size() != n)
        throw DimensionMismatch("drift must have n components");
    if (params.psi.rows != n || params.psi.cols < 1
        || params.psi.entries.size() != params.psi.rows * params.psi.cols)
        throw DimensionMismatch("dispersion must be an n x n1 matrix with n1 >= 1");
    if (params.m0 < 0.0)
        throw InvalidArgument("m0 must be nonnegative");
    if (params.psi_kind == PsiKind::Elliptic && !(params.alpha > 0.0))
        throw InvalidArgument("elliptic dispersion requires alpha > 0");

    auto check_arity = [n](FieldExpr const& e, char const* what) {
        if (e.arity() > n)
            throw DimensionMismatch(std::string(what) + " references a variable beyond n");
    };
    for (auto const& e : params.p1)
        check_arity(e, "drift");
    for (auto const& e : params.psi.entries)
        check_arity(e, "dispersion");
    if (params.h)
        check_arity(*params.h, "hamiltonian");

    if (params.psi_kind == PsiKind::Constant)
    {
        for (auto const& e : params.psi.entries)
        {
            if (!e.is_constant())
                throw InvalidArgument("psi_kind = constant requires literal dispersion entries");
        }
    }

    auto compiled = std::make_shared<Compiled>();
    if (params.h)
    {
        // Real-valuedness is checked on samples, not symbolically.
        std::mt19937_64 rng(0x5eed'4a11ull);
        std::normal_distribution<double> gauss;
        for (int s = 0; s < 64; ++s)
        {
            ComplexVec v(n);
            for (auto& z : v)
                z = Complex{gauss(rng), gauss(rng)};
            Complex value = params.h->evaluate(v);
            if (std::abs(value.imag()) > 1e-10 * std::max(1.0, std::abs(value)))
                throw InvalidArgument("hamiltonian is not real-valued (Im h = "
                                      + std::to_string(value.imag()) + ")");
        }
        try
        {
            compiled->h_poly = to_polynomial(*params.h, n);
        }
        catch (NonPolynomial const&)
        {
            throw NonPolynomial("hamiltonian must be polynomial to build its field");
        }
        for (std::size_t k = 0; k < n; ++k)
            compiled->p2_poly.push_back(compiled->h_poly->dbar(k) * Complex{0.0, 1.0});
    }
    else
    {
        compiled->p2_poly.assign(n, Poly(n));
    }

    try
    {
        for (auto const& e : params.p1)
            compiled->p1_poly.push_back(to_polynomial(e, n));
        for (auto const& e : params.psi.entries)
            compiled->psi_poly.push_back(to_polynomial(e, n));
        compiled->polynomial = true;
    }
    catch (NonPolynomial const&)
    {
        compiled->polynomial = false;
        compiled->p1_poly.clear();
        compiled->psi_poly.clear();
    }
    if (compiled->polynomial)
    {
        std::vector<Poly> full;
        for (std::size_t k = 0; k < n; ++k)
            full.push_back(compiled->p1_poly[k] + compiled->p2_poly[k]);
        compiled->drift_full = PolyEvaluator(full);
        compiled->drift_p1 = PolyEvaluator(compiled->p1_poly);
        compiled->psi_eval = PolyEvaluator(compiled->psi_poly);
    }
    if (params.psi_kind == PsiKind::Constant)
    {
        ComplexVec zero(n);
        for (auto const& e : params.psi.entries)
            compiled->constant_psi.push_back(e.evaluate(zero));
    }

    std::ostringstream fp;
    fp.precision(17);
    for (double l : params.lambdas)
        fp << l << ',';
    fp << '|' << params.epsilon << '|' << params.m0 << '|' << params.alpha << '|'
       << to_string(params.psi_kind) << '|';
    for (auto const& e : params.p1)
        fp << e.to_string() << ';';
    fp << '|' << (params.h ? params.h->to_string() : "") << '|' << params.psi.cols << ':';
    for (auto const& e : params.psi.entries)
        fp << e.to_string() << ';';
    compiled->hash = fnv1a(fp.str());

    return SystemSpec(std::make_shared<Params const>(std::move(params)), std::move(compiled));
}

SystemSpec SystemSpec::with_epsilon(double epsilon) const
{
    Params p = *params_;
    p.epsilon = epsilon;
    return create(std::move(p));
}

bool SystemSpec::is_polynomial() const { return compiled_->polynomial; }

std::uint64_t SystemSpec::hash() const { return compiled_->hash; }

std::vector<Poly> const& SystemSpec::p1_poly() const
{
    if (!compiled_->polynomial)
        throw NonPolynomial("system has non-polynomial drift or dispersion");
    return compiled_->p1_poly;
}

std::vector<Poly> const& SystemSpec::p2_poly() const { return compiled_->p2_poly; }

std::optional<Poly> const& SystemSpec::h_poly() const { return compiled_->h_poly; }

std::vector<Poly> const& SystemSpec::psi_poly() const
{
    if (!compiled_->polynomial)
        throw NonPolynomial("system has non-polynomial drift or dispersion");
    return compiled_->psi_poly;
}

ComplexVec SystemSpec::drift(ComplexVec const& v, bool with_hamiltonian) const
{
    std::size_t const n = this->n();
    ComplexVec out(n);
    if (compiled_->polynomial)
    {
        (with_hamiltonian ? compiled_->drift_full : compiled_->drift_p1).evaluate(v, out.data());
        return out;
    }
    ComplexVec p2(n);
    if (with_hamiltonian && compiled_->h_poly)
        PolyEvaluator(compiled_->p2_poly).evaluate(v, p2.data());
    for (std::size_t k = 0; k < n; ++k)
        out[k] = params_->p1[k].evaluate(v) + p2[k];
    return out;
}

ComplexVec SystemSpec::dispersion(ComplexVec const& v) const
{
    if (!compiled_->constant_psi.empty())
        return compiled_->constant_psi;
    ComplexVec out(params_->psi.entries.size());
    if (compiled_->polynomial)
    {
        compiled_->psi_eval.evaluate(v, out.data());
        return out;
    }
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = params_->psi.entries[i].evaluate(v);
    return out;
}

ComplexVec const& SystemSpec::constant_dispersion() const
{
    if (compiled_->constant_psi.empty())
        throw InvalidArgument("dispersion is not declared constant");
    return compiled_->constant_psi;
}

std::string SystemSpec::describe() const
{
    std::ostringstream os;
    os.precision(17);
    os << "n = " << n() << ", n1 = " << n1() << ", epsilon = " << epsilon() << "\n";
    os << "lambdas =";
    for (double l : params_->lambdas)
        os << ' ' << l;
    os << "\n";
    for (std::size_t k = 0; k < n(); ++k)
        os << "P1_" << k + 1 << " = " << params_->p1[k].to_string() << "\n";
    if (params_->h)
        os << "h = " << params_->h->to_string() << "\n";
    os << "psi_kind = " << to_string(params_->psi_kind) << "\n";
    return os.str();
}

}  // namespace stochavg
