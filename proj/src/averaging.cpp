#include "stochavg/averaging.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace stochavg {

namespace {

using RowMajor = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/*!
 * Mean of `fn` over the torus T^n. `fn(omega, acc)` adds its out_size
 * contributions into acc. Nodes are visited in a fixed odometer order so the
 * sum is reproducible.
 */
template<class Fn>
std::vector<Complex> torus_mean(std::size_t n, AveragingMethod const& method,
                                std::size_t out_size, Fn&& fn)
{
    constexpr double two_pi = 2.0 * std::numbers::pi;
    std::vector<Complex> acc(out_size);
    std::vector<double> omega(n, 0.0);
    double count = 0.0;
    switch (method.kind)
    {
        case AveragingMethod::Kind::Quadrature:
        {
            if (method.grid < 2)
                throw InvalidArgument("quadrature grid_per_dim must be >= 2");
            std::vector<int> idx(n, 0);
            double const h = two_pi / method.grid;
            for (;;)
            {
                for (std::size_t j = 0; j < n; ++j)
                    omega[j] = h * idx[j];
                fn(omega, acc.data());
                count += 1.0;
                std::size_t j = 0;
                while (j < n && idx[j] == method.grid - 1)
                    idx[j++] = 0;
                if (j == n)
                    break;
                ++idx[j];
            }
            break;
        }
        case AveragingMethod::Kind::MonteCarlo:
        {
            if (method.samples < 1)
                throw InvalidArgument("Monte Carlo averaging needs samples >= 1");
            std::mt19937_64 rng(method.seed);
            std::uniform_real_distribution<double> unif(0.0, two_pi);
            for (int s = 0; s < method.samples; ++s)
            {
                for (auto& w : omega)
                    w = unif(rng);
                fn(omega, acc.data());
                count += 1.0;
            }
            break;
        }
        case AveragingMethod::Kind::Symbolic:
            throw InvalidArgument("torus_mean called with the symbolic method");
    }
    for (auto& z : acc)
        z /= count;
    return acc;
}

ComplexVec rotate_back(std::vector<double> const& omega, ComplexVec const& a)
{
    ComplexVec out(a.size());
    for (std::size_t k = 0; k < a.size(); ++k)
        out[k] = std::polar(1.0, -omega[k]) * a[k];
    return out;
}

void require_dim(ComplexVec const& a, std::size_t n)
{
    if (a.size() != n)
        throw DimensionMismatch("state has " + std::to_string(a.size())
                                + " components, expected " + std::to_string(n));
}

// alpha - beta == target (as signed integers)
bool phase_matches(Exponents const& key, std::size_t n, std::vector<int> const& target)
{
    for (std::size_t j = 0; j < n; ++j)
    {
        if (static_cast<int>(key[j]) - static_cast<int>(key[n + j]) != target[j])
            return false;
    }
    return true;
}

HermitianMatrix hermitian_from(ComplexVec const& flat, std::size_t n)
{
    HermitianMatrix::Storage m(n, n);
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t l = 0; l < n; ++l)
            m(k, l) = flat[k * n + l];
    double scale = m.cwiseAbs().maxCoeff();
    return HermitianMatrix(std::move(m), 1e-9 * (1.0 + scale));
}

HermitianMatrix real_symmetric_from(ComplexVec const& flat, std::size_t n)
{
    HermitianMatrix::Storage m(n, n);
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t l = 0; l < n; ++l)
            m(k, l) = flat[k * n + l].real();
    double scale = m.cwiseAbs().maxCoeff();
    return HermitianMatrix(std::move(m), 1e-9 * (1.0 + scale));
}

// Integrand of F_k at state v: v_k . P_k + sum_l |Psi_kl|^2.
void add_action_drift_integrand(ComplexVec const& v, ComplexVec const& drift,
                                ComplexVec const& psi, std::size_t n1, Complex* acc)
{
    for (std::size_t k = 0; k < v.size(); ++k)
    {
        double value = (v[k] * std::conj(drift[k])).real();
        for (std::size_t l = 0; l < n1; ++l)
            value += std::norm(psi[k * n1 + l]);
        acc[k] += value;
    }
}

// Integrand of S_kj at state v: sum_l (v_k conj Psi_kl) . (v_j conj Psi_jl).
void add_action_diffusion_integrand(ComplexVec const& v, ComplexVec const& psi,
                                    std::size_t n1, Complex* acc)
{
    std::size_t const n = v.size();
    for (std::size_t k = 0; k < n; ++k)
    {
        for (std::size_t j = 0; j < n; ++j)
        {
            double value = 0.0;
            for (std::size_t l = 0; l < n1; ++l)
            {
                Complex x = v[k] * std::conj(psi[k * n1 + l]);
                Complex y = v[j] * std::conj(psi[j * n1 + l]);
                value += (x * std::conj(y)).real();
            }
            acc[k * n + j] += value;
        }
    }
}

ActionDiffusion finish_action_diffusion(ComplexVec const& flat, std::size_t n)
{
    HermitianMatrix s = real_symmetric_from(flat, n);
    SqrtResult root = principal_sqrt(s);
    return ActionDiffusion{std::move(s), std::move(root.root), root.clamped};
}

}  // namespace

ComplexVec rotate(RotationVector const& w, ComplexVec const& v)
{
    if (w.size() != v.size())
        throw DimensionMismatch("rotation and state dimensions differ");
    ComplexVec out(v.size());
    for (std::size_t k = 0; k < v.size(); ++k)
        out[k] = std::polar(1.0, w[k]) * v[k];
    return out;
}

ComplexVec amplitudes_from_actions(ActionVector const& actions)
{
    ComplexVec v(actions.size());
    for (std::size_t k = 0; k < v.size(); ++k)
        v[k] = std::sqrt(2.0 * actions[k]);
    return v;
}

//---------------------------------------------------------------------------//

Poly average_poly(Poly const& f)
{
    std::size_t const n = f.nvars();
    return f.filter([n](Exponents const& key) {
        for (std::size_t j = 0; j < n; ++j)
        {
            if (key[j] != key[n + j])
                return false;
        }
        return true;
    });
}

Poly average_field_poly(Poly const& p, std::size_t k)
{
    std::size_t const n = p.nvars();
    std::vector<int> target(n, 0);
    target.at(k) = 1;
    return p.filter([&](Exponents const& key) { return phase_matches(key, n, target); });
}

std::vector<Poly> averaged_diffusion_poly(std::vector<Poly> const& psi, std::size_t n1)
{
    if (n1 == 0 || psi.size() % n1 != 0)
        throw DimensionMismatch("dispersion polys are not an n x n1 matrix");
    std::size_t const n = psi.size() / n1;
    std::vector<Poly> out;
    for (std::size_t k = 0; k < n; ++k)
    {
        for (std::size_t l = 0; l < n; ++l)
        {
            Poly entry(psi.front().nvars());
            for (std::size_t j = 0; j < n1; ++j)
                entry += psi[k * n1 + j] * psi[l * n1 + j].conj();
            // Phase e^{i(w_k - w_l)} survives against alpha - beta = e_k - e_l.
            std::vector<int> target(entry.nvars(), 0);
            target.at(k) += 1;
            target.at(l) -= 1;
            std::size_t const nv = entry.nvars();
            out.push_back(
                entry.filter([&](Exponents const& key) { return phase_matches(key, nv, target); }));
        }
    }
    return out;
}

std::vector<Poly> action_drift_poly(SystemSpec const& spec, bool with_hamiltonian)
{
    std::size_t const n = spec.n(), n1 = spec.n1();
    auto const& p1 = spec.p1_poly();
    auto const& p2 = spec.p2_poly();
    auto const& psi = spec.psi_poly();
    std::vector<Poly> out;
    for (std::size_t k = 0; k < n; ++k)
    {
        Poly pk = with_hamiltonian ? p1[k] + p2[k] : p1[k];
        Poly vk = Poly::var(n, k);
        // v_k . P_k = Re(v_k conj P_k) = (v_k conj P_k + conj v_k P_k) / 2
        Poly integrand = (vk * pk.conj() + vk.conj() * pk) * Complex{0.5, 0.0};
        for (std::size_t l = 0; l < n1; ++l)
            integrand += psi[k * n1 + l] * psi[k * n1 + l].conj();
        out.push_back(average_poly(integrand));
    }
    return out;
}

std::vector<Poly> action_diffusion_poly(SystemSpec const& spec)
{
    std::size_t const n = spec.n(), n1 = spec.n1();
    auto const& psi = spec.psi_poly();
    std::vector<Poly> out;
    for (std::size_t k = 0; k < n; ++k)
    {
        for (std::size_t j = 0; j < n; ++j)
        {
            Poly entry(n);
            for (std::size_t l = 0; l < n1; ++l)
            {
                Poly x = Poly::var(n, k) * psi[k * n1 + l].conj();
                Poly y = Poly::var(n, j) * psi[j * n1 + l].conj();
                // x . y = (x conj y + conj x y) / 2
                entry += (x * y.conj() + x.conj() * y) * Complex{0.5, 0.0};
            }
            out.push_back(average_poly(entry));
        }
    }
    return out;
}

//---------------------------------------------------------------------------//

Complex average_function(FieldExpr const& f, ComplexVec const& a, AveragingMethod method)
{
    std::size_t const n = a.size();
    if (f.arity() > n)
        throw DimensionMismatch("function references a variable beyond the state dimension");
    if (method.kind == AveragingMethod::Kind::Symbolic)
        return average_poly(to_polynomial(f, n)).evaluate(a);
    return torus_mean(n, method, 1, [&](std::vector<double> const& omega, Complex* acc) {
        acc[0] += f.evaluate(rotate_back(omega, a));
    })[0];
}

ComplexVec average_field(std::vector<FieldExpr> const& p, ComplexVec const& a,
                         AveragingMethod method)
{
    std::size_t const n = a.size();
    require_dim(ComplexVec(p.size()), n);
    if (method.kind == AveragingMethod::Kind::Symbolic)
    {
        ComplexVec out(n);
        for (std::size_t k = 0; k < n; ++k)
            out[k] = average_field_poly(to_polynomial(p[k], n), k).evaluate(a);
        return out;
    }
    return torus_mean(n, method, n, [&](std::vector<double> const& omega, Complex* acc) {
        ComplexVec v = rotate_back(omega, a);
        for (std::size_t k = 0; k < n; ++k)
            acc[k] += std::polar(1.0, omega[k]) * p[k].evaluate(v);
    });
}

HermitianMatrix averaged_diffusion(DispersionExprs const& psi, ComplexVec const& a,
                                   AveragingMethod method)
{
    std::size_t const n = a.size(), n1 = psi.cols;
    if (psi.rows != n || psi.entries.size() != n * n1 || n1 == 0)
        throw DimensionMismatch("dispersion must be n x n1 with n matching the state");
    if (method.kind == AveragingMethod::Kind::Symbolic)
    {
        std::vector<Poly> polys;
        for (auto const& e : psi.entries)
            polys.push_back(to_polynomial(e, n));
        auto entries = averaged_diffusion_poly(polys, n1);
        ComplexVec flat(n * n);
        for (std::size_t i = 0; i < flat.size(); ++i)
            flat[i] = entries[i].evaluate(a);
        return hermitian_from(flat, n);
    }
    auto flat = torus_mean(n, method, n * n, [&](std::vector<double> const& omega, Complex* acc) {
        ComplexVec v = rotate_back(omega, a);
        RowMajor m(n, n1);
        for (std::size_t k = 0; k < n; ++k)
        {
            Complex phase = std::polar(1.0, omega[k]);
            for (std::size_t l = 0; l < n1; ++l)
                m(k, l) = phase * psi(k, l).evaluate(v);
        }
        RowMajor g = m * m.adjoint();
        for (std::size_t i = 0; i < n * n; ++i)
            acc[i] += g.data()[i];
    });
    return hermitian_from(flat, n);
}

std::vector<double> action_drift_F(SystemSpec const& spec, ActionVector const& actions,
                                   AveragingMethod method, bool with_hamiltonian)
{
    AveragedSystem avg(spec,
                       with_hamiltonian ? AveragedSystem::Variant::Full
                                        : AveragedSystem::Variant::Modified,
                       method);
    return avg.action_drift(actions);
}

ActionDiffusion action_diffusion_SK(SystemSpec const& spec, ActionVector const& actions,
                                    AveragingMethod method)
{
    AveragedSystem avg(spec, AveragedSystem::Variant::Full, method);
    return avg.action_diffusion(actions);
}

//---------------------------------------------------------------------------//

AveragedSystem::AveragedSystem(SystemSpec spec, Variant variant, AveragingMethod method)
    : spec_(std::move(spec)), variant_(variant), method_(method)
{
    std::size_t const n = spec_.n();
    symbolic_ = method.kind == AveragingMethod::Kind::Symbolic;
    if (symbolic_)
    {
        bool const with_h = variant == Variant::Full;
        std::vector<Poly> drift;
        for (std::size_t k = 0; k < n; ++k)
        {
            Poly pk = spec_.p1_poly()[k];
            if (with_h)
                pk += spec_.p2_poly()[k];
            drift.push_back(average_field_poly(pk, k));
        }
        drift_eval_ = PolyEvaluator(drift);
        diffusion_eval_ = PolyEvaluator(averaged_diffusion_poly(spec_.psi_poly(), spec_.n1()));
        action_drift_eval_ = PolyEvaluator(action_drift_poly(spec_, with_h));
        action_diffusion_eval_ = PolyEvaluator(action_diffusion_poly(spec_));
    }
    else if (method.kind == AveragingMethod::Kind::Quadrature && method.grid < 2)
    {
        throw InvalidArgument("quadrature grid_per_dim must be >= 2");
    }
    if (spec_.psi_kind() == PsiKind::Constant)
    {
        // Closed form: A = diag{b_k^2}, b_k^2 = sum_j |Psi_kj|^2.
        auto const& psi = spec_.constant_dispersion();
        std::vector<double> b2(n, 0.0);
        for (std::size_t k = 0; k < n; ++k)
            for (std::size_t j = 0; j < spec_.n1(); ++j)
                b2[k] += std::norm(psi[k * spec_.n1() + j]);
        constant_b_ = principal_sqrt(HermitianMatrix::diagonal(b2));
    }
}

ComplexVec AveragedSystem::drift(ComplexVec const& a) const
{
    std::size_t const n = spec_.n();
    require_dim(a, n);
    if (symbolic_)
    {
        ComplexVec out(n);
        drift_eval_.evaluate(a, out.data());
        return out;
    }
    bool const with_h = variant_ == Variant::Full;
    return torus_mean(n, method_, n, [&](std::vector<double> const& omega, Complex* acc) {
        ComplexVec p = spec_.drift(rotate_back(omega, a), with_h);
        for (std::size_t k = 0; k < n; ++k)
            acc[k] += std::polar(1.0, omega[k]) * p[k];
    });
}

HermitianMatrix AveragedSystem::diffusion(ComplexVec const& a) const
{
    std::size_t const n = spec_.n(), n1 = spec_.n1();
    require_dim(a, n);
    if (symbolic_)
    {
        ComplexVec flat(n * n);
        diffusion_eval_.evaluate(a, flat.data());
        return hermitian_from(flat, n);
    }
    auto flat = torus_mean(n, method_, n * n, [&](std::vector<double> const& omega, Complex* acc) {
        ComplexVec psi = spec_.dispersion(rotate_back(omega, a));
        RowMajor m(n, n1);
        for (std::size_t k = 0; k < n; ++k)
        {
            Complex phase = std::polar(1.0, omega[k]);
            for (std::size_t l = 0; l < n1; ++l)
                m(k, l) = phase * psi[k * n1 + l];
        }
        RowMajor g = m * m.adjoint();
        for (std::size_t i = 0; i < n * n; ++i)
            acc[i] += g.data()[i];
    });
    return hermitian_from(flat, n);
}

SqrtResult AveragedSystem::dispersion(ComplexVec const& a) const
{
    if (constant_b_)
        return *constant_b_;
    return principal_sqrt(diffusion(a));
}

std::vector<double> AveragedSystem::action_drift(ActionVector const& actions) const
{
    std::size_t const n = spec_.n(), n1 = spec_.n1();
    if (actions.size() != n)
        throw DimensionMismatch("action vector dimension differs from system");
    ComplexVec r = amplitudes_from_actions(actions);
    ComplexVec flat(n);
    if (symbolic_)
    {
        action_drift_eval_.evaluate(r, flat.data());
    }
    else
    {
        bool const with_h = variant_ == Variant::Full;
        flat = torus_mean(n, method_, n, [&](std::vector<double> const& omega, Complex* acc) {
            ComplexVec v = rotate_back(omega, r);
            add_action_drift_integrand(v, spec_.drift(v, with_h), spec_.dispersion(v), n1, acc);
        });
    }
    std::vector<double> out(n);
    for (std::size_t k = 0; k < n; ++k)
        out[k] = flat[k].real();
    return out;
}

ActionDiffusion AveragedSystem::action_diffusion(ActionVector const& actions) const
{
    std::size_t const n = spec_.n(), n1 = spec_.n1();
    if (actions.size() != n)
        throw DimensionMismatch("action vector dimension differs from system");
    ComplexVec r = amplitudes_from_actions(actions);
    ComplexVec flat(n * n);
    if (symbolic_)
    {
        action_diffusion_eval_.evaluate(r, flat.data());
    }
    else
    {
        flat = torus_mean(n, method_, n * n, [&](std::vector<double> const& omega, Complex* acc) {
            ComplexVec v = rotate_back(omega, r);
            add_action_diffusion_integrand(v, spec_.dispersion(v), n1, acc);
        });
    }
    return finish_action_diffusion(flat, n);
}

}  // namespace stochavg
