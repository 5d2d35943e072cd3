#include <cmath>
#include <numbers>

#include "doctest.h"
#include "stochavg/averaging.hpp"
#include "stochavg/hamiltonian.hpp"
#include "support.hpp"

using namespace stochavg;
using stochavg::test::make_spec;
using stochavg::test::max_abs_diff;
using stochavg::test::random_state;

namespace {

AveragingMethod const sym = AveragingMethod::symbolic();

Poly random_poly(RandomStream& rng, std::size_t n, unsigned max_degree, std::size_t terms)
{
    Poly p(n);
    for (std::size_t t = 0; t < terms; ++t)
    {
        Exponents e(2 * n, 0);
        auto const degree = rng.index(max_degree + 1);
        for (std::size_t d = 0; d < degree; ++d)
            ++e[rng.index(2 * n)];
        p.add_term(e, Complex{rng.gaussian(), rng.gaussian()});
    }
    return p;
}

// Brute-force torus average on an m^n rectangle grid, written independently of the library.
Complex torus_mean(FieldExpr const& f, ComplexVec const& a, int m)
{
    std::size_t const n = a.size();
    std::size_t total = 1;
    for (std::size_t k = 0; k < n; ++k)
        total *= static_cast<std::size_t>(m);
    Complex acc = 0.0;
    for (std::size_t idx = 0; idx < total; ++idx)
    {
        ComplexVec v(n);
        std::size_t rest = idx;
        for (std::size_t k = 0; k < n; ++k)
        {
            double const w = 2.0 * std::numbers::pi * static_cast<double>(rest % m) / m;
            v[k] = std::polar(1.0, w) * a[k];
            rest /= m;
        }
        acc += f.evaluate(v);
    }
    return acc / static_cast<double>(total);
}

DispersionExprs dispersion(std::size_t n, std::size_t n1, std::vector<std::string> const& text)
{
    DispersionExprs psi{n, n1, {}};
    for (auto const& t : text)
        psi.entries.push_back(parse_field_expr(t, n));
    return psi;
}

double max_diff(HermitianMatrix const& a, HermitianMatrix const& b)
{
    return (a.matrix() - b.matrix()).cwiseAbs().maxCoeff();
}

}  // namespace

TEST_CASE("rotate examples")
{
    ComplexVec const v{Complex{1, 2}, Complex{-3, 0.5}};
    CHECK(rotate(RotationVector({0.0, 0.0}), v) == v);
    CHECK(std::abs(rotate(RotationVector({std::numbers::pi}), {Complex{1, 0}})[0] - Complex{-1, 0})
          < 1e-15);
    auto const r = rotate(RotationVector({std::numbers::pi / 2, std::numbers::pi}),
                          {Complex{1, 0}, Complex{0, 1}});
    CHECK(std::abs(r[0] - Complex{0, 1}) < 1e-15);
    CHECK(std::abs(r[1] - Complex{0, -1}) < 1e-15);
}

TEST_CASE("average_function examples")
{
    ComplexVec const a{Complex{0.7, -1.2}, Complex{1.0, 0.0}};
    for (auto method : {sym, AveragingMethod::quadrature(32)})
    {
        CHECK(std::abs(average_function(parse_field_expr("abs2(v1)", 2), a, method)
                       - std::norm(a[0]))
              < 1e-12);
        CHECK(std::abs(average_function(parse_field_expr("v1", 2), a, method)) < 1e-12);
    }
    ComplexVec const ones{Complex{1, 0}, Complex{1, 0}};
    FieldExpr const cross = parse_field_expr("v1*cv2", 2);
    CHECK(std::abs(average_function(cross, ones, sym)) == 0.0);
    CHECK(std::abs(torus_mean(cross, ones, 32)) < 1e-12);
}

TEST_CASE("average_field examples")
{
    ComplexVec const a{Complex{0.3, 0.4}, Complex{-1.1, 0.2}};
    auto field = [](std::string const& t) {
        return std::vector<FieldExpr>{parse_field_expr(t, 2), parse_field_expr("0", 2)};
    };
    CHECK(max_abs_diff(average_field(field("v1"), a, sym), {a[0], 0.0}) < 1e-15);
    CHECK(std::abs(average_field(field("v2"), a, sym)[0]) < 1e-15);
    CHECK(std::abs(average_field(field("abs2(v2)*v1"), a, sym)[0] - std::norm(a[1]) * a[0])
          < 1e-14);

    // <<P>>_1 = mean of e^{-i w1} P_1(Phi_w a); brute force on a 32^2 grid.
    FieldExpr const p = parse_field_expr("v1^2*cv2", 2);
    CHECK(std::abs(average_field({p, parse_field_expr("0", 2)}, a, sym)[0]) < 1e-15);
    FieldExpr const twisted = FieldExpr::opaque(
        "rotated", [&](ComplexVec const& v) { return p.evaluate(v) * std::conj(v[0]) / std::conj(a[0]); },
        1);
    CHECK(std::abs(torus_mean(twisted, a, 32)) < 1e-12);
}

TEST_CASE("averaged_diffusion examples")
{
    ComplexVec const a{Complex{0.6, -0.2}, Complex{1.3, 0.9}};
    auto const diag = dispersion(2, 2, {"1", "0", "0", "2"});
    CHECK(max_diff(averaged_diffusion(diag, a, sym), HermitianMatrix::diagonal({1, 4})) < 1e-12);

    auto const id = dispersion(2, 2, {"1", "0", "0", "1"});
    RandomStream rng(3, 0, 0);
    for (int s = 0; s < 8; ++s)
        CHECK(max_diff(averaged_diffusion(id, random_state(rng, 2), sym),
                       HermitianMatrix::identity(2))
              < 1e-14);

    auto const shear = dispersion(2, 2, {"1", "v1", "0", "1"});
    HermitianMatrix const expected = HermitianMatrix::diagonal({1 + std::norm(a[0]), 1});
    HermitianMatrix const quad = averaged_diffusion(shear, a, AveragingMethod::quadrature(16));
    CHECK(max_diff(quad, expected) < 1e-10);
    CHECK(std::abs(quad(0, 1)) < 1e-10);
    CHECK(max_diff(averaged_diffusion(shear, a, sym), expected) < 1e-12);
}

TEST_CASE("principal_sqrt examples")
{
    CHECK(max_diff(principal_sqrt(HermitianMatrix::diagonal({1, 4})).root,
                   HermitianMatrix::diagonal({1, 2}))
          < 1e-14);
    CHECK(max_diff(principal_sqrt(HermitianMatrix::identity(3)).root, HermitianMatrix::identity(3))
          < 1e-14);

    HermitianMatrix::Storage m(2, 2);
    m << 2, 1, 1, 2;
    SqrtResult const b = principal_sqrt(HermitianMatrix(m));
    double const s3 = std::sqrt(3.0);
    HermitianMatrix::Storage e(2, 2);
    e << s3 + 1, s3 - 1, s3 - 1, s3 + 1;
    e *= 0.5;
    CHECK((b.root.matrix() - e).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((b.root.matrix() * b.root.matrix() - m).cwiseAbs().maxCoeff() < 1e-13);
    CHECK(b.root.min_eigenvalue() >= 0.0);
}

TEST_CASE("principal_sqrt recovers a PSD root")
{
    RandomStream rng(4, 0, 0);
    for (int s = 0; s < 50; ++s)
    {
        std::size_t const n = 1 + rng.index(4);
        HermitianMatrix::Storage g(n, n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                g(i, j) = Complex{rng.gaussian(), rng.gaussian()};
        HermitianMatrix::Storage const bm = g * g.adjoint();
        SqrtResult const b = principal_sqrt(HermitianMatrix(bm));
        SqrtResult const again = principal_sqrt(HermitianMatrix(b.root.matrix() * b.root.matrix()));
        CHECK((again.root.matrix() - b.root.matrix()).cwiseAbs().maxCoeff()
              < 1e-8 * std::max(1.0, b.root.max_abs()));
        CHECK((b.root.matrix() * b.root.matrix() - bm).cwiseAbs().maxCoeff()
              < 1e-10 * std::max(1.0, bm.cwiseAbs().maxCoeff()));
    }
    HermitianMatrix::Storage bad(2, 2);
    bad << 1, 0, 0, -1;
    CHECK_THROWS_AS(principal_sqrt(HermitianMatrix(bad)), NotPSD);
}

TEST_CASE("action_drift_F and action_diffusion_SK examples")
{
    auto ou = make_spec("n = 1\nlambdas = 1\nepsilon = 0.1\npsi_kind = constant",
                        "[drift]\np1_1 = -v1\n[dispersion]\npsi_1_1 = 1\n");
    for (double I : {0.0, 0.25, 1.0, 3.0})
    {
        CHECK(action_drift_F(ou, ActionVector({I}), sym)[0] == doctest::Approx(1 - 2 * I));
        CHECK(action_drift_F(ou, ActionVector({I}), AveragingMethod::quadrature(16))[0]
              == doctest::Approx(1 - 2 * I).epsilon(1e-12));
    }

    auto zero = make_spec("n = 2\nlambdas = 1, 1.5\nepsilon = 0.1\npsi_kind = constant", "");
    auto f0 = action_drift_F(zero, ActionVector({0.3, 0.8}), sym);
    CHECK(f0 == std::vector<double>{0.0, 0.0});

    auto hfield = make_spec("n = 2\nlambdas = 1, 1.5\nepsilon = 0.1\npsi_kind = constant",
                            "[drift]\np1_1 = i*v1*abs2(v2)\n");
    for (auto method : {sym, AveragingMethod::quadrature(16)})
        for (double x : action_drift_F(hfield, ActionVector({0.4, 1.7}), method))
            CHECK(std::abs(x) < 1e-12);

    auto diag = make_spec("n = 2\nlambdas = 1, 1.5\nepsilon = 0.1\npsi_kind = constant",
                          "[dispersion]\npsi_1_1 = 1\npsi_2_2 = 2\n");
    ActionDiffusion const sk = action_diffusion_SK(diag, ActionVector({0.5, 2.0}), sym);
    CHECK(max_diff(sk.K, HermitianMatrix::diagonal({1, 4})) < 1e-12);
    ActionDiffusion const zero_sk = action_diffusion_SK(diag, ActionVector({0.0, 0.0}), sym);
    CHECK(zero_sk.S.max_abs() == 0.0);
    CHECK(zero_sk.K.max_abs() == 0.0);

    auto shear = make_spec("n = 2\nlambdas = 1, 1.5\nepsilon = 0.1\npsi_kind = smooth",
                           "[dispersion]\npsi_1_1 = 1\npsi_1_2 = v1\npsi_2_2 = 1\n");
    ActionDiffusion const q = action_diffusion_SK(shear, ActionVector({0.5, 0.5}),
                                                  AveragingMethod::quadrature(32));
    CHECK(q.S.is_real());
    CHECK(q.S.min_eigenvalue() >= -1e-9);
    CHECK((q.K.matrix() * q.K.matrix() - q.S.matrix()).cwiseAbs().maxCoeff() < 1e-10);
    ActionDiffusion const s = action_diffusion_SK(shear, ActionVector({0.5, 0.5}), sym);
    CHECK(max_diff(s.S, q.S) < 1e-10);
}

TEST_CASE("symbolic and quadrature backends agree on polynomials")
{
    RandomStream rng(5, 0, 0);
    for (int trial = 0; trial < 40; ++trial)
    {
        std::size_t const n = 1 + rng.index(3);
        unsigned const degree = 4;
        AveragingMethod const quad = AveragingMethod::quadrature(2 * degree + 2);
        FieldExpr const f = to_field_expr(random_poly(rng, n, degree, 5));
        std::vector<FieldExpr> p;
        for (std::size_t k = 0; k < n; ++k)
            p.push_back(to_field_expr(random_poly(rng, n, degree, 4)));
        DispersionExprs psi{n, 1, {}};
        for (std::size_t k = 0; k < n; ++k)
            psi.entries.push_back(to_field_expr(random_poly(rng, n, 2, 2)));
        for (int s = 0; s < 4; ++s)
        {
            ComplexVec const a = random_state(rng, n);
            CHECK(std::abs(average_function(f, a, sym) - average_function(f, a, quad)) < 1e-10);
            CHECK(max_abs_diff(average_field(p, a, sym), average_field(p, a, quad)) < 1e-10);
            CHECK(max_diff(averaged_diffusion(psi, a, sym), averaged_diffusion(psi, a, quad))
                  < 1e-10);
        }
    }
}

TEST_CASE("averages are rotation invariant and equivariant")
{
    RandomStream rng(6, 0, 0);
    for (int trial = 0; trial < 30; ++trial)
    {
        std::size_t const n = 1 + rng.index(3);
        FieldExpr const f = to_field_expr(random_poly(rng, n, 4, 5));
        std::vector<FieldExpr> p;
        for (std::size_t k = 0; k < n; ++k)
            p.push_back(to_field_expr(random_poly(rng, n, 3, 4)));
        ComplexVec const a = random_state(rng, n);
        std::vector<double> w(n);
        for (auto& x : w)
            x = 2.0 * std::numbers::pi * rng.uniform();
        RotationVector const omega(w);
        ComplexVec const ra = rotate(omega, a);
        for (auto method : {sym, AveragingMethod::quadrature(10)})
        {
            CHECK(std::abs(average_function(f, ra, method) - average_function(f, a, method))
                  < 1e-10);
            CHECK(max_abs_diff(average_field(p, ra, method),
                               rotate(omega, average_field(p, a, method)))
                  < 1e-10);
        }
    }
}

TEST_CASE("averaged diffusion and action diffusion are PSD")
{
    auto shear = make_spec("n = 2\nlambdas = 1, 1.5\nepsilon = 0.1\npsi_kind = smooth",
                           "[dispersion]\npsi_1_1 = 1 + abs2(v2)\npsi_1_2 = v1*cv2\npsi_2_1 = "
                           "cv1\npsi_2_2 = 1\n");
    AveragedSystem const sys(shear, AveragedSystem::Variant::Full, sym);
    RandomStream rng(7, 0, 0);
    for (int s = 0; s < 64; ++s)
    {
        ComplexVec const a = random_state(rng, 2);
        CHECK(sys.diffusion(a).min_eigenvalue() >= -1e-9);
        ActionVector const I = ActionVector::from_state(a);
        CHECK(sys.action_diffusion(I).S.min_eigenvalue() >= -1e-9);
    }
}

TEST_CASE("AveragedSystem matches the pointwise averages")
{
    auto spec = make_spec("n = 2\nlambdas = 1, 1.4142135623730951\nepsilon = 0.1\npsi_kind = "
                          "constant",
                          "[drift]\np1_1 = -v1 + v2*cv2*v1\np1_2 = -v2 + cv1*v2^2\n[hamiltonian]\n"
                          "h = abs2(v1)*abs2(v2)\n[dispersion]\npsi_1_1 = 1\npsi_2_2 = 2\n");
    AveragedSystem const full(spec, AveragedSystem::Variant::Full, sym);
    AveragedSystem const modified(spec, AveragedSystem::Variant::Modified, sym);
    AveragedSystem const full_q(spec, AveragedSystem::Variant::Full, AveragingMethod::quadrature(12));
    std::vector<FieldExpr> total = spec.p1();
    HamiltonianSpec const h(*spec.h(), 2);
    auto const p2 = hamiltonian_field(h);
    for (std::size_t k = 0; k < 2; ++k)
        total[k] = total[k] + p2[k];
    RandomStream rng(8, 0, 0);
    for (int s = 0; s < 16; ++s)
    {
        ComplexVec const a = random_state(rng, 2);
        CHECK(max_abs_diff(full.drift(a), average_field(total, a, sym)) < 1e-12);
        CHECK(max_abs_diff(full.drift(a), full_q.drift(a)) < 1e-10);
        CHECK(max_abs_diff(modified.drift(a), average_field(spec.p1(), a, sym)) < 1e-12);
        CHECK(max_diff(full.dispersion(a).root, HermitianMatrix::diagonal({1, 2})) < 1e-14);
    }
}
