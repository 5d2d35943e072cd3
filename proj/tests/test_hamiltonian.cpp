#include <cmath>

#include "doctest.h"
#include "stochavg/averaging.hpp"
#include "stochavg/hamiltonian.hpp"
#include "support.hpp"

using namespace stochavg;
using stochavg::test::make_spec;
using stochavg::test::max_abs_diff;
using stochavg::test::random_state;

namespace {

Poly random_real_poly(RandomStream& rng, std::size_t n, unsigned max_degree, std::size_t terms)
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
    return p + p.conj();
}

HamiltonianSpec hspec(std::string const& text, std::size_t n)
{
    return HamiltonianSpec(parse_field_expr(text, n), n);
}

}  // namespace

TEST_CASE("wirtinger_dbar examples")
{
    auto quartic = hspec("(v1*cv1)^2", 1);
    CHECK(std::abs(wirtinger_dbar(quartic, {Complex{1, 0}})[0] - Complex{2, 0}) < 1e-14);

    auto product = hspec("abs2(v1)*abs2(v2)", 2);
    ComplexVec const v{Complex{1, 1}, Complex{2, 0}};
    CHECK(std::abs(wirtinger_dbar(product, v)[0] - Complex{4, 4}) < 1e-14);
    CHECK(max_abs_diff(wirtinger_dbar(product, v, WirtingerMethod::finite_diff(1e-5)),
                       wirtinger_dbar(product, v))
          < 1e-6);

    CHECK_THROWS(wirtinger_dbar(product, v, WirtingerMethod::finite_diff(0.0)));
    CHECK_THROWS(wirtinger_dbar(product, v, WirtingerMethod::finite_diff(0.1)));
}

TEST_CASE("symbolic and finite-difference Wirtinger derivatives agree")
{
    RandomStream rng(21, 0, 0);
    for (int trial = 0; trial < 16; ++trial)
    {
        std::size_t const n = 1 + rng.index(3);
        HamiltonianSpec const h(to_field_expr(random_real_poly(rng, n, 4, 4)), n);
        for (int s = 0; s < 32; ++s)
        {
            ComplexVec const v = random_state(rng, n, 0.7);
            auto const exact = wirtinger_dbar(h, v);
            auto const fd = wirtinger_dbar(h, v, WirtingerMethod::finite_diff(1e-5));
            double scale = 1.0;
            for (Complex z : exact)
                scale = std::max(scale, std::abs(z));
            CHECK(max_abs_diff(exact, fd) < 1e-6 * scale);
        }
    }
}

TEST_CASE("hamiltonian_field examples")
{
    ComplexVec const v{Complex{0.3, -0.8}, Complex{1.2, 0.5}};
    auto const field = hamiltonian_field(hspec("abs2(v1)*abs2(v2)", 2));
    Complex const i{0, 1};
    CHECK(std::abs(field[0].evaluate(v) - i * v[0] * std::norm(v[1])) < 1e-14);
    CHECK(std::abs(field[1].evaluate(v) - i * v[1] * std::norm(v[0])) < 1e-14);

    for (auto const& f : hamiltonian_field(hspec("0", 2)))
        CHECK(f.evaluate(v) == Complex{0, 0});

    auto const shift = hamiltonian_field(hspec("abs2(v1)", 1));
    CHECK(std::abs(shift[0].evaluate({v[0]}) - i * v[0]) < 1e-15);
}

TEST_CASE("averaged_hamiltonian examples")
{
    ComplexVec const a{Complex{0.3, -0.8}, Complex{1.2, 0.5}};
    auto const product = hspec("abs2(v1)*abs2(v2)", 2);
    CHECK(averaged_hamiltonian(product, a)
          == doctest::Approx(std::norm(a[0]) * std::norm(a[1])).epsilon(1e-14));

    auto const real_square = hspec("0.5*v1^2 + 0.5*cv1^2", 1);
    CHECK(std::abs(averaged_hamiltonian(real_square, {a[0]})) < 1e-15);

    RandomStream rng(22, 0, 0);
    for (int trial = 0; trial < 16; ++trial)
    {
        std::size_t const n = 1 + rng.index(3);
        HamiltonianSpec const h(to_field_expr(random_real_poly(rng, n, 4, 5)), n);
        ComplexVec const b = random_state(rng, n);
        CHECK(std::abs(averaged_hamiltonian(h, b)
                       - averaged_hamiltonian(h, b, AveragingMethod::quadrature(10)))
              < 1e-10);
    }
}

TEST_CASE("orthogonality_residual examples")
{
    auto const product = hspec("abs2(v1)*abs2(v2)", 2);
    for (double r : orthogonality_residual(product, {Complex{1, 1}, Complex{2, 0}}))
        CHECK(std::abs(r) < 1e-14);
    for (double r : orthogonality_residual(hspec("0", 2), {Complex{1, 1}, Complex{2, 0}}))
        CHECK(r == 0.0);
}

TEST_CASE("orthogonality residual vanishes for real polynomial h")
{
    RandomStream rng(23, 0, 0);
    for (int trial = 0; trial < 64; ++trial)
    {
        std::size_t const n = 1 + rng.index(3);
        HamiltonianSpec const h(to_field_expr(random_real_poly(rng, n, 4, 4)), n);
        for (double r : orthogonality_residual(h, random_state(rng, n)))
            CHECK(std::abs(r) <= 1e-9);
    }
}

TEST_CASE("averaging commutes with the hamiltonian field")
{
    RandomStream rng(24, 0, 0);
    for (int trial = 0; trial < 24; ++trial)
    {
        std::size_t const n = 1 + rng.index(3);
        Poly const hp = random_real_poly(rng, n, 4, 4);
        HamiltonianSpec const h(to_field_expr(hp), n);
        auto const field_of_avg = hamiltonian_field_poly(average_poly(hp));
        auto const field = hamiltonian_field(h);
        for (int s = 0; s < 4; ++s)
        {
            ComplexVec const a = random_state(rng, n);
            ComplexVec const lhs = average_field(field, a, AveragingMethod::quadrature(10));
            ComplexVec rhs(n);
            for (std::size_t k = 0; k < n; ++k)
                rhs[k] = field_of_avg[k].evaluate(a);
            CHECK(max_abs_diff(lhs, rhs) < 1e-9);
        }
    }
}

TEST_CASE("hamiltonian part leaves the action drift unchanged")
{
    RandomStream rng(25, 0, 0);
    for (int trial = 0; trial < 16; ++trial)
    {
        std::size_t const n = 2;
        Poly const hp = random_real_poly(rng, n, 4, 3);
        auto spec = make_spec("n = 2\nlambdas = 1, 1.4142135623730951\nepsilon = 0.1\npsi_kind = "
                              "constant",
                              "[drift]\np1_1 = -v1 + v2*cv2*v1\np1_2 = -2*v2\n[hamiltonian]\nh = "
                                  + hp.to_string() + "\n[dispersion]\npsi_1_1 = 1\npsi_2_2 = 1\n");
        ActionVector const I({2.0 * rng.uniform(), 2.0 * rng.uniform()});
        for (auto method : {AveragingMethod::symbolic(), AveragingMethod::quadrature(12)})
        {
            auto const with = action_drift_F(spec, I, method, true);
            auto const without = action_drift_F(spec, I, method, false);
            for (std::size_t k = 0; k < n; ++k)
                CHECK(std::abs(with[k] - without[k]) <= 1e-9);
        }
    }
}

TEST_CASE("HamiltonianSpec validation")
{
    CHECK_THROWS(hspec("v1", 1));
    CHECK_THROWS(hspec("i*abs2(v1)", 1));
    CHECK_THROWS(hspec("abs2(v2)", 1));
    CHECK_NOTHROW(hspec("v1 + cv1", 1));
    auto opaque = FieldExpr::opaque("norm", [](ComplexVec const& v) { return Complex{std::norm(v[0]), 0}; }, 0);
    HamiltonianSpec const h(opaque, 1);
    CHECK_THROWS_AS(h.poly(), NonPolynomial);
    CHECK(std::abs(wirtinger_dbar(h, {Complex{0.5, 0.5}}, WirtingerMethod::finite_diff())[0]
                   - Complex{0.5, 0.5})
          < 1e-8);
}
