#include <algorithm>
#include <cmath>
#include <numbers>

#include "doctest.h"
#include "stochavg/diagnostics.hpp"
#include "stochavg/poly.hpp"
#include "support.hpp"

using namespace stochavg;
using stochavg::test::make_spec;
using stochavg::test::random_state;

namespace {

// Random expression tree reachable from the grammar.
FieldExpr random_expr(RandomStream& rng, std::size_t n, int depth)
{
    std::size_t const leaf_kinds = 5;
    std::size_t const pick = depth <= 0 ? rng.index(leaf_kinds) : rng.index(leaf_kinds + 5);
    std::size_t const k = rng.index(n);
    switch (pick)
    {
        case 0: return FieldExpr::literal(std::round(rng.gaussian() * 400.0) / 100.0);
        case 1: return FieldExpr::imag_unit();
        case 2: return FieldExpr::var(k);
        case 3: return FieldExpr::conj_var(k);
        case 4: return FieldExpr::abs2(k);
        case 5: return random_expr(rng, n, depth - 1) + random_expr(rng, n, depth - 1);
        case 6: return random_expr(rng, n, depth - 1) - random_expr(rng, n, depth - 1);
        case 7: return random_expr(rng, n, depth - 1) * random_expr(rng, n, depth - 1);
        case 8: return -random_expr(rng, n, depth - 1);
        default: return FieldExpr::pow(random_expr(rng, n, depth - 1), 1 + rng.index(3));
    }
}

bool close_rel(Complex a, Complex b, double tol)
{
    return std::abs(a - b) <= tol * std::max(1.0, std::max(std::abs(a), std::abs(b)));
}

}  // namespace

TEST_CASE("parse_field_expr evaluates simple expressions")
{
    auto e1 = parse_field_expr("i*v1*abs2(v2)", 2);
    CHECK(std::abs(e1.evaluate({Complex{1, 0}, Complex{2, 0}}) - Complex{0, 4}) < 1e-15);

    auto e2 = parse_field_expr("v1 + cv1", 1);
    CHECK(std::abs(e2.evaluate({Complex{3, 4}}) - Complex{6, 0}) < 1e-15);

    CHECK_THROWS_AS(parse_field_expr("v3", 2), ParseError);
    CHECK_THROWS_AS(parse_field_expr("v0", 2), ParseError);
    CHECK_THROWS_AS(parse_field_expr("v1 +", 1), ParseError);
    CHECK_THROWS_AS(parse_field_expr("sin(v1)", 1), ParseError);
}

TEST_CASE("parser round trip preserves values")
{
    RandomStream rng(7, 0, 0);
    for (int trial = 0; trial < 200; ++trial)
    {
        std::size_t const n = 1 + rng.index(3);
        FieldExpr const e = random_expr(rng, n, 3);
        FieldExpr const back = parse_field_expr(e.to_string(), n);
        for (int s = 0; s < 64; ++s)
        {
            ComplexVec const v = random_state(rng, n);
            CHECK(close_rel(e.evaluate(v), back.evaluate(v), 1e-12));
        }
    }
}

TEST_CASE("to_polynomial examples")
{
    Poly const cubic = to_polynomial(parse_field_expr("abs2(v1)*v1", 1), 1);
    REQUIRE(cubic.size() == 1);
    CHECK(cubic.coefficient({2, 1}) == Complex{1, 0});

    CHECK(to_polynomial(parse_field_expr("v1 - v1", 1), 1).is_zero());

    FieldExpr const sq = parse_field_expr("(v1+cv2)^2", 2);
    Poly const p = to_polynomial(sq, 2);
    CHECK(p.size() == 3);
    CHECK(p.coefficient({2, 0, 0, 0}) == Complex{1, 0});
    CHECK(p.coefficient({1, 0, 0, 1}) == Complex{2, 0});
    CHECK(p.coefficient({0, 0, 0, 2}) == Complex{1, 0});
    RandomStream rng(8, 0, 0);
    for (int s = 0; s < 32; ++s)
    {
        ComplexVec const v = random_state(rng, 2);
        Complex const direct = (v[0] + std::conj(v[1])) * (v[0] + std::conj(v[1]));
        CHECK(close_rel(p.evaluate(v), direct, 1e-12));
    }
}

TEST_CASE("to_polynomial agrees with tree evaluation")
{
    RandomStream rng(9, 0, 0);
    for (int trial = 0; trial < 200; ++trial)
    {
        std::size_t const n = 1 + rng.index(3);
        FieldExpr const e = random_expr(rng, n, 3);
        Poly const p = to_polynomial(e, n);
        for (int s = 0; s < 16; ++s)
        {
            ComplexVec const v = random_state(rng, n);
            CHECK(close_rel(e.evaluate(v), p.evaluate(v), 1e-10));
        }
    }
}

TEST_CASE("opaque expressions have no polynomial form")
{
    auto f = FieldExpr::opaque("sinv", [](ComplexVec const& v) { return std::sin(v[0]); }, 0);
    CHECK(std::abs(f.evaluate({Complex{0.5, 0}}) - std::sin(Complex{0.5, 0})) < 1e-15);
    CHECK_THROWS_AS(to_polynomial(f, 1), NonPolynomial);
}

TEST_CASE("check_nonresonance examples")
{
    auto r = check_nonresonance(Frequencies({1.0, 2.0}), 2, 1e-9);
    CHECK(r.resonant);
    REQUIRE(r.witness);
    CHECK(*r.witness == std::vector<int>{2, -1});
    CHECK(r.min_abs == 0.0);

    auto s = check_nonresonance(Frequencies({1.0, std::numbers::sqrt2}), 10, 1e-6);
    CHECK_FALSE(s.resonant);
    CHECK_FALSE(s.witness);
    // Independent scan over the same box.
    double best = 1e300;
    for (int a = -10; a <= 10; ++a)
        for (int b = -10; b <= 10; ++b)
            if (a != 0 || b != 0)
                best = std::min(best, std::abs(a + b * std::numbers::sqrt2));
    CHECK(s.min_abs == doctest::Approx(best).epsilon(1e-12));

    auto t = check_nonresonance(Frequencies({1.0}), 5, 1e-9);
    CHECK_FALSE(t.resonant);
    CHECK(t.min_abs == 1.0);
}

TEST_CASE("check_nonresonance is symmetric under permutations")
{
    std::vector<double> const lambdas = {1.0, 3.0, std::sqrt(5.0)};
    auto const base = check_nonresonance(Frequencies(lambdas), 3, 1e-9);
    std::vector<std::size_t> perm = {0, 1, 2};
    do
    {
        std::vector<double> permuted(3);
        for (std::size_t i = 0; i < 3; ++i)
            permuted[i] = lambdas[perm[i]];
        auto const r = check_nonresonance(Frequencies(permuted), 3, 1e-9);
        CHECK(r.resonant == base.resonant);
        CHECK(r.min_abs == doctest::Approx(base.min_abs).epsilon(1e-12));
        REQUIRE(r.witness);
        double dot = 0.0;
        for (std::size_t i = 0; i < 3; ++i)
            dot += (*r.witness)[i] * permuted[i];
        CHECK(std::abs(dot) <= 1e-9);
    } while (std::next_permutation(perm.begin(), perm.end()));
}

TEST_CASE("check_ellipticity examples")
{
    auto identity = make_spec("n = 2\nlambdas = 1, 1.5\nepsilon = 0.1\npsi_kind = constant",
                              "[dispersion]\npsi_1_1 = 1\npsi_2_2 = 1\n");
    auto r = check_ellipticity(identity, 64, 1);
    CHECK(r.lambda_lower == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.lambda_upper == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.pass);

    auto rank1 = make_spec("n = 2\nlambdas = 1, 1.5\nepsilon = 0.1\npsi_kind = constant",
                           "[dispersion]\npsi_1_1 = 1\n");
    auto s = check_ellipticity(rank1, 64, 1);
    CHECK(std::abs(s.lambda_lower) < 1e-12);
    CHECK_FALSE(s.pass);

    auto shear = make_spec("n = 2\nlambdas = 1, 1.5\nepsilon = 0.1\npsi_kind = smooth",
                           "[dispersion]\npsi_1_1 = 1\npsi_1_2 = v1\npsi_2_2 = 1\n");
    auto t = check_ellipticity(shear, 256, 3);
    // Smallest eigenvalue of [[1 + r^2, v], [conj v, 1]] is decreasing in r.
    double const r2 = t.max_radius * t.max_radius;
    double const floor = 0.5 * ((2.0 + r2) - std::sqrt((2.0 + r2) * (2.0 + r2) - 4.0));
    CHECK(t.lambda_lower > 0.0);
    CHECK(t.lambda_lower >= floor - 1e-12);
}

TEST_CASE("estimate_growth examples")
{
    auto lin = estimate_growth(parse_field_expr("v1", 1), 1.0, {1, 2, 4, 8}, 5);
    CHECK(lin.c_m0_estimate <= 2.0 + 1e-6);
    CHECK(lin.c_m0_estimate > 0.5);

    auto cst = estimate_growth(parse_field_expr("5", 1), 0.0, {1, 2, 4}, 5, 1);
    CHECK(cst.c_m0_estimate == doctest::Approx(5.0).epsilon(1e-9));

    // Lip + sup of |v|^2 v on B_R is 3R^2 + R^3, so the ratio stays below 1.
    auto cubic = estimate_growth(parse_field_expr("abs2(v1)*v1", 1), 3.0, {1, 2, 4, 8, 16}, 5);
    CHECK(std::isfinite(cubic.c_m0_estimate));
    CHECK(cubic.c_m0_estimate <= 1.0 + 1e-6);
    auto cubic_small = estimate_growth(parse_field_expr("abs2(v1)*v1", 1), 3.0, {1, 2, 4}, 5);
    CHECK(cubic.c_m0_estimate <= 2.0 * cubic_small.c_m0_estimate);
}

TEST_CASE("SystemSpec validation")
{
    std::string const sys = "n = 2\nlambdas = 1, 1.5\nepsilon = 0.1\npsi_kind = constant";
    CHECK_THROWS(make_spec(sys, "[hamiltonian]\nh = v1\n"));
    CHECK_NOTHROW(make_spec(sys, "[hamiltonian]\nh = v1 + cv1\n"));
    CHECK_THROWS(make_spec("n = 2\nlambdas = 1\nepsilon = 0.1", ""));
    CHECK_THROWS(make_spec("n = 1\nlambdas = 1\nepsilon = -0.1", ""));
    CHECK_THROWS(make_spec("n = 1\nlambdas = 1\nepsilon = 0.1\npsi_kind = constant",
                           "[dispersion]\npsi_1_1 = v1\n"));
    CHECK_THROWS(parse_system_config("[system]\nn = 1\n"));

    auto spec = make_spec(sys, "[drift]\np1_1 = -v1\n[hamiltonian]\nh = abs2(v1)*abs2(v2)\n");
    RandomStream rng(11, 0, 0);
    for (int s = 0; s < 64; ++s)
    {
        ComplexVec const v = random_state(rng, 2);
        CHECK(std::abs(spec.h()->evaluate(v).imag()) <= 1e-10 * std::max(1.0, std::norm(v[0])));
    }
}

TEST_CASE("config lists")
{
    CHECK(parse_real_list("1, 2.5, -3") == std::vector<double>{1.0, 2.5, -3.0});
    auto z = parse_complex_list("1, 0.5 + 0.5*i");
    REQUIRE(z.size() == 2);
    CHECK(z[1] == Complex{0.5, 0.5});
    CHECK_THROWS(parse_real_list("1, x"));
}
