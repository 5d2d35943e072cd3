#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "stochavg/stats.hpp"
#include "support.hpp"

using namespace stochavg;
using stochavg::test::make_spec;

namespace {

EmpiricalLaw law1d(std::vector<double> xs)
{
    return EmpiricalLaw(std::move(xs), 1);
}

std::vector<double> gaussian(RandomStream& rng, std::size_t count, double shift = 0.0)
{
    std::vector<double> out(count);
    for (auto& x : out)
        x = rng.gaussian() + shift;
    return out;
}

/*!
 * Brute-force BL distance for small samples: f restricted to a fine level
 * grid, maximized by a sliding-window DP along the sorted support, then a grid
 * search over the sup bound s (Lip = 1 - s).
 */
double dense_dp_oracle(std::vector<double> const& x1, std::vector<double> const& x2)
{
    std::vector<std::pair<double, double>> pts;
    for (double x : x1)
        pts.push_back({x, 1.0 / static_cast<double>(x1.size())});
    for (double x : x2)
        pts.push_back({x, -1.0 / static_cast<double>(x2.size())});
    std::sort(pts.begin(), pts.end());
    int const levels = 4000;
    double best = 0.0;
    for (int si = 0; si <= 400; ++si)
    {
        double const s = si / 400.0;
        double const lip = 1.0 - s;
        double const h = 2.0 * s / levels;
        std::vector<double> dp(levels + 1, 0.0), next(levels + 1);
        for (std::size_t i = 0; i < pts.size(); ++i)
        {
            if (i > 0)
            {
                double const gap = pts[i].first - pts[i - 1].first;
                int const reach = h > 0 ? static_cast<int>(std::floor(lip * gap / h + 1e-12)) : levels;
                std::deque<int> window;
                int hi = -1;
                for (int l = 0; l <= levels; ++l)
                {
                    while (hi < std::min(levels, l + reach))
                    {
                        ++hi;
                        while (!window.empty() && dp[window.back()] <= dp[hi])
                            window.pop_back();
                        window.push_back(hi);
                    }
                    while (window.front() < l - reach)
                        window.pop_front();
                    next[l] = dp[window.front()];
                }
                dp.swap(next);
            }
            for (int l = 0; l <= levels; ++l)
                dp[l] += pts[i].second * (-s + l * h);
        }
        best = std::max(best, *std::max_element(dp.begin(), dp.end()));
    }
    return best;
}

}  // namespace

TEST_CASE("exact 1-D distance: point masses")
{
    CHECK(bl_exact_1d(std::vector<double>{0.3, 1.0}, std::vector<double>{1.0, 0.3}) == 0.0);
    CHECK(bl_exact_1d(std::vector<double>{0.0, 0.0}, std::vector<double>{2.0, 2.0})
          == doctest::Approx(1.0).epsilon(1e-10));
    for (double x : {0.1, 0.5, 2.0, 7.0, 100.0, 1e4})
    {
        double const d = bl_exact_1d(std::vector<double>{0.0, 0.0}, std::vector<double>{x, x});
        CHECK(d == doctest::Approx(2.0 * x / (2.0 + x)).epsilon(1e-10));
        CHECK(d < 2.0);
    }
}

TEST_CASE("exact 1-D distance matches a dense-grid DP oracle")
{
    RandomStream rng(41, 0, 0);
    for (int trial = 0; trial < 12; ++trial)
    {
        std::vector<double> a(1 + rng.index(4)), b(1 + rng.index(4));
        for (auto& x : a)
            x = 3.0 * rng.gaussian();
        for (auto& x : b)
            x = 3.0 * rng.gaussian() + 0.5;
        double const exact = bl_exact_1d(a, b);
        double const oracle = dense_dp_oracle(a, b);
        CHECK(oracle <= exact + 1e-9);
        CHECK(exact - oracle <= 5e-3);
    }
}

TEST_CASE("1-D reports")
{
    RandomStream rng(42, 0, 0);
    auto const x = gaussian(rng, 2000);
    auto shuffled = x;
    std::shuffle(shuffled.begin(), shuffled.end(), rng.engine());
    DistanceReport const same = bl_distance_1d(law1d(x), law1d(shuffled));
    CHECK(same.estimate == 0.0);
    CHECK(same.method == DistanceMethod::Exact1D);
    CHECK(to_string(same.method) == "EXACT-1D");

    DistanceReport const shifted = bl_distance_1d(law1d(x), law1d(gaussian(rng, 2000, 1.0)));
    CHECK(shifted.estimate > 5.0 * shifted.noise_floor);
    CHECK(shifted.ci_lo <= shifted.ci_hi);
    CHECK(shifted.estimate <= 2.0);
}

TEST_CASE("distances are symmetric")
{
    RandomStream rng(43, 0, 0);
    auto const a = gaussian(rng, 500), b = gaussian(rng, 700, 0.3);
    CHECK(bl_exact_1d(a, b) == bl_exact_1d(b, a));
    DistanceReport const ab = bl_distance_1d(law1d(a), law1d(b), {200, 0.9, 1});
    DistanceReport const ba = bl_distance_1d(law1d(b), law1d(a), {200, 0.9, 1});
    CHECK(ab.estimate == ba.estimate);
    CHECK(ab.noise_floor == ba.noise_floor);

    auto p = gaussian(rng, 1000), q = gaussian(rng, 800, 0.5);
    EmpiricalLaw const l1(p, 2), l2(q, 2);
    auto const f12 = make_ramp_features(l1, l2, 64, 9);
    auto const f21 = make_ramp_features(l2, l1, 64, 9);
    CHECK(bl_lower_bound_nd(l1, l2, f12).estimate() == bl_lower_bound_nd(l2, l1, f21).estimate());
    CHECK(bl_distance_nd(l1, l2, 64, 9).estimate == bl_distance_nd(l2, l1, 64, 9).estimate);
}

TEST_CASE("triangle inequality spot checks")
{
    RandomStream rng(44, 0, 0);
    for (int trial = 0; trial < 10; ++trial)
    {
        auto const a = gaussian(rng, 300), b = gaussian(rng, 300, 0.4), c = gaussian(rng, 300, 1.1);
        CHECK(bl_exact_1d(a, c) <= bl_exact_1d(a, b) + bl_exact_1d(b, c) + 1e-12);
    }
    auto const a = gaussian(rng, 2000), b = gaussian(rng, 2000, 0.4), c = gaussian(rng, 2000, 0.8);
    EmpiricalLaw const la(a, 2), lb(b, 2), lc(c, 2);
    DistanceReport const ab = bl_distance_nd(la, lb, 64, 1), bc = bl_distance_nd(lb, lc, 64, 1),
                         ac = bl_distance_nd(la, lc, 64, 1);
    CHECK(ac.estimate <= ab.estimate + bc.estimate + 2.0 * std::max(ab.noise_floor, bc.noise_floor));
}

TEST_CASE("n-dimensional lower bound examples")
{
    RandomStream rng(45, 0, 0);
    EmpiricalLaw const a(gaussian(rng, 8000), 2);
    std::vector<std::size_t> perm(a.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng.engine());
    DistanceReport const copy = bl_distance_nd(a, a.subset(perm), 64, 3);
    CHECK(copy.estimate == 0.0);
    CHECK(copy.method == DistanceMethod::LowerBoundND);
    CHECK(to_string(copy.method) == "LOWER-BOUND");

    EmpiricalLaw const b(gaussian(rng, 8000), 2);
    DistanceReport const same_law = bl_distance_nd(a, b, 64, 3);
    CHECK(same_law.estimate <= 3.0 * same_law.noise_floor);

    std::vector<double> shifted = gaussian(rng, 8000);
    for (std::size_t i = 0; i < shifted.size(); i += 2)
        shifted[i] += 1.0;
    DistanceReport const far = bl_distance_nd(a, EmpiricalLaw(shifted, 2), 64, 3);
    CHECK(far.estimate > 5.0 * far.noise_floor);
    CHECK(far.estimate >= far.marginal_max);
    CHECK(far.estimate >= far.ramp_max);
    CHECK(far.estimate >= far.projection);
    CHECK(far.estimate <= 2.0);
    CHECK_THROWS(bl_distance_nd(a, b, 32, 3));
}

TEST_CASE("noise floor is calibrated")
{
    RandomStream rng(46, 0, 0);
    int within = 0;
    int const trials = 40;
    for (int t = 0; t < trials; ++t)
    {
        DistanceReport const d = bl_distance_1d(law1d(gaussian(rng, 800)), law1d(gaussian(rng, 800)),
                                                {50, 0.9, static_cast<std::uint64_t>(t)});
        within += d.estimate <= 3.0 * d.noise_floor ? 1 : 0;
    }
    CHECK(within >= static_cast<int>(0.95 * trials));
}

TEST_CASE("EmpiricalLaw validation")
{
    CHECK_THROWS(EmpiricalLaw({1.0}, 1));
    CHECK_THROWS(EmpiricalLaw({1.0, 2.0, 3.0}, 2));
    CHECK_THROWS(EmpiricalLaw({1.0, std::nan("")}, 1));
    EmpiricalLaw const l({1, 2, 3, 4, 5, 6}, 2);
    CHECK(l.size() == 3);
    CHECK(l.coordinate(1) == std::vector<double>{2, 4, 6});
}

TEST_CASE("bootstrap mean and Kolmogorov-Smirnov")
{
    MeanInterval const m = bootstrap_mean({1, 2, 3, 4, 5});
    CHECK(m.mean == 3.0);
    CHECK(m.ci_lo <= 3.0);
    CHECK(m.ci_hi >= 3.0);
    CHECK(m.std_error == doctest::Approx(std::sqrt(2.5 / 5)));

    auto uniform = [](double x) { return std::clamp(x, 0.0, 1.0); };
    CHECK(ks_statistic({0.5}, uniform) == doctest::Approx(0.5));
    CHECK(ks_statistic({0.25, 0.75}, uniform) == doctest::Approx(0.25));
    CHECK(ks_critical_value(4000, 0.01)
          == doctest::Approx(std::sqrt(-0.5 * std::log(0.005)) / std::sqrt(4000.0)));
    RandomStream rng(47, 0, 0);
    std::vector<double> u(4000);
    for (auto& x : u)
        x = rng.uniform();
    CHECK(ks_statistic(u, uniform) < ks_critical_value(4000, 0.01));
}

TEST_CASE("mixing profile examples")
{
    std::string const sys = "n = 2\nlambdas = 1, 1.4142135623730951\nepsilon = 0.05\npsi_kind = constant";
    auto const ou = make_spec(sys, "[drift]\np1_1 = -v1\np1_2 = -v2\n[hamiltonian]\nh = "
                                   "abs2(v1)*abs2(v2)\n[dispersion]\npsi_1_1 = 1\npsi_2_2 = 1\n");
    ComplexVec const v1{Complex{2, 0}, Complex{0, 0}}, v2{Complex{0, 0}, Complex{2, 0}};

    MixingOptions same;
    same.sim = SimOptions{1.0, 0.01, 200, 5, {}};
    same.seed2 = 5;
    same.times = {0.5, 1.0};
    for (auto const& r : mixing_profile(ou, Variant::Full, v1, v1, same))
        CHECK(r.estimate == 0.0);

    MixingOptions o;
    o.sim = SimOptions{8.0, 0.01, 2000, 6, {}};
    o.seed2 = 7;
    o.times = {0.5, 1, 2, 4, 8};
    auto const prof = mixing_profile(ou, Variant::Full, v1, v2, o);
    CHECK(prof.front().estimate > prof.back().estimate);
    CHECK(prof.back().estimate < 2.0 * prof.back().noise_floor);

    auto const decay = make_spec(sys, "[drift]\np1_1 = -v1\np1_2 = -v2\n");
    MixingOptions d;
    d.sim = SimOptions{2.0, 0.001, 4, 1, {}};
    d.seed2 = 2;
    d.times = {0.5, 1.0, 2.0};
    auto const det = mixing_profile(decay, Variant::Full, v1, v2, d);
    for (std::size_t i = 0; i < det.size(); ++i)
    {
        double const x = std::sqrt(8.0) * std::exp(-d.times[i]);
        CHECK(det[i].estimate == doctest::Approx(2.0 * x / (2.0 + x)).epsilon(2e-3));
        if (i > 0)
            CHECK(det[i].estimate < det[i - 1].estimate);
    }
}

TEST_CASE("convergence table")
{
    std::string const sys = "n = 2\nlambdas = 1, 1.4142135623730951\nepsilon = 0.05\npsi_kind = constant";
    auto const still = make_spec(sys, "");
    ConvergenceOptions o;
    o.eps_list = {0.2, 0.05};
    o.times = {0.5, 1.0};
    o.n_paths = 50;
    o.dtau_effective = 0.01;
    o.seed = 3;
    auto const rows = convergence_table(still, {Complex{1, 0}, Complex{0.5, 0.5}}, o);
    CHECK(rows.size() == 2 * 2 * 3);
    for (auto const& r : rows)
        CHECK(r.report.estimate < 1e-12);

    std::ostringstream os;
    write_convergence_csv(os, rows);
    CHECK(os.str().rfind("eps,time,metric,estimate,ci_lo,ci_hi,noise_floor\n0.2,0.5,bl_action,", 0)
          == 0);
    auto const j = nlohmann::json::parse(convergence_json(rows));
    REQUIRE(j.size() == rows.size());
    for (auto const* key : {"eps", "time", "metric", "estimate", "ci_lo", "ci_hi", "noise_floor"})
        CHECK(j[0].contains(key));

    o.eps_list = {0.05, 0.2};
    CHECK_THROWS(convergence_table(still, {Complex{1, 0}, Complex{0.5, 0.5}}, o));
}
