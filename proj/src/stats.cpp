#include "stochavg/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "json.hpp"

namespace stochavg {

EmpiricalLaw::EmpiricalLaw(std::vector<double> points, std::size_t dim, double time_tag,
                           std::uint64_t source)
    : points_(std::move(points)), dim_(dim), time_tag_(time_tag), source_(source)
{
    if (dim_ == 0 || points_.size() % dim_ != 0)
        throw DimensionMismatch("point buffer is not a multiple of the dimension");
    if (size() < 2)
        throw InvalidArgument("an empirical law needs at least 2 samples");
    for (double x : points_)
    {
        if (!std::isfinite(x))
            throw InvalidArgument("empirical law holds a non-finite sample");
    }
}

std::vector<double> EmpiricalLaw::coordinate(std::size_t j) const
{
    std::vector<double> out(size());
    for (std::size_t i = 0; i < size(); ++i)
        out[i] = points_[i * dim_ + j];
    return out;
}

EmpiricalLaw EmpiricalLaw::subset(std::vector<std::size_t> const& rows) const
{
    std::vector<double> pts;
    pts.reserve(rows.size() * dim_);
    for (std::size_t r : rows)
        pts.insert(pts.end(), points_.begin() + r * dim_, points_.begin() + (r + 1) * dim_);
    return EmpiricalLaw(std::move(pts), dim_, time_tag_, source_);
}

EmpiricalLaw action_law(StateEnsemble const& e, std::size_t node)
{
    std::vector<double> pts;
    pts.reserve(e.n_paths() * e.dim());
    for (std::size_t p = 0; p < e.n_paths(); ++p)
        for (std::size_t k = 0; k < e.dim(); ++k)
            pts.push_back(action_of(e.at(p, node, k)));
    return EmpiricalLaw(std::move(pts), e.dim(), e.time(node), e.meta().spec_hash);
}

EmpiricalLaw action_law(ActionEnsemble const& e, std::size_t node)
{
    std::vector<double> pts;
    pts.reserve(e.n_paths() * e.dim());
    for (std::size_t p = 0; p < e.n_paths(); ++p)
        for (std::size_t k = 0; k < e.dim(); ++k)
            pts.push_back(e.at(p, node, k));
    return EmpiricalLaw(std::move(pts), e.dim(), e.time(node), e.meta().spec_hash);
}

EmpiricalLaw state_law(StateEnsemble const& e, std::size_t node)
{
    std::vector<double> pts;
    pts.reserve(e.n_paths() * e.dim() * 2);
    for (std::size_t p = 0; p < e.n_paths(); ++p)
    {
        for (std::size_t k = 0; k < e.dim(); ++k)
        {
            pts.push_back(e.at(p, node, k).real());
            pts.push_back(e.at(p, node, k).imag());
        }
    }
    return EmpiricalLaw(std::move(pts), 2 * e.dim(), e.time(node), e.meta().spec_hash);
}

std::string to_string(DistanceMethod method)
{
    return method == DistanceMethod::Exact1D ? "EXACT-1D" : "LOWER-BOUND";
}

//---------------------------------------------------------------------------//
// Exact 1-D distance
//---------------------------------------------------------------------------//

namespace {

constexpr std::uint64_t resample_stream = 11;
constexpr std::uint64_t feature_stream = 13;

/*!
 * Merged sample grid. Law 1 points weigh N2 and law 2 points -N1, so the
 * running sums G are exact integers and F = G / (N1 N2).
 */
struct MergedGrid
{
    std::vector<double> gaps;          // x_{i+1} - x_i > 0
    std::vector<std::size_t> slot;     // slope slot of the running sum before each gap
    std::vector<double> flux;          // F before each gap
    std::vector<double> slot_slope;    // slope -F of each slot, decreasing in slot index
    std::size_t zero_slot = 0;
};

MergedGrid merge(std::span<double const> x1, std::span<double const> x2)
{
    auto const n1 = static_cast<std::int64_t>(x1.size());
    auto const n2 = static_cast<std::int64_t>(x2.size());
    std::vector<std::pair<double, std::int64_t>> pts;
    pts.reserve(x1.size() + x2.size());
    for (double x : x1)
        pts.emplace_back(x, n2);
    for (double x : x2)
        pts.emplace_back(x, -n1);
    std::sort(pts.begin(), pts.end());

    std::vector<std::int64_t> sums;
    MergedGrid grid;
    std::int64_t g = 0;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i)
    {
        g += pts[i].second;
        double gap = pts[i + 1].first - pts[i].first;
        if (gap > 0.0)
        {
            grid.gaps.push_back(gap);
            sums.push_back(g);
        }
    }
    std::vector<std::int64_t> values = sums;
    values.push_back(0);
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    double const nn = static_cast<double>(n1) * static_cast<double>(n2);
    for (std::int64_t v : values)
        grid.slot_slope.push_back(-static_cast<double>(v) / nn);
    auto index_of = [&](std::int64_t v) {
        return static_cast<std::size_t>(std::lower_bound(values.begin(), values.end(), v)
                                        - values.begin());
    };
    grid.zero_slot = index_of(0);
    for (std::int64_t s : sums)
    {
        grid.slot.push_back(index_of(s));
        grid.flux.push_back(static_cast<double>(s) / nn);
    }
    return grid;
}

/*!
 * Best value of sum_i w_i f(x_i) over f with range <= 2s and Lip <= 1 - s.
 *
 * h_i(y) is the best partial objective with f(x_i) = y on [0, 2s]; it stays
 * concave and piecewise linear, stored as lengths per slope slot plus its
 * value at y = 0.
 */
double bl_value_at(MergedGrid const& g, double s, std::vector<double>& len)
{
    std::size_t const slots = g.slot_slope.size();
    len.assign(slots, 0.0);
    len[g.zero_slot] = 2.0 * s;
    std::size_t lo = g.zero_slot, hi = g.zero_slot;
    double value = 0.0;
    double const lip = 1.0 - s;
    for (std::size_t i = 0; i < g.gaps.size(); ++i)
    {
        double const c = lip * g.gaps[i];
        if (!(c > 0.0))
            continue;
        std::size_t const j = g.slot[i];
        value += g.flux[i] * c;
        len[j] += 2.0 * c;
        lo = std::min(lo, j);
        hi = std::max(hi, j);
        // Cut c off the left end (largest slopes), tracking h(0).
        double rem = c;
        while (rem > 0.0)
        {
            if (len[lo] <= rem)
            {
                value += g.slot_slope[lo] * len[lo];
                rem -= len[lo];
                len[lo] = 0.0;
                if (lo == hi)
                    break;
                ++lo;
                while (lo < hi && len[lo] == 0.0)
                    ++lo;
            }
            else
            {
                value += g.slot_slope[lo] * rem;
                len[lo] -= rem;
                rem = 0.0;
            }
        }
        // Cut c off the right end.
        rem = c;
        while (rem > 0.0)
        {
            if (len[hi] <= rem)
            {
                rem -= len[hi];
                len[hi] = 0.0;
                if (hi == lo)
                    break;
                --hi;
                while (hi > lo && len[hi] == 0.0)
                    --hi;
            }
            else
            {
                len[hi] -= rem;
                rem = 0.0;
            }
        }
    }
    for (std::size_t j = lo; j <= hi; ++j)
    {
        if (g.slot_slope[j] > 0.0)
            value += g.slot_slope[j] * len[j];
    }
    return value;
}

double quantile(std::vector<double> sorted, double q)
{
    std::sort(sorted.begin(), sorted.end());
    double pos = q * static_cast<double>(sorted.size() - 1);
    auto i = static_cast<std::size_t>(std::floor(pos));
    if (i + 1 >= sorted.size())
        return sorted.back();
    double frac = pos - static_cast<double>(i);
    return sorted[i] + frac * (sorted[i + 1] - sorted[i]);
}

// Canonical argument order, so that swapping the laws changes nothing.
bool canonical_swap(EmpiricalLaw const& a, EmpiricalLaw const& b)
{
    if (a.size() != b.size())
        return a.size() > b.size();
    return std::lexicographical_compare(b.points().begin(), b.points().end(),
                                        a.points().begin(), a.points().end());
}

std::vector<std::size_t> resample_rows(RandomStream& rng, std::size_t n)
{
    std::vector<std::size_t> rows(n);
    for (auto& r : rows)
        r = rng.index(n);
    return rows;
}

std::vector<std::size_t> iota_rows(std::size_t from, std::size_t to)
{
    std::vector<std::size_t> rows(to - from);
    std::iota(rows.begin(), rows.end(), from);
    return rows;
}

template <class Estimator>
void fill_bootstrap(DistanceReport& report, EmpiricalLaw const& a, EmpiricalLaw const& b,
                    BootstrapOptions const& boot, Estimator const& estimate)
{
    if (boot.resamples > 0)
    {
        std::vector<double> values(boot.resamples);
        parallel_for(values.size(), [&](std::size_t r) {
            RandomStream rng(boot.seed, r, resample_stream);
            EmpiricalLaw ra = a.subset(resample_rows(rng, a.size()));
            EmpiricalLaw rb = b.subset(resample_rows(rng, b.size()));
            values[r] = estimate(ra, rb);
        });
        double const tail = 0.5 * (1.0 - boot.level);
        report.ci_lo = quantile(values, tail);
        report.ci_hi = quantile(values, 1.0 - tail);
    }
    else
    {
        report.ci_lo = report.ci_hi = report.estimate;
    }
    auto half_split = [&](EmpiricalLaw const& law) {
        std::size_t const h = law.size() / 2;
        return estimate(law.subset(iota_rows(0, h)), law.subset(iota_rows(h, law.size())));
    };
    report.noise_floor = 0.5 * (half_split(a) + half_split(b));
}

void require_same_dim(EmpiricalLaw const& a, EmpiricalLaw const& b)
{
    if (a.dim() != b.dim())
        throw DimensionMismatch("empirical laws live in different dimensions");
}

}  // namespace

double bl_exact_1d(std::span<double const> x1, std::span<double const> x2)
{
    if (x1.empty() || x2.empty())
        throw InvalidArgument("empirical laws must be nonempty");
    if (x1.size() != x2.size() ? x1.size() > x2.size()
                               : std::lexicographical_compare(x2.begin(), x2.end(), x1.begin(), x1.end()))
        std::swap(x1, x2);
    MergedGrid const grid = merge(x1, x2);
    if (grid.gaps.empty())
        return 0.0;
    std::vector<double> len;
    auto value = [&](double s) { return bl_value_at(grid, s, len); };

    // V(s) is concave in s (a sup of linear functionals over a jointly convex set).
    double const phi = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = 0.0, b = 1.0;
    double c = b - phi * (b - a), d = a + phi * (b - a);
    double fc = value(c), fd = value(d);
    double best = std::max(fc, fd);
    for (int it = 0; it < 80 && b - a > 1e-12; ++it)
    {
        if (fc >= fd)
        {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = value(c);
            best = std::max(best, fc);
        }
        else
        {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = value(d);
            best = std::max(best, fd);
        }
    }
    return std::max(best, 0.0);
}

DistanceReport bl_distance_1d(EmpiricalLaw const& law1, EmpiricalLaw const& law2,
                              BootstrapOptions const& boot)
{
    require_same_dim(law1, law2);
    if (law1.dim() != 1)
        throw DimensionMismatch("bl_distance_1d needs one-dimensional laws");
    bool const swap = canonical_swap(law1, law2);
    EmpiricalLaw const& a = swap ? law2 : law1;
    EmpiricalLaw const& b = swap ? law1 : law2;
    auto estimate = [](EmpiricalLaw const& x, EmpiricalLaw const& y) {
        return bl_exact_1d(x.points(), y.points());
    };
    DistanceReport report;
    report.method = DistanceMethod::Exact1D;
    report.estimate = estimate(a, b);
    report.marginal_max = report.estimate;
    fill_bootstrap(report, a, b, boot, estimate);
    return report;
}

//---------------------------------------------------------------------------//
// n-dimensional lower bound
//---------------------------------------------------------------------------//

double RampFeature::operator()(std::span<double const> x) const
{
    double t = 0.0;
    for (std::size_t j = 0; j < u.size(); ++j)
        t += u[j] * x[j];
    return scale() * std::clamp((t - b) / w, -1.0, 1.0);
}

std::vector<RampFeature> make_ramp_features(EmpiricalLaw const& pooled_a,
                                            EmpiricalLaw const& pooled_b, int count,
                                            std::uint64_t seed)
{
    require_same_dim(pooled_a, pooled_b);
    if (canonical_swap(pooled_a, pooled_b))
        return make_ramp_features(pooled_b, pooled_a, count, seed);
    std::size_t const d = pooled_a.dim();
    RandomStream rng(seed, 0, feature_stream);
    std::vector<RampFeature> out;
    for (int f = 0; f < count; ++f)
    {
        RampFeature feat;
        feat.u.resize(d);
        double norm2 = 0.0;
        while (norm2 == 0.0)
        {
            for (auto& x : feat.u)
            {
                x = rng.gaussian();
                norm2 += x * x;
            }
        }
        for (auto& x : feat.u)
            x /= std::sqrt(norm2);
        std::size_t row = rng.index(pooled_a.size() + pooled_b.size());
        auto p = row < pooled_a.size() ? pooled_a.point(row)
                                       : pooled_b.point(row - pooled_a.size());
        for (std::size_t j = 0; j < d; ++j)
            feat.b += feat.u[j] * p[j];
        feat.w = std::exp(std::log(0.05) + rng.uniform() * (std::log(20.0) - std::log(0.05)));
        out.push_back(std::move(feat));
    }
    return out;
}

double NdParts::estimate() const
{
    return std::max({ramp_max, marginal_max, projection});
}

namespace {

// Order-independent mean: fixed-point accumulation of values in [-1, 1].
double exact_mean(EmpiricalLaw const& law, RampFeature const& f)
{
    constexpr double scale = 17592186044416.0;  // 2^44
    std::int64_t acc = 0;
    for (std::size_t i = 0; i < law.size(); ++i)
        acc += std::llround(f(law.point(i)) * scale);
    return static_cast<double>(acc) / scale / static_cast<double>(law.size());
}

std::vector<double> project(EmpiricalLaw const& law, std::vector<double> const& u)
{
    std::vector<double> out(law.size());
    for (std::size_t i = 0; i < law.size(); ++i)
    {
        auto p = law.point(i);
        double t = 0.0;
        for (std::size_t j = 0; j < u.size(); ++j)
            t += u[j] * p[j];
        out[i] = t;
    }
    return out;
}

}  // namespace

NdParts bl_lower_bound_nd(EmpiricalLaw const& law1, EmpiricalLaw const& law2,
                          std::vector<RampFeature> const& features)
{
    require_same_dim(law1, law2);
    if (canonical_swap(law1, law2))
        return bl_lower_bound_nd(law2, law1, features);
    std::size_t const d = law1.dim();
    NdParts parts;
    for (auto const& f : features)
        parts.ramp_max = std::max(parts.ramp_max, std::abs(exact_mean(law1, f) - exact_mean(law2, f)));
    for (std::size_t j = 0; j < d; ++j)
        parts.marginal_max = std::max(parts.marginal_max,
                                      bl_exact_1d(law1.coordinate(j), law2.coordinate(j)));
    if (d > 1)
    {
        std::vector<double> u(d, 0.0);
        for (std::size_t j = 0; j < d; ++j)
        {
            for (std::size_t i = 0; i < law1.size(); ++i)
                u[j] += law1.point(i)[j];
            u[j] /= static_cast<double>(law1.size());
            double m2 = 0.0;
            for (std::size_t i = 0; i < law2.size(); ++i)
                m2 += law2.point(i)[j];
            u[j] -= m2 / static_cast<double>(law2.size());
        }
        double norm = std::sqrt(std::inner_product(u.begin(), u.end(), u.begin(), 0.0));
        if (norm > 0.0)
        {
            for (auto& x : u)
                x /= norm;
            parts.projection = bl_exact_1d(project(law1, u), project(law2, u));
        }
    }
    return parts;
}

DistanceReport bl_distance_nd(EmpiricalLaw const& law1, EmpiricalLaw const& law2,
                              int feature_count, std::uint64_t seed, BootstrapOptions const& boot)
{
    require_same_dim(law1, law2);
    if (feature_count < 64)
        throw InvalidArgument("feature_count must be >= 64");
    bool const swap = canonical_swap(law1, law2);
    EmpiricalLaw const& a = swap ? law2 : law1;
    EmpiricalLaw const& b = swap ? law1 : law2;
    auto const features = make_ramp_features(a, b, feature_count, seed);
    auto estimate = [&](EmpiricalLaw const& x, EmpiricalLaw const& y) {
        return bl_lower_bound_nd(x, y, features).estimate();
    };
    NdParts parts = bl_lower_bound_nd(a, b, features);
    DistanceReport report;
    report.method = DistanceMethod::LowerBoundND;
    report.estimate = parts.estimate();
    report.ramp_max = parts.ramp_max;
    report.marginal_max = parts.marginal_max;
    report.projection = parts.projection;
    fill_bootstrap(report, a, b, boot, estimate);
    return report;
}

DistanceReport bl_distance(EmpiricalLaw const& law1, EmpiricalLaw const& law2, std::uint64_t seed,
                           BootstrapOptions const& boot)
{
    if (law1.dim() == 1 && law2.dim() == 1)
        return bl_distance_1d(law1, law2, boot);
    return bl_distance_nd(law1, law2, 64, seed, boot);
}

MeanInterval bootstrap_mean(std::vector<double> const& values, BootstrapOptions const& boot)
{
    if (values.empty())
        throw InvalidArgument("bootstrap_mean needs samples");
    auto mean_of = [](std::vector<double> const& v) {
        return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    };
    MeanInterval out;
    out.mean = mean_of(values);
    double ss = 0.0;
    for (double x : values)
        ss += (x - out.mean) * (x - out.mean);
    if (values.size() > 1)
        out.std_error = std::sqrt(ss / static_cast<double>(values.size() - 1)
                                  / static_cast<double>(values.size()));
    std::vector<double> means(std::max(boot.resamples, 0));
    parallel_for(means.size(), [&](std::size_t r) {
        RandomStream rng(boot.seed, r, resample_stream);
        double s = 0.0;
        for (std::size_t i = 0; i < values.size(); ++i)
            s += values[rng.index(values.size())];
        means[r] = s / static_cast<double>(values.size());
    });
    if (means.empty())
    {
        out.ci_lo = out.ci_hi = out.mean;
        return out;
    }
    double const tail = 0.5 * (1.0 - boot.level);
    out.ci_lo = quantile(means, tail);
    out.ci_hi = quantile(means, 1.0 - tail);
    return out;
}

double ks_statistic(std::vector<double> samples, std::function<double(double)> const& cdf)
{
    if (samples.empty())
        throw InvalidArgument("ks_statistic needs samples");
    std::sort(samples.begin(), samples.end());
    double const n = static_cast<double>(samples.size());
    double d = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i)
    {
        double f = cdf(samples[i]);
        d = std::max({d, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
    }
    return d;
}

double ks_critical_value(std::size_t n, double alpha)
{
    return std::sqrt(-0.5 * std::log(alpha / 2.0)) / std::sqrt(static_cast<double>(n));
}

//---------------------------------------------------------------------------//
// Experiments
//---------------------------------------------------------------------------//

std::vector<DistanceReport> mixing_profile(SystemSpec const& spec, Variant variant,
                                           ComplexVec const& v1, ComplexVec const& v2,
                                           MixingOptions const& opts)
{
    if (opts.times.empty())
        throw InvalidArgument("mixing_profile needs at least one time");
    SimOptions s1 = opts.sim;
    s1.record_times = opts.times;
    SimOptions s2 = s1;
    s2.seed = opts.seed2;
    StateEnsemble e1 = simulate_effective(spec, variant, v1, s1);
    StateEnsemble e2 = simulate_effective(spec, variant, v2, s2);
    std::vector<DistanceReport> out;
    for (double t : opts.times)
    {
        BootstrapOptions boot;
        boot.seed = opts.feature_seed;
        out.push_back(bl_distance_nd(state_law(e1, e1.node_at(t)), state_law(e2, e2.node_at(t)),
                                     64, opts.feature_seed, boot));
    }
    return out;
}

std::vector<ConvergenceRow> convergence_table(SystemSpec const& spec, ComplexVec const& v0,
                                              ConvergenceOptions const& opts)
{
    if (opts.eps_list.empty() || opts.times.empty())
        throw InvalidArgument("convergence_table needs eps values and times");
    for (std::size_t i = 1; i < opts.eps_list.size(); ++i)
    {
        if (!(opts.eps_list[i] < opts.eps_list[i - 1]))
            throw InvalidArgument("eps_list must be strictly decreasing");
    }
    double const T = *std::max_element(opts.times.begin(), opts.times.end());

    SimOptions eff;
    eff.T = T;
    eff.dtau = opts.dtau_effective;
    eff.n_paths = opts.n_paths;
    eff.seed = opts.seed;
    eff.record_times = opts.times;
    ActionEnsemble const effective = actions_of(simulate_effective(spec, Variant::Full, v0, eff));

    std::vector<ConvergenceRow> rows;
    for (std::size_t e = 0; e < opts.eps_list.size(); ++e)
    {
        double const eps = opts.eps_list[e];
        SimOptions pert = eff;
        pert.dtau = std::min(opts.dtau_factor * eps, opts.dtau_effective);
        pert.seed = splitmix64(opts.seed + 1 + e);
        ActionEnsemble const perturbed =
            actions_of(simulate_perturbed(spec.with_epsilon(eps), v0, pert).v);
        for (double t : opts.times)
        {
            EmpiricalLaw lp = action_law(perturbed, perturbed.node_at(t));
            EmpiricalLaw le = action_law(effective, effective.node_at(t));
            BootstrapOptions boot;
            boot.seed = opts.seed;
            if (lp.dim() == 1)
            {
                rows.push_back({eps, t, "bl_action", bl_distance_1d(lp, le, boot)});
                continue;
            }
            rows.push_back({eps, t, "bl_action", bl_distance_nd(lp, le, 64, opts.seed, boot)});
            for (std::size_t k = 0; k < lp.dim(); ++k)
            {
                EmpiricalLaw mp(lp.coordinate(k), 1, t), me(le.coordinate(k), 1, t);
                rows.push_back({eps, t, "bl_action_I" + std::to_string(k + 1),
                                bl_distance_1d(mp, me, boot)});
            }
        }
    }
    return rows;
}

void write_convergence_csv(std::ostream& os, std::vector<ConvergenceRow> const& rows)
{
    os << "eps,time,metric,estimate,ci_lo,ci_hi,noise_floor\n";
    for (auto const& r : rows)
    {
        os << format_double(r.eps) << ',' << format_double(r.time) << ',' << r.metric << ','
           << format_double(r.report.estimate) << ',' << format_double(r.report.ci_lo) << ','
           << format_double(r.report.ci_hi) << ',' << format_double(r.report.noise_floor) << '\n';
    }
}

std::string convergence_json(std::vector<ConvergenceRow> const& rows)
{
    nlohmann::json out = nlohmann::json::array();
    for (auto const& r : rows)
    {
        out.push_back({{"eps", r.eps},
                       {"time", r.time},
                       {"metric", r.metric},
                       {"estimate", r.report.estimate},
                       {"ci_lo", r.report.ci_lo},
                       {"ci_hi", r.report.ci_hi},
                       {"noise_floor", r.report.noise_floor},
                       {"method", to_string(r.report.method)}});
    }
    return out.dump(2);
}

}  // namespace stochavg
