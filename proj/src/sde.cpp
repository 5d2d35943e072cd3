#include "stochavg/sde.hpp"

#include <algorithm>
#include <cmath>

namespace stochavg {

namespace {

constexpr std::uint64_t noise_stream = 0;

void require_state(ComplexVec const& v0, std::size_t n)
{
    if (v0.size() != n)
        throw DimensionMismatch("initial state dimension differs from system");
    if (!all_finite(v0))
        throw InvalidArgument("initial state must be finite");
}

void check_step_guard(SystemSpec const& spec, double dtau)
{
    if (dtau > spec.epsilon() / 5.0 * (1.0 + 1e-12))
        throw StepTooLarge("dtau = " + format_double(dtau) + " exceeds epsilon / 5 = "
                           + format_double(spec.epsilon() / 5.0));
}

EnsembleMeta make_meta(SystemSpec const& spec, std::string integrator, SimOptions const& opts)
{
    return EnsembleMeta{spec.hash(), std::move(integrator), opts.dtau, opts.seed};
}

// Fast rotation over one step, e^{-i lambda_k dtau / eps}.
ComplexVec step_rotation(SystemSpec const& spec, double dtau)
{
    ComplexVec rot(spec.n());
    for (std::size_t k = 0; k < spec.n(); ++k)
        rot[k] = std::polar(1.0, -spec.freqs()[k] * dtau / spec.epsilon());
    return rot;
}

// One exponential-Euler step in place; `dbeta` holds n1 increments.
void perturbed_step(SystemSpec const& spec, ComplexVec const& rot, double dtau,
                    Complex const* dbeta, ComplexVec& v)
{
    std::size_t const n = spec.n(), n1 = spec.n1();
    ComplexVec p = spec.drift(v);
    ComplexVec psi = spec.dispersion(v);
    for (std::size_t k = 0; k < n; ++k)
    {
        Complex w = v[k] + p[k] * dtau;
        for (std::size_t l = 0; l < n1; ++l)
            w += psi[k * n1 + l] * dbeta[l];
        v[k] = rot[k] * w;
    }
}

Complex to_interaction(SystemSpec const& spec, std::size_t k, double tau, Complex v)
{
    double phase = std::fmod(spec.freqs()[k] * tau / spec.epsilon(), 2.0 * M_PI);
    return std::polar(1.0, phase) * v;
}

double squared_norm(ComplexVec const& a)
{
    double s = 0.0;
    for (Complex z : a)
        s += std::norm(z);
    return s;
}

}  // namespace

AveragingMethod default_integrator_method(SystemSpec const& spec)
{
    return spec.is_polynomial() ? AveragingMethod::symbolic() : AveragingMethod::quadrature(16);
}

PerturbedEnsembles simulate_perturbed(SystemSpec const& spec, ComplexVec const& v0,
                                      SimOptions const& opts)
{
    std::size_t const n = spec.n(), n1 = spec.n1();
    require_state(v0, n);
    check_step_guard(spec, opts.dtau);
    TimeGrid grid = TimeGrid::make(opts.T, opts.dtau, opts.record_times);
    PerturbedEnsembles out{
        StateEnsemble(opts.n_paths, n, grid, make_meta(spec, "exp-euler", opts)),
        StateEnsemble(opts.n_paths, n, grid, make_meta(spec, "exp-euler", opts)),
    };
    ComplexVec const rot = step_rotation(spec, opts.dtau);
    double const sq = std::sqrt(opts.dtau);

    parallel_for(opts.n_paths, [&](std::size_t p) {
        RandomStream rng(opts.seed, p, noise_stream);
        ComplexVec v = v0;
        std::vector<Complex> dbeta(n1);
        std::size_t node = 0;
        for (std::size_t j = 0;; ++j)
        {
            if (node < grid.recorded.size() && grid.recorded[node] == j)
            {
                double const tau = grid.time(j);
                for (std::size_t k = 0; k < n; ++k)
                {
                    out.v.at(p, node, k) = v[k];
                    out.a.at(p, node, k) = to_interaction(spec, k, tau, v[k]);
                }
                ++node;
            }
            if (j == grid.steps)
                break;
            for (auto& z : dbeta)
                z = rng.complex_increment(sq);
            perturbed_step(spec, rot, opts.dtau, dbeta.data(), v);
            if (!all_finite(v))
                throw NonFinite(p, grid.time(j + 1));
        }
    });
    return out;
}

CutoffEnsemble simulate_cutoff_effective(SystemSpec const& spec, Variant variant,
                                         ComplexVec const& v0, SimOptions const& opts, double R,
                                         AveragingMethod method)
{
    std::size_t const n = spec.n();
    require_state(v0, n);
    if (!(R > squared_norm(v0)))
        throw InvalidArgument("cut-off radius R must exceed |v0|^2");
    TimeGrid grid = TimeGrid::make(opts.T, opts.dtau, opts.record_times);
    AveragedSystem const sys(spec, variant, method);
    std::string id = variant == Variant::Full ? "em-effective" : "em-modified";
    CutoffEnsemble out{StateEnsemble(opts.n_paths, n, grid, make_meta(spec, id, opts)),
                       CutoffState{R, std::vector<double>(opts.n_paths, grid.time(grid.steps))}};
    double const sq = std::sqrt(opts.dtau);

    parallel_for(opts.n_paths, [&](std::size_t p) {
        RandomStream rng(opts.seed, p, noise_stream);
        ComplexVec a = v0;
        ComplexVec dbeta(n);
        bool cut = false;
        std::size_t node = 0;
        for (std::size_t j = 0;; ++j)
        {
            if (!cut && squared_norm(a) >= R)
            {
                cut = true;
                out.cutoff.tau_R[p] = grid.time(j);
            }
            if (node < grid.recorded.size() && grid.recorded[node] == j)
            {
                std::copy(a.begin(), a.end(), out.paths.row(p, node));
                ++node;
            }
            if (j == grid.steps)
                break;
            for (auto& z : dbeta)
                z = rng.complex_increment(sq);
            if (cut)
            {
                // Trivial system da = dbeta.
                for (std::size_t k = 0; k < n; ++k)
                    a[k] += dbeta[k];
            }
            else
            {
                ComplexVec d = sys.drift(a);
                SqrtResult b = sys.dispersion(a);
                ComplexVec next(n);
                for (std::size_t k = 0; k < n; ++k)
                {
                    Complex w = a[k] + d[k] * opts.dtau;
                    for (std::size_t l = 0; l < n; ++l)
                        w += b.root(k, l) * dbeta[l];
                    next[k] = w;
                }
                a.swap(next);
            }
            if (!all_finite(a))
                throw NonFinite(p, grid.time(j + 1));
        }
    });
    return out;
}

CutoffEnsemble simulate_cutoff_effective(SystemSpec const& spec, Variant variant,
                                         ComplexVec const& v0, SimOptions const& opts, double R)
{
    return simulate_cutoff_effective(spec, variant, v0, opts, R,
                                     default_integrator_method(spec));
}

StateEnsemble simulate_effective(SystemSpec const& spec, Variant variant, ComplexVec const& v0,
                                 SimOptions const& opts, AveragingMethod method)
{
    return simulate_cutoff_effective(spec, variant, v0, opts,
                                     std::numeric_limits<double>::infinity(), method)
        .paths;
}

StateEnsemble simulate_effective(SystemSpec const& spec, Variant variant, ComplexVec const& v0,
                                 SimOptions const& opts)
{
    return simulate_effective(spec, variant, v0, opts, default_integrator_method(spec));
}

ActionSdeResult simulate_action_sde(SystemSpec const& spec, ActionVector const& I0,
                                    SimOptions const& opts, AveragingMethod method)
{
    std::size_t const n = spec.n();
    if (I0.size() != n)
        throw DimensionMismatch("initial actions dimension differs from system");
    TimeGrid grid = TimeGrid::make(opts.T, opts.dtau, opts.record_times);
    AveragedSystem const sys(spec, Variant::Full, method);
    ActionSdeResult out{ActionEnsemble(opts.n_paths, n, grid, make_meta(spec, "em-action", opts)),
                        std::vector<std::size_t>(opts.n_paths, 0), 0};
    std::vector<std::size_t> sqrt_clamps(opts.n_paths, 0);
    double const sq = std::sqrt(opts.dtau);

    parallel_for(opts.n_paths, [&](std::size_t p) {
        RandomStream rng(opts.seed, p, noise_stream);
        std::vector<double> I = I0.values();
        std::vector<double> dW(n);
        std::size_t node = 0;
        for (std::size_t j = 0;; ++j)
        {
            if (node < grid.recorded.size() && grid.recorded[node] == j)
            {
                std::copy(I.begin(), I.end(), out.paths.row(p, node));
                ++node;
            }
            if (j == grid.steps)
                break;
            for (auto& w : dW)
                w = rng.gaussian() * sq;
            ActionVector const cur(I);
            std::vector<double> F = sys.action_drift(cur);
            ActionDiffusion SK = sys.action_diffusion(cur);
            sqrt_clamps[p] += SK.clamped;
            std::vector<double> next(n);
            for (std::size_t k = 0; k < n; ++k)
            {
                double x = I[k] + F[k] * opts.dtau;
                for (std::size_t l = 0; l < n; ++l)
                    x += SK.K(k, l).real() * dW[l];
                if (x < 0.0)
                {
                    x = 0.0;
                    ++out.clamp_events[p];
                }
                next[k] = x;
            }
            I.swap(next);
            for (double x : I)
            {
                if (!std::isfinite(x))
                    throw NonFinite(p, grid.time(j + 1));
            }
        }
    });
    for (std::size_t c : sqrt_clamps)
        out.sqrt_clamps += c;
    return out;
}

ActionSdeResult simulate_action_sde(SystemSpec const& spec, ActionVector const& I0,
                                    SimOptions const& opts)
{
    return simulate_action_sde(spec, I0, opts, default_integrator_method(spec));
}

ItoReport ito_action_consistency(SystemSpec const& spec, ComplexVec const& v0,
                                 NoisePath const& noise)
{
    std::size_t const n = spec.n(), n1 = spec.n1();
    require_state(v0, n);
    if (noise.n1() != n1)
        throw DimensionMismatch("noise path has the wrong number of components");
    double const dtau = noise.dtau();
    check_step_guard(spec, dtau);
    ComplexVec const rot = step_rotation(spec, dtau);

    ComplexVec v = v0;
    std::vector<double> I(n);
    for (std::size_t k = 0; k < n; ++k)
        I[k] = action_of(v0[k]);
    ItoReport report{0.0, dtau};
    for (std::size_t j = 0; j < noise.steps(); ++j)
    {
        Complex const* db = noise.step(j);
        ComplexVec p = spec.drift(v);
        ComplexVec psi = spec.dispersion(v);
        for (std::size_t k = 0; k < n; ++k)
        {
            Complex noise_k{};
            double ito = 0.0;
            for (std::size_t l = 0; l < n1; ++l)
            {
                noise_k += psi[k * n1 + l] * db[l];
                ito += std::norm(psi[k * n1 + l]);
            }
            I[k] += (v[k] * std::conj(p[k])).real() * dtau + (v[k] * std::conj(noise_k)).real()
                    + ito * dtau;
        }
        perturbed_step(spec, rot, dtau, db, v);
        if (!all_finite(v))
            throw NonFinite(0, (j + 1) * dtau);
        for (std::size_t k = 0; k < n; ++k)
            report.sup_error = std::max(report.sup_error, std::abs(action_of(v[k]) - I[k]));
    }
    return report;
}

ItoReport ito_action_consistency(SystemSpec const& spec, ComplexVec const& v0, double T,
                                 double dtau, std::uint64_t seed)
{
    TimeGrid grid = TimeGrid::make(T, dtau);
    return ito_action_consistency(
        spec, v0, NoisePath::generate(spec.n1(), grid.steps, dtau, seed, 0, noise_stream));
}

std::vector<ItoReport> ito_refinement(SystemSpec const& spec, ComplexVec const& v0, double T,
                                      double dtau, int levels, std::uint64_t seed)
{
    if (levels < 1)
        throw InvalidArgument("levels must be >= 1");
    double const finest = dtau / std::ldexp(1.0, levels - 1);
    TimeGrid grid = TimeGrid::make(T, finest);
    std::vector<NoisePath> paths;
    paths.push_back(NoisePath::generate(spec.n1(), grid.steps, finest, seed, 0, noise_stream));
    for (int i = 1; i < levels; ++i)
        paths.push_back(paths.back().coarsen());
    std::vector<ItoReport> out;
    for (int i = levels - 1; i >= 0; --i)
        out.push_back(ito_action_consistency(spec, v0, paths[i]));
    return out;
}

MomentReport moment_diagnostic(StateEnsemble const& ensemble, double m0)
{
    MomentReport report;
    report.m = static_cast<int>(std::ceil(std::max(m0, 4.0))) + 1;
    std::size_t const half = ensemble.n_paths() / 2;
    for (std::size_t i = 0; i < ensemble.nodes(); ++i)
    {
        double all = 0.0, first = 0.0;
        for (std::size_t p = 0; p < ensemble.n_paths(); ++p)
        {
            double r2 = 0.0;
            for (std::size_t k = 0; k < ensemble.dim(); ++k)
                r2 += std::norm(ensemble.at(p, i, k));
            double value = std::pow(r2, report.m);
            all += value;
            if (p < half)
                first += value;
        }
        report.sup_moment = std::max(report.sup_moment, all / ensemble.n_paths());
        if (half > 0)
            report.sup_moment_half = std::max(report.sup_moment_half, first / half);
    }
    return report;
}

}  // namespace stochavg
