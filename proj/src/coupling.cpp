#include "stochavg/coupling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include "stochavg/stats.hpp"

namespace stochavg {

bool SegmentSchedule::tiles() const
{
    for (auto const& segs : paths)
    {
        if (segs.empty() || segs.front().start != 0 || segs.back().end != steps)
            return false;
        for (std::size_t i = 0; i < segs.size(); ++i)
        {
            if (segs[i].start > segs[i].end)
                return false;
            SegmentKind expected = i % 2 == 0 ? SegmentKind::Lambda : SegmentKind::Delta;
            if (segs[i].kind != expected)
                return false;
            if (i > 0 && segs[i].start != segs[i - 1].end)
                return false;
        }
    }
    return true;
}

std::size_t SegmentSchedule::segment_count() const
{
    std::size_t n = 0;
    for (auto const& segs : paths)
        n += segs.size();
    return n;
}

ActionEnsemble PolarEnsemble::actions() const
{
    ActionEnsemble out(modulus.n_paths(), modulus.dim(), modulus.grid(), modulus.meta());
    for (std::size_t p = 0; p < modulus.n_paths(); ++p)
        for (std::size_t i = 0; i < modulus.nodes(); ++i)
            for (std::size_t k = 0; k < modulus.dim(); ++k)
                out.at(p, i, k) = action(p, i, k);
    return out;
}

StateEnsemble PolarEnsemble::states() const
{
    StateEnsemble out(modulus.n_paths(), modulus.dim(), modulus.grid(), modulus.meta());
    for (std::size_t p = 0; p < modulus.n_paths(); ++p)
        for (std::size_t i = 0; i < modulus.nodes(); ++i)
            for (std::size_t k = 0; k < modulus.dim(); ++k)
                out.at(p, i, k) = std::polar(modulus.at(p, i, k), phase.at(p, i, k));
    return out;
}

namespace {

constexpr std::uint64_t reference_stream = 0;
constexpr std::uint64_t coupled_stream = 1;

double squared_norm(ComplexVec const& a)
{
    double s = 0.0;
    for (Complex z : a)
        s += std::norm(z);
    return s;
}

ComplexVec draw_increments(std::size_t n, double sq, RandomStream& rng)
{
    ComplexVec dbeta(n);
    for (auto& z : dbeta)
        z = rng.complex_increment(sq);
    return dbeta;
}

// One Euler-Maruyama step of the cut-off equation.
void cutoff_step(AveragedSystem const& sys, bool cut, double dtau, ComplexVec const& dbeta,
                 ComplexVec& a)
{
    std::size_t const n = a.size();
    if (cut)
    {
        for (std::size_t k = 0; k < n; ++k)
            a[k] += dbeta[k];
        return;
    }
    ComplexVec d = sys.drift(a);
    SqrtResult b = sys.dispersion(a);
    ComplexVec next(n);
    for (std::size_t k = 0; k < n; ++k)
    {
        Complex w = a[k] + d[k] * dtau;
        for (std::size_t l = 0; l < n; ++l)
            w += b.root(k, l) * dbeta[l];
        next[k] = w;
    }
    a.swap(next);
}

PolarEnsemble make_polar(std::size_t n_paths, std::size_t n, TimeGrid const& grid,
                         EnsembleMeta const& meta)
{
    return PolarEnsemble{Ensemble<double>(n_paths, n, grid, meta),
                         Ensemble<double>(n_paths, n, grid, meta)};
}

}  // namespace

CoupledResult build_coupled(SystemSpec const& spec, ComplexVec const& v0, SimOptions const& opts,
                            CouplingOptions const& coupling, AveragingMethod method)
{
    std::size_t const n = spec.n();
    if (v0.size() != n)
        throw DimensionMismatch("initial state dimension differs from system");
    double const delta = coupling.delta;
    if (!(delta > 0.0))
        throw InvalidArgument("delta must be positive");
    if (!(ActionVector::from_state(v0).min() > delta))
        throw InvalidArgument("coupling needs min_k I_k(v0) > delta");
    if (!(coupling.R > squared_norm(v0)))
        throw InvalidArgument("cut-off radius R must exceed |v0|^2");

    TimeGrid const grid = TimeGrid::make(opts.T, opts.dtau);
    AveragedSystem const full(spec, Variant::Full, method);
    AveragedSystem const modified(spec, Variant::Modified, method);
    EnsembleMeta ref_meta{spec.hash(), "em-effective-cutoff", opts.dtau, opts.seed};
    EnsembleMeta cpl_meta{spec.hash(), "coupled", opts.dtau, opts.seed};

    CoupledResult out{make_polar(opts.n_paths, n, grid, cpl_meta),
                      make_polar(opts.n_paths, n, grid, ref_meta),
                      SegmentSchedule{delta, opts.dtau, grid.steps, {}},
                      RotationLog{},
                      std::vector<double>(opts.n_paths, grid.time(grid.steps)),
                      std::vector<double>(opts.n_paths, 0.0),
                      std::vector<double>(opts.n_paths, 0.0)};
    out.schedule.paths.resize(opts.n_paths);
    out.rotations.theta.resize(opts.n_paths);
    double const sq = std::sqrt(opts.dtau);

    parallel_for(opts.n_paths, [&](std::size_t p) {
        RandomStream ref_rng(opts.seed, p, reference_stream);
        RandomStream cpl_rng(opts.seed, p, coupled_stream);
        ComplexVec ref = v0, cpl = v0;
        bool ref_cut = false, cpl_cut = false;
        auto& segs = out.schedule.paths[p];
        auto& thetas = out.rotations.theta[p];
        segs.push_back({SegmentKind::Lambda, 0, 0});
        std::vector<double> theta(n, 0.0);
        std::vector<double> r_ref(n), ph_ref(n), r_cpl(n), ph_cpl(n);

        for (std::size_t j = 0;; ++j)
        {
            if (!ref_cut && squared_norm(ref) >= coupling.R)
            {
                ref_cut = true;
                out.tau_R[p] = grid.time(j);
            }
            for (std::size_t k = 0; k < n; ++k)
            {
                r_ref[k] = std::abs(ref[k]);
                ph_ref[k] = std::arg(ref[k]);
            }
            bool const in_delta = segs.back().kind == SegmentKind::Delta;
            if (in_delta)
            {
                for (std::size_t k = 0; k < n; ++k)
                {
                    r_cpl[k] = r_ref[k];
                    ph_cpl[k] = ph_ref[k] + theta[k];
                }
            }
            else
            {
                for (std::size_t k = 0; k < n; ++k)
                {
                    r_cpl[k] = std::abs(cpl[k]);
                    ph_cpl[k] = std::arg(cpl[k]);
                }
            }
            auto min_action = [&] {
                double m = std::numeric_limits<double>::infinity();
                for (double r : r_cpl)
                    m = std::min(m, 0.5 * r * r);
                return m;
            };

            if (!in_delta && j > 0 && j < grid.steps && min_action() <= delta)
            {
                // Open a Delta segment: match phases, then copy moduli.
                segs.back().end = j;
                segs.push_back({SegmentKind::Delta, j, j});
                std::vector<double> logged(n);
                double jump = 0.0;
                for (std::size_t k = 0; k < n; ++k)
                {
                    theta[k] = ph_cpl[k] - ph_ref[k];
                    jump = std::max(jump, std::abs(r_cpl[k] - r_ref[k]));
                    r_cpl[k] = r_ref[k];
                    ph_cpl[k] = ph_ref[k] + theta[k];
                    logged[k] = RotationVector({theta[k]})[0];
                }
                thetas.push_back(std::move(logged));
                out.switch_jump[p] = std::max(out.switch_jump[p], jump);
            }
            else if (in_delta && j > segs.back().start && min_action() >= 2.0 * delta)
            {
                segs.back().end = j;
                segs.push_back({SegmentKind::Lambda, j, j});
            }

            if (in_delta || segs.back().kind == SegmentKind::Delta)
            {
                for (std::size_t k = 0; k < n; ++k)
                {
                    double mismatch = std::abs(0.5 * r_cpl[k] * r_cpl[k] - 0.5 * r_ref[k] * r_ref[k]);
                    out.delta_mismatch[p] = std::max(out.delta_mismatch[p], mismatch);
                }
            }
            for (std::size_t k = 0; k < n; ++k)
            {
                out.reference.modulus.at(p, j, k) = r_ref[k];
                out.reference.phase.at(p, j, k) = ph_ref[k];
                out.coupled.modulus.at(p, j, k) = r_cpl[k];
                out.coupled.phase.at(p, j, k) = ph_cpl[k];
            }
            if (segs.back().kind == SegmentKind::Lambda && segs.back().start == j && j > 0)
            {
                // Leaving a Delta segment: continue from the rotated copy.
                for (std::size_t k = 0; k < n; ++k)
                    cpl[k] = std::polar(r_cpl[k], ph_cpl[k]);
            }
            if (!cpl_cut
                && std::inner_product(r_cpl.begin(), r_cpl.end(), r_cpl.begin(), 0.0) >= coupling.R)
                cpl_cut = true;

            if (j == grid.steps)
                break;
            ComplexVec const dbeta = draw_increments(n, sq, ref_rng);
            cutoff_step(full, ref_cut, opts.dtau, dbeta, ref);
            if (!all_finite(ref))
                throw NonFinite(p, grid.time(j + 1));
            if (segs.back().kind == SegmentKind::Lambda)
            {
                ComplexVec dbeta_cpl(n);
                if (coupling.noise == NoiseCoupling::PhaseAligned)
                {
                    for (std::size_t k = 0; k < n; ++k)
                        dbeta_cpl[k] = std::polar(1.0, ph_cpl[k] - ph_ref[k]) * dbeta[k];
                }
                else
                {
                    dbeta_cpl = draw_increments(n, sq, cpl_rng);
                }
                cutoff_step(modified, cpl_cut, opts.dtau, dbeta_cpl, cpl);
                if (!all_finite(cpl))
                    throw NonFinite(p, grid.time(j + 1));
            }
        }
        segs.back().end = grid.steps;
    });
    return out;
}

CoupledResult build_coupled(SystemSpec const& spec, ComplexVec const& v0, SimOptions const& opts,
                            CouplingOptions const& coupling)
{
    return build_coupled(spec, v0, opts, coupling, default_integrator_method(spec));
}

OccupationReport occupation_time(ActionEnsemble const& actions, double delta, std::size_t k,
                                 std::vector<double> const& up_to, std::uint64_t seed)
{
    if (delta < 0.0)
        throw InvalidArgument("delta must be nonnegative");
    if (k >= actions.dim())
        throw InvalidArgument("component index out of range");
    TimeGrid const& grid = actions.grid();
    if (actions.nodes() != grid.steps + 1)
        throw InvalidArgument("occupation_time needs every grid node recorded");
    if (!up_to.empty() && up_to.size() != actions.n_paths())
        throw DimensionMismatch("one stopping time per path is required");

    OccupationReport report;
    report.per_path.assign(actions.n_paths(), 0.0);
    double const horizon = grid.time(grid.steps);
    for (std::size_t p = 0; p < actions.n_paths(); ++p)
    {
        double const stop = up_to.empty() ? horizon : up_to[p];
        double acc = 0.0;
        for (std::size_t i = 0; i < grid.steps && grid.time(i) < stop; ++i)
        {
            if (actions.at(p, i, k) <= delta)
                acc += grid.dtau;
        }
        report.per_path[p] = acc;
    }
    BootstrapOptions boot;
    boot.seed = seed;
    MeanInterval m = bootstrap_mean(report.per_path, boot);
    report.estimate = m.mean;
    report.ci_lo = m.ci_lo;
    report.ci_hi = m.ci_hi;
    return report;
}

void write_segments_csv(std::ostream& os, SegmentSchedule const& schedule)
{
    os << "path,seg_index,kind,start_time,end_time\n";
    for (std::size_t p = 0; p < schedule.paths.size(); ++p)
    {
        auto const& segs = schedule.paths[p];
        for (std::size_t i = 0; i < segs.size(); ++i)
        {
            os << p << ',' << i << ','
               << (segs[i].kind == SegmentKind::Lambda ? "Lambda" : "Delta") << ','
               << format_double(segs[i].start * schedule.dtau) << ','
               << format_double(segs[i].end * schedule.dtau) << '\n';
        }
    }
}

}  // namespace stochavg
