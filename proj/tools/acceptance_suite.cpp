#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "app.hpp"
#include "stochavg/coupling.hpp"
#include "stochavg/hamiltonian.hpp"
#include "stochavg/stats.hpp"

namespace fs = std::filesystem;

namespace stochavg::app {

namespace {

std::string fmt(double x)
{
    std::ostringstream os;
    os.precision(4);
    os << x;
    return os.str();
}

double median(std::vector<double> xs)
{
    std::sort(xs.begin(), xs.end());
    std::size_t const m = xs.size() / 2;
    return xs.size() % 2 ? xs[m] : 0.5 * (xs[m - 1] + xs[m]);
}

// Random monomial sum of total degree <= max_degree in v and conj(v).
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

ComplexVec random_state(RandomStream& rng, std::size_t n)
{
    ComplexVec v(n);
    for (auto& z : v)
        z = Complex{rng.gaussian(), rng.gaussian()};
    return v;
}

double max_diff(ComplexVec const& a, ComplexVec const& b)
{
    double m = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k)
        m = std::max(m, std::abs(a[k] - b[k]));
    return m;
}

double max_diff(HermitianMatrix const& a, HermitianMatrix const& b)
{
    return (a.matrix() - b.matrix()).cwiseAbs().maxCoeff();
}

std::vector<double> lambdas_for(std::size_t n)
{
    std::vector<double> const all = {1.0, std::sqrt(2.0), std::sqrt(3.0)};
    return {all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n)};
}

//---------------------------------------------------------------------------//

CriterionResult closed_form_averaging()
{
    CriterionResult r{1, "closed-form averaging of constant dispersion", false, ""};
    DispersionExprs psi{2, 2,
                        {parse_field_expr("1", 2), parse_field_expr("0", 2),
                         parse_field_expr("0", 2), parse_field_expr("2", 2)}};
    HermitianMatrix const a_ref = HermitianMatrix::diagonal({1.0, 4.0});
    HermitianMatrix const b_ref = HermitianMatrix::diagonal({1.0, 2.0});
    ComplexVec const a{Complex{0.3, -0.7}, Complex{1.1, 0.4}};

    HermitianMatrix const a_sym = averaged_diffusion(psi, a, AveragingMethod::symbolic());
    HermitianMatrix const a_quad = averaged_diffusion(psi, a, AveragingMethod::quadrature(64));
    double const e_a_sym = max_diff(a_sym, a_ref);
    double const e_a_quad = max_diff(a_quad, a_ref);
    double const e_b_sym = max_diff(principal_sqrt(a_sym).root, b_ref);
    double const e_b_quad = max_diff(principal_sqrt(a_quad).root, b_ref);
    r.pass = e_a_sym <= 1e-12 && e_b_sym <= 1e-12 && e_a_quad <= 1e-9 && e_b_quad <= 1e-9;
    r.detail = "|A-diag(1,4)| sym " + fmt(e_a_sym) + " quad " + fmt(e_a_quad) + "; |B-diag(1,2)| sym "
               + fmt(e_b_sym) + " quad " + fmt(e_b_quad);
    return r;
}

CriterionResult backend_equivalence(std::uint64_t seed)
{
    CriterionResult r{2, "symbolic and quadrature averages agree", false, ""};
    RandomStream rng(seed, 0, 21);
    double worst_f = 0.0, worst_p = 0.0, worst_a = 0.0, worst_h = 0.0;
    AveragingMethod const sym = AveragingMethod::symbolic();
    AveragingMethod const quad = AveragingMethod::quadrature(16);
    for (int s = 0; s < 50; ++s)
    {
        std::size_t const n = 1 + rng.index(3);
        std::size_t const n1 = 1 + rng.index(2);
        FieldExpr const f = to_field_expr(random_poly(rng, n, 4, 5));
        std::vector<FieldExpr> p;
        for (std::size_t k = 0; k < n; ++k)
            p.push_back(to_field_expr(random_poly(rng, n, 4, 4)));
        DispersionExprs psi{n, n1, {}};
        for (std::size_t e = 0; e < n * n1; ++e)
            psi.entries.push_back(to_field_expr(random_poly(rng, n, 2, 2)));
        Poly const hp = random_poly(rng, n, 2, 3);
        HamiltonianSpec const h(to_field_expr(hp + hp.conj()), n);
        for (int i = 0; i < 8; ++i)
        {
            ComplexVec const a = random_state(rng, n);
            worst_f = std::max(worst_f, std::abs(average_function(f, a, sym)
                                                 - average_function(f, a, quad)));
            worst_p = std::max(worst_p, max_diff(average_field(p, a, sym), average_field(p, a, quad)));
            worst_a = std::max(worst_a, max_diff(averaged_diffusion(psi, a, sym),
                                                 averaged_diffusion(psi, a, quad)));
            worst_h = std::max(worst_h, std::abs(averaged_hamiltonian(h, a, sym)
                                                 - averaged_hamiltonian(h, a, quad)));
        }
    }
    double const worst = std::max({worst_f, worst_p, worst_a, worst_h});
    r.pass = worst <= 1e-9;
    r.detail = "max |sym - quad|: <f> " + fmt(worst_f) + ", <<P>> " + fmt(worst_p) + ", A "
               + fmt(worst_a) + ", <h> " + fmt(worst_h);
    return r;
}

CriterionResult hamiltonian_null(std::uint64_t seed)
{
    CriterionResult r{3, "hamiltonian part does not move the actions", false, ""};
    RandomStream rng(seed, 0, 22);
    double residual = 0.0;
    for (int s = 0; s < 64; ++s)
    {
        std::size_t const n = 1 + rng.index(3);
        Poly const hp = random_poly(rng, n, 4, 4);
        HamiltonianSpec const h(to_field_expr(hp + hp.conj()), n);
        for (double x : orthogonality_residual(h, random_state(rng, n)))
            residual = std::max(residual, std::abs(x));
    }

    double drift_gap = 0.0;
    for (int s = 0; s < 16; ++s)
    {
        std::size_t const n = 2 + rng.index(2);
        Poly const hp = random_poly(rng, n, 4, 4);
        SystemSpec::Params params;
        params.lambdas = lambdas_for(n);
        params.epsilon = 0.1;
        for (std::size_t k = 0; k < n; ++k)
            params.p1.push_back(to_field_expr(random_poly(rng, n, 3, 3)));
        params.h = to_field_expr(hp + hp.conj());
        params.psi = DispersionExprs{n, n, {}};
        for (std::size_t k = 0; k < n; ++k)
            for (std::size_t l = 0; l < n; ++l)
                params.psi.entries.push_back(parse_field_expr(k == l ? "1" : "0", n));
        params.psi_kind = PsiKind::Constant;
        SystemSpec const spec = SystemSpec::create(params);
        std::vector<double> I(n);
        for (auto& x : I)
            x = 2.0 * rng.uniform();
        ActionVector const actions(I);
        for (auto method : {AveragingMethod::symbolic(), AveragingMethod::quadrature(12)})
        {
            auto const with = action_drift_F(spec, actions, method, true);
            auto const without = action_drift_F(spec, actions, method, false);
            for (std::size_t k = 0; k < n; ++k)
                drift_gap = std::max(drift_gap, std::abs(with[k] - without[k]));
        }
    }
    r.pass = residual <= 1e-9 && drift_gap <= 1e-9;
    r.detail = "max orthogonality residual " + fmt(residual) + ", max |F(P1+P2) - F(P1)| (symbolic, quadrature) "
               + fmt(drift_gap);
    return r;
}

CriterionResult ito_order(SystemConfig const& config, std::uint64_t seed)
{
    CriterionResult r{4, "Ito action equation converges with order 1/2", false, ""};
    SystemSpec const spec = config.system.with_epsilon(0.05);
    ComplexVec const v0(spec.n(), Complex{1.0, 0.0});
    int const levels = 4;
    std::vector<std::vector<double>> ratios(levels - 1);
    for (std::uint64_t s = 0; s < 16; ++s)
    {
        auto const reports = ito_refinement(spec, v0, 1.0, 0.01, levels, splitmix64(seed + s));
        for (int i = 0; i + 1 < levels; ++i)
            ratios[i].push_back(reports[i].sup_error / reports[i + 1].sup_error);
    }
    r.pass = true;
    r.detail = "median error ratio per halving:";
    for (auto const& rs : ratios)
    {
        double const m = median(rs);
        r.pass = r.pass && m >= 1.2 && m <= 1.7;
        r.detail += " " + fmt(m);
    }
    return r;
}

struct ConvergenceRun
{
    std::vector<ConvergenceRow> rows;
    ConvergenceRow const& at(double eps, double time, std::string const& metric) const
    {
        for (auto const& row : rows)
            if (row.eps == eps && row.time == time && row.metric == metric)
                return row;
        throw Error("missing convergence row");
    }
};

CriterionResult convergence_trend(ConvergenceRun const& run, std::vector<double> const& eps)
{
    CriterionResult r{5, "action laws converge as eps decreases (tau = 1)", false, ""};
    std::vector<DistanceReport> reps;
    for (double e : eps)
        reps.push_back(run.at(e, 1.0, "bl_action").report);
    bool decreasing = true;
    for (std::size_t i = 1; i < reps.size(); ++i)
        decreasing = decreasing && reps[i].estimate < reps[i - 1].estimate;
    bool const separated = reps.front().ci_lo > reps.back().ci_hi;
    bool const small = reps.back().estimate < 2.0 * reps.back().noise_floor;
    r.pass = decreasing && separated && small;
    r.detail = "d =";
    for (std::size_t i = 0; i < reps.size(); ++i)
        r.detail += " " + fmt(reps[i].estimate) + " [" + fmt(reps[i].ci_lo) + ", "
                    + fmt(reps[i].ci_hi) + "]";
    r.detail += "; noise floor " + fmt(reps.back().noise_floor) + "; decreasing "
                + (decreasing ? "yes" : "no") + ", CI-separated " + (separated ? "yes" : "no");
    return r;
}

CriterionResult uniform_in_time(ConvergenceRun const& run, double eps,
                                std::vector<double> const& times)
{
    CriterionResult r{6, "uniform-in-time closeness at the smallest eps", false, ""};
    r.pass = true;
    r.detail = "d / noise floor at tau";
    for (double t : times)
    {
        DistanceReport const& rep = run.at(eps, t, "bl_action").report;
        double const ratio = rep.estimate / rep.noise_floor;
        r.pass = r.pass && ratio < 3.0;
        r.detail += " " + fmt(t) + ": " + fmt(ratio);
    }
    return r;
}

CriterionResult modified_equation(SystemConfig const& config, std::size_t paths, std::uint64_t seed)
{
    CriterionResult r{7, "modified effective equation gives the same action laws", false, ""};
    SystemSpec const& spec = config.system;
    ComplexVec const v0(spec.n(), Complex{1.0, 0.0});
    SimOptions o{10.0, 0.005, paths, seed, {1.0, 4.0, 10.0}};
    StateEnsemble const full = simulate_effective(spec, Variant::Full, v0, o);
    o.seed = splitmix64(seed ^ 0x7);
    StateEnsemble const modified = simulate_effective(spec, Variant::Modified, v0, o);

    r.pass = true;
    for (double t : {1.0, 4.0})
    {
        BootstrapOptions boot;
        boot.seed = seed;
        DistanceReport const d = bl_distance(action_law(full, full.node_at(t)),
                                             action_law(modified, modified.node_at(t)), seed, boot);
        bool const ok = d.estimate < 2.0 * d.noise_floor;
        r.pass = r.pass && ok;
        r.detail += "tau " + fmt(t) + ": d " + fmt(d.estimate) + " floor " + fmt(d.noise_floor)
                    + "; ";
    }
    std::size_t const last = modified.node_at(10.0);
    double const crit = ks_critical_value(paths, 0.01);
    for (std::size_t k = 0; k < spec.n(); ++k)
    {
        std::vector<double> I(paths);
        for (std::size_t p = 0; p < paths; ++p)
            I[p] = action_of(modified.at(p, last, k));
        double mean = 0.0;
        for (double x : I)
            mean += x;
        mean /= static_cast<double>(paths);
        double var = 0.0;
        for (double x : I)
            var += (x - mean) * (x - mean);
        double const se = std::sqrt(var / static_cast<double>(paths - 1) / static_cast<double>(paths));
        double const ks = ks_statistic(I, [](double x) { return x <= 0.0 ? 0.0 : 1.0 - std::exp(-2.0 * x); });
        bool const ok = std::abs(mean - 0.5) <= 3.0 * se && ks < crit;
        r.pass = r.pass && ok;
        r.detail += "I" + std::to_string(k + 1) + " mean " + fmt(mean) + " (se " + fmt(se) + "), KS "
                    + fmt(ks) + " < " + fmt(crit) + "; ";
    }
    return r;
}

CriterionResult action_sde_weak(SystemConfig const& config, std::size_t paths, std::uint64_t seed)
{
    CriterionResult r{8, "effective amplitudes and action SDE give the same action laws", false, ""};
    SystemSpec const& spec = config.system;
    ActionVector const I0({0.5, 0.5});
    ComplexVec const v0 = amplitudes_from_actions(I0);
    SimOptions o{1.0, 0.005, paths, seed, {0.5, 1.0}};
    StateEnsemble const eff = simulate_effective(spec, Variant::Full, v0, o);
    o.seed = splitmix64(seed ^ 0x8);
    ActionSdeResult const act = simulate_action_sde(spec, I0, o);
    r.pass = true;
    for (double t : {0.5, 1.0})
    {
        BootstrapOptions boot;
        boot.seed = seed;
        DistanceReport const d = bl_distance(action_law(eff, eff.node_at(t)),
                                             action_law(act.paths, act.paths.node_at(t)), seed, boot);
        r.pass = r.pass && d.estimate < 2.0 * d.noise_floor;
        r.detail += "tau " + fmt(t) + ": d " + fmt(d.estimate) + " floor " + fmt(d.noise_floor)
                    + "; ";
    }
    return r;
}

CriterionResult occupation_decay(SystemConfig const& config, std::size_t paths, std::uint64_t seed)
{
    CriterionResult r{9, "occupation time near the boundary shrinks with delta", false, ""};
    SystemSpec const& spec = config.system;
    ComplexVec const v0(spec.n(), Complex{1.0, 0.0});
    std::vector<double> const deltas = {0.2, 0.1, 0.05, 0.025};
    SimOptions const o{4.0, 0.01, paths, seed, {}};
    CoupledResult const c = build_coupled(spec, v0, o, CouplingOptions{0.1, 50.0});
    ActionEnsemble const ref = c.reference.actions();
    r.pass = true;
    for (std::size_t k = 0; k < spec.n(); ++k)
    {
        std::vector<double> occ;
        for (double d : deltas)
            occ.push_back(occupation_time(ref, d, k, c.tau_R, seed).estimate);
        bool decreasing = true;
        for (std::size_t i = 1; i < occ.size(); ++i)
            decreasing = decreasing && occ[i] < occ[i - 1];
        r.pass = r.pass && decreasing && occ.back() < 0.5 * occ.front();
        r.detail += "k=" + std::to_string(k + 1) + ":";
        for (double x : occ)
            r.detail += " " + fmt(x);
        r.detail += "; ";
    }
    return r;
}

CriterionResult coupling_exactness(SystemConfig const& config, std::size_t paths,
                                   std::uint64_t seed)
{
    CriterionResult r{10, "coupled actions equal the reference on Delta segments", false, ""};
    SystemSpec const& spec = config.system;
    ComplexVec const v0(spec.n(), Complex{1.0, 0.0});
    SimOptions const o{4.0, 0.01, paths, seed, {}};
    r.pass = true;
    for (double delta : {0.2, 0.1, 0.05})
    {
        CoupledResult const c = build_coupled(spec, v0, o, CouplingOptions{delta, 50.0});
        bool const tiles = c.schedule.tiles();
        std::size_t delta_nodes = 0, mismatches = 0;
        for (std::size_t p = 0; p < paths; ++p)
        {
            for (auto const& s : c.schedule.paths[p])
            {
                if (s.kind != SegmentKind::Delta)
                    continue;
                for (std::size_t j = s.start; j <= s.end; ++j)
                {
                    ++delta_nodes;
                    for (std::size_t k = 0; k < spec.n(); ++k)
                        if (c.coupled.modulus.at(p, j, k) != c.reference.modulus.at(p, j, k))
                            ++mismatches;
                }
            }
        }
        r.pass = r.pass && tiles && mismatches == 0 && delta_nodes > 0;
        r.detail += "delta " + fmt(delta) + ": tiles " + (tiles ? "yes" : "no") + ", "
                    + std::to_string(delta_nodes) + " Delta nodes, " + std::to_string(mismatches)
                    + " mismatches; ";
    }
    return r;
}

//---------------------------------------------------------------------------//
// Determinism through the CLI pipelines
//---------------------------------------------------------------------------//

std::map<std::string, std::string> csv_files(fs::path const& dir)
{
    std::map<std::string, std::string> out;
    for (auto const& entry : fs::recursive_directory_iterator(dir))
    {
        if (entry.path().extension() != ".csv")
            continue;
        std::ifstream is(entry.path(), std::ios::binary);
        std::ostringstream ss;
        ss << is.rdbuf();
        out[fs::relative(entry.path(), dir).string()] = ss.str();
    }
    return out;
}

// Largest relative difference between numeric cells; infinity on structural mismatch.
double numeric_gap(std::string const& a, std::string const& b)
{
    auto cells = [](std::string const& s) {
        std::vector<std::string> out;
        std::string cell;
        for (char c : s)
        {
            if (c == ',' || c == '\n')
            {
                out.push_back(cell);
                cell.clear();
            }
            else
            {
                cell += c;
            }
        }
        return out;
    };
    auto const ca = cells(a), cb = cells(b);
    if (ca.size() != cb.size())
        return std::numeric_limits<double>::infinity();
    double gap = 0.0;
    for (std::size_t i = 0; i < ca.size(); ++i)
    {
        if (ca[i] == cb[i])
            continue;
        char* ea = nullptr;
        char* eb = nullptr;
        double const x = std::strtod(ca[i].c_str(), &ea);
        double const y = std::strtod(cb[i].c_str(), &eb);
        if (*ea != '\0' || *eb != '\0' || ca[i].empty())
            return std::numeric_limits<double>::infinity();
        gap = std::max(gap, std::abs(x - y) / std::max(1.0, std::abs(x)));
    }
    return gap;
}

CriterionResult determinism(SystemConfig const& config, std::uint64_t seed, fs::path const& scratch)
{
    CriterionResult r{11, "runs are reproducible and thread-count independent", false, ""};
    struct Pipeline
    {
        std::string subcommand;
        std::map<std::string, std::string> overrides;
    };
    std::vector<Pipeline> const pipelines = {
        {"compare", {{"paths", "400"}, {"eps_list", "0.2, 0.05"}}},
        {"couple-demo", {{"paths", "200"}, {"delta_list", "0.2, 0.05"}, {"T", "2"}}},
        {"mixing", {{"paths", "400"}, {"mixing_times", "0.5, 2"}}},
        {"simulate", {{"paths", "50"}, {"kind", "perturbed"}, {"record_times", "0.5, 1"}}},
        {"simulate", {{"paths", "200"}, {"kind", "action"}, {"record_times", "0.5, 1"}}},
    };
    std::ostringstream sink;
    auto run = [&](Pipeline const& p, int threads, std::string const& tag) {
        RunRequest req;
        req.subcommand = p.subcommand;
        req.config_path = "bundled";
        req.config_text = config.source_text;
        req.seed = seed;
        req.threads = threads;
        req.overrides = p.overrides;
        req.out_dir = (scratch / tag).string();
        fs::remove_all(req.out_dir);
        int const code = execute(req, sink, sink);
        if (code != exit_ok)
            throw Error(p.subcommand + " exited with " + std::to_string(code) + ": " + sink.str());
        return csv_files(req.out_dir);
    };

    bool identical = true;
    double gap = 0.0;
    std::size_t files = 0;
    for (std::size_t i = 0; i < pipelines.size(); ++i)
    {
        std::string const name = pipelines[i].subcommand + std::to_string(i);
        auto const a = run(pipelines[i], 1, name + "_t1a");
        auto const b = run(pipelines[i], 1, name + "_t1b");
        auto const c = run(pipelines[i], 4, name + "_t4");
        identical = identical && a == b;
        for (auto const& [file, content] : a)
        {
            ++files;
            auto it = c.find(file);
            gap = std::max(gap, it == c.end() ? std::numeric_limits<double>::infinity()
                                              : numeric_gap(content, it->second));
        }
    }
    set_thread_count(0);
    r.pass = identical && gap <= 1e-12 && files > 0;
    r.detail = std::to_string(files) + " CSV files; threads=1 reruns byte-identical "
               + (identical ? "yes" : "no") + "; max rel. gap threads=4 vs 1 " + fmt(gap);
    return r;
}

}  // namespace

std::vector<CriterionResult> run_acceptance_suite(SystemConfig const& config,
                                                  AcceptanceOptions const& opts, std::ostream& log)
{
    auto wanted = [&](int id) {
        return opts.only.empty() || std::find(opts.only.begin(), opts.only.end(), id) != opts.only.end();
    };
    std::vector<CriterionResult> results;
    auto record = [&](int id, std::string const& name, auto&& body) {
        if (!wanted(id))
            return;
        auto const start = std::chrono::steady_clock::now();
        CriterionResult r{id, name, false, ""};
        try
        {
            r = body();
        }
        catch (std::exception const& e)
        {
            r.pass = false;
            r.detail = std::string("exception: ") + e.what();
        }
        double const secs
            = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        r.detail += " (" + fmt(secs) + " s)";
        log << "criterion " << r.id << ": " << (r.pass ? "PASS" : "FAIL") << " - " << r.name
            << " | " << r.detail << std::endl;
        results.push_back(r);
    };

    std::uint64_t const seed = opts.seed;
    std::size_t const paths = opts.paths;
    record(1, "closed-form averaging", [&] { return closed_form_averaging(); });
    record(2, "backend equivalence", [&] { return backend_equivalence(seed); });
    record(3, "hamiltonian null contribution", [&] { return hamiltonian_null(seed); });
    record(4, "Ito consistency order", [&] { return ito_order(config, seed); });

    std::vector<double> const eps = {0.2, 0.05, 0.0125};
    std::vector<double> const times = {1.0, 2.0, 4.0, 8.0};
    std::optional<ConvergenceRun> conv;
    auto convergence = [&]() -> ConvergenceRun const& {
        if (!conv)
        {
            ConvergenceOptions co;
            co.eps_list = eps;
            co.times = times;
            co.n_paths = paths;
            co.dtau_effective = 0.005;
            co.dtau_factor = 0.2;
            co.seed = seed;
            ComplexVec const v0(config.system.n(), Complex{1.0, 0.0});
            conv = ConvergenceRun{convergence_table(config.system, v0, co)};
        }
        return *conv;
    };
    record(5, "convergence as eps -> 0", [&] { return convergence_trend(convergence(), eps); });
    record(6, "uniform-in-time convergence",
           [&] { return uniform_in_time(convergence(), eps.back(), times); });
    record(7, "modified effective equation", [&] { return modified_equation(config, paths, seed); });
    record(8, "action SDE weak solution", [&] { return action_sde_weak(config, paths, seed); });
    record(9, "occupation time", [&] { return occupation_decay(config, paths, seed); });
    record(10, "coupling exactness", [&] { return coupling_exactness(config, paths, seed); });
    record(11, "determinism", [&] {
        fs::create_directories(opts.scratch_dir);
        return determinism(config, seed, opts.scratch_dir);
    });
    return results;
}

}  // namespace stochavg::app
