#include "app.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "stochavg/coupling.hpp"
#include "stochavg/diagnostics.hpp"
#include "stochavg/hamiltonian.hpp"
#include "stochavg/stats.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace stochavg::app {

namespace {

/// Problems with the configuration or parameters (exit code 2).
class ConfigError : public Error
{
  public:
    using Error::Error;
};

/// Failed assertion under --strict (exit code 4).
class StrictFailure : public Error
{
  public:
    using Error::Error;
};

std::string hex(std::uint64_t x)
{
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << x;
    return os.str();
}

std::string join(std::vector<double> const& xs)
{
    std::string out;
    for (std::size_t i = 0; i < xs.size(); ++i)
        out += (i ? ", " : "") + format_double(xs[i]);
    return out;
}

std::string format_state(ComplexVec const& v)
{
    std::string out;
    for (std::size_t k = 0; k < v.size(); ++k)
    {
        out += k ? ", " : "";
        out += "(" + format_double(v[k].real()) + " + " + format_double(v[k].imag()) + "i)";
    }
    return out;
}

// Rename the state variables v_k to a_k in polynomial text.
std::string as_averaged_text(std::string text)
{
    for (std::size_t i = 0; i < text.size(); ++i)
    {
        bool const starts_token = i == 0 || !std::isalnum(static_cast<unsigned char>(text[i - 1]));
        if (text[i] == 'v' && starts_token)
            text[i] = 'a';
    }
    return text;
}

void write_file(fs::path const& path, std::string const& content)
{
    std::ofstream os(path, std::ios::binary);
    if (!os)
        throw Error("cannot write " + path.string());
    os << content;
}

std::string read_file(fs::path const& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is)
        throw ConfigError("cannot read " + path.string());
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

//---------------------------------------------------------------------------//
// Run context
//---------------------------------------------------------------------------//

struct Context
{
    RunRequest const& request;
    SystemConfig config;
    ExperimentParams params;
    std::uint64_t seed;
    fs::path out;
    std::ostream& log;
    json summary = json::object();

    SystemSpec const& spec() const { return config.system; }
    ComplexVec v0() const
    {
        ComplexVec fallback(spec().n(), Complex{1.0, 0.0});
        ComplexVec v = params.state("v0", fallback);
        if (v.size() != spec().n())
            throw ConfigError("v0 must have n components");
        return v;
    }
    SimOptions sim(double T_default) const
    {
        SimOptions o;
        o.T = params.real("T", T_default);
        o.dtau = params.real("dtau", 0.005);
        o.n_paths = params.count("paths", 1000);
        o.seed = seed;
        return o;
    }
    void strict_check(bool ok, std::string const& what)
    {
        summary["assertions"].push_back({{"name", what}, {"pass", ok}});
        if (!ok)
        {
            log << "ASSERTION FAILED: " << what << "\n";
            if (request.strict)
                throw StrictFailure(what);
        }
    }
};

//---------------------------------------------------------------------------//
// Subcommands
//---------------------------------------------------------------------------//

void cmd_check(Context& ctx)
{
    SystemSpec const& spec = ctx.spec();
    int const bound = static_cast<int>(ctx.params.count("order_bound", 6));
    double const tol = ctx.params.real("resonance_tol", 1e-9);
    ResonanceReport res = check_nonresonance(spec.freqs(), bound, tol);
    auto vec_text = [](std::vector<int> const& m) {
        std::string s = "(";
        for (std::size_t i = 0; i < m.size(); ++i)
            s += (i ? ", " : "") + std::to_string(m[i]);
        return s + ")";
    };
    ctx.log << "lambdas: " << join(spec.freqs().values()) << "\n";
    ctx.log << "non-resonance (order <= " << bound << ", tol " << format_double(tol) << "): "
            << (res.resonant ? "RESONANT" : "non-resonant") << "\n";
    if (res.witness)
        ctx.log << "  witness m = " << vec_text(*res.witness) << "\n";
    ctx.log << "  min |m.Lambda| = " << format_double(res.min_abs) << " at m = "
            << vec_text(res.argmin) << "\n";

    EllipticityReport ell = check_ellipticity(spec, 256, ctx.seed);
    ctx.log << "ellipticity: lambda_lower = " << format_double(ell.lambda_lower)
            << ", lambda_upper = " << format_double(ell.lambda_upper) << " -> "
            << (ell.pass ? "pass" : "fail") << "\n";

    json growth = json::array();
    for (std::size_t k = 0; k < spec.n(); ++k)
    {
        GrowthReport g = estimate_growth(spec.p1()[k], spec.m0(), {1, 2, 4, 8}, ctx.seed, spec.n());
        ctx.log << "growth P1_" << k + 1 << ": C_m0 ~ " << format_double(g.c_m0_estimate) << "\n";
        growth.push_back(g.c_m0_estimate);
    }

    double residual = 0.0;
    if (spec.h())
    {
        HamiltonianSpec h(*spec.h(), spec.n());
        RandomStream rng(ctx.seed, 0, 3);
        for (int s = 0; s < 64; ++s)
        {
            ComplexVec v(spec.n());
            for (auto& z : v)
                z = Complex{rng.gaussian(), rng.gaussian()};
            for (double r : orthogonality_residual(h, v))
                residual = std::max(residual, std::abs(r));
        }
        ctx.log << "hamiltonian orthogonality residual (64 states): " << format_double(residual)
                << "\n";
    }

    json report = {{"resonant", res.resonant},
                   {"witness", res.witness ? json(*res.witness) : json(nullptr)},
                   {"min_abs", res.min_abs},
                   {"argmin", res.argmin},
                   {"order_bound", bound},
                   {"tol", tol},
                   {"ellipticity",
                    {{"lambda_lower", ell.lambda_lower},
                     {"lambda_upper", ell.lambda_upper},
                     {"pass", ell.pass}}},
                   {"growth_c_m0", growth},
                   {"orthogonality_residual", residual}};
    write_file(ctx.out / "check.json", report.dump(2) + "\n");
    ctx.strict_check(!res.resonant, "frequencies are non-resonant");
    if (spec.psi_kind() == PsiKind::Elliptic)
        ctx.strict_check(ell.pass, "dispersion is elliptic on samples");
}

void cmd_check_hamiltonian(Context& ctx)
{
    SystemSpec const& spec = ctx.spec();
    if (!spec.h())
        throw ConfigError("config has no [hamiltonian] section");
    HamiltonianSpec h(*spec.h(), spec.n());
    std::size_t const samples = ctx.params.count("samples", 256);
    RandomStream rng(ctx.seed, 0, 3);
    double residual = 0.0;
    for (std::size_t s = 0; s < samples; ++s)
    {
        ComplexVec v(spec.n());
        for (auto& z : v)
            z = Complex{rng.gaussian(), rng.gaussian()};
        for (double r : orthogonality_residual(h, v))
            residual = std::max(residual, std::abs(r));
    }
    ctx.log << "max orthogonality residual over " << samples
            << " states: " << format_double(residual) << "\n";
    write_file(ctx.out / "check_hamiltonian.json",
               json{{"samples", samples}, {"max_residual", residual}}.dump(2) + "\n");
    ctx.strict_check(residual <= 1e-9, "orthogonality residual <= 1e-9");
}

void cmd_average(Context& ctx)
{
    SystemSpec const& spec = ctx.spec();
    std::ostringstream text;
    bool const polynomial = spec.is_polynomial();
    if (polynomial)
    {
        for (std::size_t k = 0; k < spec.n(); ++k)
        {
            Poly pk = spec.p1_poly()[k] + spec.p2_poly()[k];
            Poly avg = average_field_poly(pk, k);
            text << "component " << k + 1 << " = " << as_averaged_text(avg.to_string()) << "\n";
        }
        if (spec.h_poly())
            text << "<h> = " << as_averaged_text(average_poly(*spec.h_poly()).to_string()) << "\n";
        auto A = averaged_diffusion_poly(spec.psi_poly(), spec.n1());
        for (std::size_t k = 0; k < spec.n(); ++k)
            for (std::size_t l = 0; l < spec.n(); ++l)
                text << "A_" << k + 1 << "_" << l + 1 << " = "
                     << as_averaged_text(A[k * spec.n() + l].to_string()) << "\n";
    }
    else
    {
        text << "drift is not polynomial; symbolic averages unavailable\n";
    }
    if (ctx.params.has("point"))
    {
        ComplexVec a = ctx.params.state("point", {});
        if (a.size() != spec.n())
            throw ConfigError("point must have n components");
        AveragingMethod method = polynomial ? AveragingMethod::symbolic()
                                            : AveragingMethod::quadrature(64);
        AveragedSystem sys(spec, Variant::Full, method);
        ComplexVec d = sys.drift(a);
        text << "at a = " << format_state(a) << ":\n";
        for (std::size_t k = 0; k < spec.n(); ++k)
            text << "  <<P>>_" << k + 1 << " = " << format_double(d[k].real()) << " + "
                 << format_double(d[k].imag()) << "i\n";
        SqrtResult b = sys.dispersion(a);
        for (std::size_t k = 0; k < spec.n(); ++k)
        {
            text << "  B row " << k + 1 << ":";
            for (std::size_t l = 0; l < spec.n(); ++l)
                text << " " << format_double(b.root(k, l).real()) << "+"
                     << format_double(b.root(k, l).imag()) << "i";
            text << "\n";
        }
    }
    ctx.log << text.str();
    write_file(ctx.out / "average.txt", text.str());
}

void cmd_simulate(Context& ctx)
{
    SystemSpec const& spec = ctx.spec();
    std::string const kind = ctx.params.text("kind", "perturbed");
    SimOptions o = ctx.sim(1.0);
    o.record_times = ctx.params.reals("record_times", {});
    ComplexVec const v0 = ctx.v0();
    json meta;
    auto write_states = [&](StateEnsemble const& e, std::string const& name) {
        std::ofstream os(ctx.out / name, std::ios::binary);
        write_csv(os, e);
    };
    if (kind == "perturbed")
    {
        o.dtau = ctx.params.real("dtau", spec.epsilon() / 5.0);
        PerturbedEnsembles e = simulate_perturbed(spec, v0, o);
        write_states(e.v, "states_v.csv");
        write_states(e.a, "states_a.csv");
        MomentReport m = moment_diagnostic(e.v, spec.m0());
        meta["moments"] = {{"m", m.m}, {"sup_moment", m.sup_moment},
                           {"sup_moment_half", m.sup_moment_half}};
        ctx.log << "moment diagnostic m = " << m.m << ": sup E|v|^2m = "
                << format_double(m.sup_moment) << " (first half of paths "
                << format_double(m.sup_moment_half) << ")\n";
    }
    else if (kind == "effective" || kind == "modified")
    {
        Variant v = kind == "effective" ? Variant::Full : Variant::Modified;
        double R = ctx.params.real("R", std::numeric_limits<double>::infinity());
        CutoffEnsemble e = simulate_cutoff_effective(spec, v, v0, o, R);
        write_states(e.paths, "states_a.csv");
        std::size_t stopped = 0;
        for (double t : e.cutoff.tau_R)
            stopped += t < o.T ? 1 : 0;
        meta["cutoff"] = {{"R", R}, {"paths_stopped", stopped}};
    }
    else if (kind == "action")
    {
        ComplexVec I0v = ctx.params.state("I0", {});
        std::vector<double> I0;
        if (I0v.empty())
            I0 = ActionVector::from_state(v0).values();
        else
            for (Complex z : I0v)
                I0.push_back(z.real());
        ActionSdeResult r = simulate_action_sde(spec, ActionVector(I0), o);
        std::ofstream os(ctx.out / "actions.csv", std::ios::binary);
        write_csv(os, r.paths);
        std::size_t clamps = 0;
        for (std::size_t c : r.clamp_events)
            clamps += c;
        meta["clamp_events"] = clamps;
        meta["sqrt_clamps"] = r.sqrt_clamps;
    }
    else
    {
        throw ConfigError("unknown simulate kind '" + kind
                          + "' (perturbed|effective|modified|action)");
    }
    meta["kind"] = kind;
    meta["paths"] = o.n_paths;
    meta["T"] = o.T;
    meta["dtau"] = o.dtau;
    write_file(ctx.out / "simulate.json", meta.dump(2) + "\n");
    ctx.log << "simulated " << o.n_paths << " " << kind << " paths to T = " << format_double(o.T)
            << "\n";
}

void cmd_compare(Context& ctx)
{
    ConvergenceOptions opts;
    opts.eps_list = ctx.params.reals("eps_list", {0.2, 0.05, 0.0125});
    opts.times = ctx.params.reals("times", {1.0});
    opts.n_paths = ctx.params.count("paths", 4000);
    opts.dtau_effective = ctx.params.real("dtau", 0.005);
    opts.dtau_factor = ctx.params.real("dtau_factor", 0.2);
    opts.seed = ctx.seed;
    auto rows = convergence_table(ctx.spec(), ctx.v0(), opts);
    std::ostringstream csv;
    write_convergence_csv(csv, rows);
    write_file(ctx.out / "convergence.csv", csv.str());
    write_file(ctx.out / "convergence.json", convergence_json(rows) + "\n");
    ctx.log << csv.str();

    // Trend check on the joint metric at the first time.
    std::vector<ConvergenceRow const*> joint;
    for (auto const& r : rows)
        if (r.metric == "bl_action" && r.time == opts.times.front())
            joint.push_back(&r);
    bool decreasing = true;
    for (std::size_t i = 1; i < joint.size(); ++i)
        decreasing = decreasing && joint[i]->report.estimate < joint[i - 1]->report.estimate;
    ctx.strict_check(decreasing, "convergence distances strictly decreasing in eps");
    ctx.strict_check(joint.back()->report.estimate < 2.0 * joint.back()->report.noise_floor,
                     "final distance below 2x noise floor");
}

void cmd_couple_demo(Context& ctx)
{
    SystemSpec const& spec = ctx.spec();
    SimOptions o = ctx.sim(4.0);
    o.dtau = ctx.params.real("coupling_dtau", 0.01);
    double const R = ctx.params.real("R", 50.0);
    std::vector<double> deltas = ctx.params.reals("delta_list", {0.2, 0.1, 0.05, 0.025});
    std::vector<double> times = ctx.params.reals("coupling_times", {0.5, 1.0});
    ComplexVec const v0 = ctx.v0();

    std::ostringstream occ, dist, seg;
    occ << "delta,k,estimate,ci_lo,ci_hi\n";
    dist << "delta,time,estimate,ci_lo,ci_hi,noise_floor\n";
    bool exact = true, tiles = true;
    std::vector<double> occupation;
    for (std::size_t d = 0; d < deltas.size(); ++d)
    {
        double const delta = deltas[d];
        CoupledResult c = build_coupled(spec, v0, o, CouplingOptions{delta, R});
        tiles = tiles && c.schedule.tiles();
        for (std::size_t p = 0; p < o.n_paths; ++p)
        {
            for (auto const& s : c.schedule.paths[p])
            {
                if (s.kind != SegmentKind::Delta)
                    continue;
                for (std::size_t j = s.start; j <= s.end; ++j)
                    for (std::size_t k = 0; k < spec.n(); ++k)
                        exact = exact
                                && c.coupled.modulus.at(p, j, k) == c.reference.modulus.at(p, j, k);
            }
        }
        if (d == 0)
            write_segments_csv(seg, c.schedule);
        ActionEnsemble const ref = c.reference.actions();
        ActionEnsemble const cpl = c.coupled.actions();
        for (std::size_t k = 0; k < spec.n(); ++k)
        {
            OccupationReport r = occupation_time(ref, delta, k, c.tau_R, ctx.seed);
            occ << format_double(delta) << ',' << k + 1 << ',' << format_double(r.estimate) << ','
                << format_double(r.ci_lo) << ',' << format_double(r.ci_hi) << '\n';
            if (k == 0)
                occupation.push_back(r.estimate);
        }
        for (double t : times)
        {
            BootstrapOptions boot;
            boot.seed = ctx.seed;
            DistanceReport r = bl_distance(action_law(cpl, cpl.node_at(t)),
                                           action_law(ref, ref.node_at(t)), ctx.seed, boot);
            dist << format_double(delta) << ',' << format_double(t) << ','
                 << format_double(r.estimate) << ',' << format_double(r.ci_lo) << ','
                 << format_double(r.ci_hi) << ',' << format_double(r.noise_floor) << '\n';
        }
        ctx.log << "delta = " << format_double(delta) << ": " << c.schedule.segment_count()
                << " segments, occupation(k=1) = " << format_double(occupation.back()) << "\n";
    }
    write_file(ctx.out / "segments.csv", seg.str());
    write_file(ctx.out / "occupation.csv", occ.str());
    write_file(ctx.out / "coupling_distance.csv", dist.str());
    ctx.strict_check(tiles, "segment schedules tile [0, T]");
    ctx.strict_check(exact, "Delta-segment moduli equal the reference bitwise");
}

void cmd_mixing(Context& ctx)
{
    SystemSpec const& spec = ctx.spec();
    MixingOptions opts;
    opts.sim = ctx.sim(8.0);
    opts.times = ctx.params.reals("mixing_times", {0.5, 1, 2, 4, 8});
    opts.sim.T = *std::max_element(opts.times.begin(), opts.times.end());
    opts.seed2 = splitmix64(ctx.seed);
    opts.feature_seed = ctx.seed;
    ComplexVec v1 = ctx.params.state("mixing_v1", ctx.v0());
    ComplexVec v2 = ctx.params.state("mixing_v2", ctx.v0());
    if (v1.size() != spec.n() || v2.size() != spec.n())
        throw ConfigError("mixing_v1 and mixing_v2 must have n components");
    std::string const variant = ctx.params.text("variant", "full");
    auto reports = mixing_profile(spec, variant == "modified" ? Variant::Modified : Variant::Full,
                                  v1, v2, opts);
    std::ostringstream csv;
    csv << "time,estimate,ci_lo,ci_hi,noise_floor\n";
    for (std::size_t i = 0; i < reports.size(); ++i)
    {
        auto const& r = reports[i];
        csv << format_double(opts.times[i]) << ',' << format_double(r.estimate) << ','
            << format_double(r.ci_lo) << ',' << format_double(r.ci_hi) << ','
            << format_double(r.noise_floor) << '\n';
    }
    write_file(ctx.out / "mixing.csv", csv.str());
    ctx.log << csv.str();
    auto const& last = reports.back();
    ctx.strict_check(last.estimate < 2.0 * last.noise_floor,
                     "mixing profile below 2x noise floor at the last time");
}

void cmd_acceptance(Context& ctx)
{
    AcceptanceOptions opts;
    opts.seed = ctx.request.seed.value_or(opts.seed);
    opts.paths = ctx.params.count("paths", 4000);
    opts.scratch_dir = (ctx.out / "scratch").string();
    auto results = run_acceptance_suite(ctx.config, opts, ctx.log);
    json arr = json::array();
    std::ostringstream txt;
    bool all = true;
    for (auto const& r : results)
    {
        arr.push_back({{"criterion", r.id}, {"name", r.name}, {"pass", r.pass},
                       {"detail", r.detail}});
        txt << "criterion " << r.id << " " << (r.pass ? "PASS" : "FAIL") << " " << r.name
            << " | " << r.detail << "\n";
        all = all && r.pass;
    }
    write_file(ctx.out / "acceptance.json", arr.dump(2) + "\n");
    write_file(ctx.out / "acceptance.txt", txt.str());
    ctx.strict_check(all, "all acceptance criteria pass");
}

using Handler = void (*)(Context&);

Handler handler_for(std::string const& name)
{
    static std::map<std::string, Handler> const table = {
        {"check", cmd_check},
        {"check-hamiltonian", cmd_check_hamiltonian},
        {"average", cmd_average},
        {"simulate", cmd_simulate},
        {"compare", cmd_compare},
        {"couple-demo", cmd_couple_demo},
        {"mixing", cmd_mixing},
        {"acceptance", cmd_acceptance},
    };
    auto it = table.find(name);
    if (it == table.end())
        throw ConfigError("unknown subcommand '" + name + "'");
    return it->second;
}

json manifest_of(RunRequest const& r, std::uint64_t seed)
{
    return json{{"tool", "stochavg"},
                {"version", version},
                {"subcommand", r.subcommand},
                {"config_path", r.config_path},
                {"config_hash", hex(fnv1a(r.config_text))},
                {"config_text", r.config_text},
                {"seed", seed},
                {"threads", r.threads},
                {"strict", r.strict},
                {"overrides", r.overrides}};
}

RunRequest request_from_manifest(json const& m)
{
    RunRequest r;
    r.subcommand = m.at("subcommand").get<std::string>();
    r.config_path = m.value("config_path", "");
    r.config_text = m.at("config_text").get<std::string>();
    r.seed = m.at("seed").get<std::uint64_t>();
    r.threads = m.value("threads", 1);
    r.strict = m.value("strict", false);
    r.overrides = m.value("overrides", std::map<std::string, std::string>{});
    if (hex(fnv1a(r.config_text)) != m.value("config_hash", ""))
        throw ConfigError("manifest config_hash does not match its config_text");
    return r;
}

}  // namespace

//---------------------------------------------------------------------------//

ExperimentParams::ExperimentParams(std::map<std::string, std::string> experiment,
                                   std::map<std::string, std::string> const& overrides)
    : values_(std::move(experiment))
{
    for (auto const& [k, v] : overrides)
        values_[k] = v;
}

std::string ExperimentParams::text(std::string const& key, std::string const& fallback) const
{
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
}

double ExperimentParams::real(std::string const& key, double fallback) const
{
    auto it = values_.find(key);
    if (it == values_.end())
        return fallback;
    auto xs = reals(key, {});
    if (xs.size() != 1)
        throw ConfigError("experiment key '" + key + "' must be a single number");
    return xs[0];
}

std::size_t ExperimentParams::count(std::string const& key, std::size_t fallback) const
{
    auto it = values_.find(key);
    if (it == values_.end())
        return fallback;
    double x = real(key, 0.0);
    if (!(x >= 1.0) || x != std::floor(x))
        throw ConfigError("experiment key '" + key + "' must be a positive integer");
    return static_cast<std::size_t>(x);
}

std::uint64_t ExperimentParams::u64(std::string const& key, std::uint64_t fallback) const
{
    auto it = values_.find(key);
    if (it == values_.end())
        return fallback;
    try
    {
        std::size_t used = 0;
        std::uint64_t v = std::stoull(it->second, &used);
        if (used != it->second.size())
            throw ConfigError("");
        return v;
    }
    catch (std::exception const&)
    {
        throw ConfigError("experiment key '" + key + "' must be an unsigned integer");
    }
}

std::vector<double> ExperimentParams::reals(std::string const& key,
                                            std::vector<double> const& fallback) const
{
    auto it = values_.find(key);
    if (it == values_.end())
        return fallback;
    try
    {
        return parse_real_list(it->second);
    }
    catch (Error const& e)
    {
        throw ConfigError("experiment key '" + key + "': " + e.what());
    }
}

ComplexVec ExperimentParams::state(std::string const& key, ComplexVec const& fallback) const
{
    auto it = values_.find(key);
    if (it == values_.end())
        return fallback;
    try
    {
        return parse_complex_list(it->second);
    }
    catch (Error const& e)
    {
        throw ConfigError("experiment key '" + key + "': " + e.what());
    }
}

int execute(RunRequest const& request, std::ostream& out, std::ostream& err)
{
    try
    {
        Handler handler = handler_for(request.subcommand);
        SystemConfig config = [&] {
            try
            {
                return parse_system_config(request.config_text);
            }
            catch (Error const& e)
            {
                throw ConfigError(std::string("config: ") + e.what());
            }
        }();
        ExperimentParams params(config.experiment, request.overrides);
        std::uint64_t const seed = request.seed ? *request.seed : params.u64("seed", 0);
        set_thread_count(request.threads);
        fs::path const dir = request.out_dir.empty() ? fs::path("run") : fs::path(request.out_dir);
        fs::create_directories(dir);
        write_file(dir / "manifest.json", manifest_of(request, seed).dump(2) + "\n");
        Context ctx{request, std::move(config), std::move(params), seed, dir, out};
        handler(ctx);
        return exit_ok;
    }
    catch (StrictFailure const& e)
    {
        err << "strict: " << e.what() << "\n";
        return exit_strict;
    }
    catch (NonFinite const& e)
    {
        err << "error: " << e.what() << "\n";
        return exit_non_finite;
    }
    catch (ConfigError const& e)
    {
        err << "error: " << e.what() << "\n";
        return exit_config;
    }
    catch (ParseError const& e)
    {
        err << "error: " << e.what() << "\n";
        return exit_config;
    }
    catch (InvalidArgument const& e)
    {
        err << "error: " << e.what() << "\n";
        return exit_config;
    }
    catch (DimensionMismatch const& e)
    {
        err << "error: " << e.what() << "\n";
        return exit_config;
    }
    catch (StepTooLarge const& e)
    {
        err << "error: " << e.what() << "\n";
        return exit_config;
    }
    catch (std::exception const& e)
    {
        err << "error: " << e.what() << "\n";
        return exit_error;
    }
}

int emit_plot_data(std::string const& run_dir, std::ostream& err)
{
    fs::path const dir(run_dir);
    std::ostringstream out;
    out << "series,x,y,lo,hi\n";
    bool any = false;
    auto rows_of = [&](fs::path const& file) {
        std::vector<std::vector<std::string>> rows;
        if (!fs::exists(file))
            return rows;
        std::istringstream is(read_file(file));
        std::string line;
        std::getline(is, line);  // header
        while (std::getline(is, line))
        {
            std::vector<std::string> cells;
            std::stringstream ls(line);
            std::string cell;
            while (std::getline(ls, cell, ','))
                cells.push_back(cell);
            if (cells.size() >= 5)
                rows.push_back(std::move(cells));
        }
        return rows;
    };
    // eps,time,metric,estimate,ci_lo,ci_hi,noise_floor
    for (auto const& r : rows_of(dir / "convergence.csv"))
    {
        if (r.size() < 7)
            continue;
        out << "convergence_" << r[2] << "_t=" << r[1] << ',' << r[0] << ',' << r[3] << ',' << r[4]
            << ',' << r[5] << '\n';
        out << "noise_floor_" << r[2] << "_t=" << r[1] << ',' << r[0] << ',' << r[6] << ','
            << r[6] << ',' << r[6] << '\n';
        any = true;
    }
    // time,estimate,ci_lo,ci_hi,noise_floor
    for (auto const& r : rows_of(dir / "mixing.csv"))
    {
        out << "mixing," << r[0] << ',' << r[1] << ',' << r[2] << ',' << r[3] << '\n';
        out << "mixing_noise_floor," << r[0] << ',' << r[4] << ',' << r[4] << ',' << r[4] << '\n';
        any = true;
    }
    // delta,k,estimate,ci_lo,ci_hi
    for (auto const& r : rows_of(dir / "occupation.csv"))
    {
        out << "occupation_k=" << r[1] << ',' << r[0] << ',' << r[2] << ',' << r[3] << ',' << r[4]
            << '\n';
        any = true;
    }
    // delta,time,estimate,ci_lo,ci_hi,noise_floor
    for (auto const& r : rows_of(dir / "coupling_distance.csv"))
    {
        out << "coupling_t=" << r[1] << ',' << r[0] << ',' << r[2] << ',' << r[3] << ',' << r[4]
            << '\n';
        any = true;
    }
    // path,seg_index,kind,start_time,end_time: one row per segment, y = kind.
    for (auto const& r : rows_of(dir / "segments.csv"))
    {
        std::string const y = r[2] == "Delta" ? "1" : "0";
        out << "segments_path=" << r[0] << ',' << r[3] << ',' << y << ',' << r[3] << ',' << r[4]
            << '\n';
        any = true;
    }
    if (!any)
    {
        err << "error: no plottable artifacts in " << run_dir << "\n";
        return exit_config;
    }
    write_file(dir / "plot_data.csv", out.str());
    return exit_ok;
}

int run_cli(std::vector<std::string> const& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Averaging and effective equations for stochastic perturbations of linear systems",
                 "stochavg"};
    app.set_version_flag("--version", version);
    app.require_subcommand(1);
    app.fallthrough();

    RunRequest request;
    std::uint64_t seed = 0;
    std::vector<std::string> sets;
    app.add_option("--config", request.config_path, "system configuration file");
    app.add_option("--out", request.out_dir, "output directory");
    auto* seed_opt = app.add_option("--seed", seed, "master seed (U64)");
    app.add_option("--threads", request.threads, "worker threads, 0 = all cores, 1 = reference")
        ->check(CLI::NonNegativeNumber);
    app.add_flag("--strict", request.strict, "exit 4 when an assertion fails");
    app.add_option("--set", sets, "override an [experiment] key, key=value");

    std::vector<std::pair<std::string, std::string>> const names = {
        {"check", "non-resonance, ellipticity, growth and orthogonality diagnostics"},
        {"check-hamiltonian", "hamiltonian field and averaged hamiltonian diagnostics"},
        {"average", "symbolic averages of the drift, hamiltonian and diffusion"},
        {"simulate", "path ensembles of one of the stochastic systems"},
        {"compare", "action-law distances across the eps list"},
        {"couple-demo", "coupled process, segment schedules and occupation times"},
        {"mixing", "distance between the laws started at two initial states"},
        {"acceptance", "run the acceptance criteria"}};
    std::string point, kind;
    for (auto const& [name, description] : names)
    {
        auto* sub = app.add_subcommand(name, description);
        if (name == "average")
            sub->add_option("--point", point, "evaluate the averages at a, e.g. \"1, 0.5*i\"");
        if (name == "simulate")
            sub->add_option("--kind", kind, "perturbed | effective | modified | action");
    }
    std::string manifest_path;
    auto* replay = app.add_subcommand("replay", "re-run a manifest.json");
    replay->add_option("--manifest", manifest_path)->required();
    std::string plot_dir;
    auto* plot = app.add_subcommand("plot-data", "tidy series,x,y,lo,hi table from a run");
    plot->add_option("--run", plot_dir, "run directory (defaults to --out)");

    std::vector<std::string> argv(args.rbegin(), args.rend());
    if (!argv.empty())
        argv.pop_back();  // program name
    try
    {
        app.parse(argv);
    }
    catch (CLI::CallForHelp const&)
    {
        out << app.help();
        return exit_ok;
    }
    catch (CLI::CallForVersion const&)
    {
        out << version << "\n";
        return exit_ok;
    }
    catch (CLI::ParseError const& e)
    {
        err << "error: " << e.what() << "\n";
        return exit_config;
    }

    auto* chosen = app.get_subcommands().front();
    std::string const name = chosen->get_name();
    if (name == "plot-data")
        return emit_plot_data(plot_dir.empty() ? request.out_dir : plot_dir, err);

    if (name == "replay")
    {
        try
        {
            RunRequest r = request_from_manifest(json::parse(read_file(manifest_path)));
            r.out_dir = request.out_dir.empty()
                            ? (fs::path(manifest_path).parent_path() / "replay").string()
                            : request.out_dir;
            return execute(r, out, err);
        }
        catch (std::exception const& e)
        {
            err << "error: " << e.what() << "\n";
            return exit_config;
        }
    }

    request.subcommand = name;
    if (*seed_opt)
        request.seed = seed;
    for (auto const& s : sets)
    {
        auto eq = s.find('=');
        if (eq == std::string::npos)
        {
            err << "error: --set expects key=value\n";
            return exit_config;
        }
        request.overrides[s.substr(0, eq)] = s.substr(eq + 1);
    }
    if (!point.empty())
        request.overrides["point"] = point;
    if (!kind.empty())
        request.overrides["kind"] = kind;
    if (request.config_path.empty())
    {
        if (name != "acceptance")
        {
            err << "error: --config is required\n";
            return exit_config;
        }
        request.config_path = bundled_acceptance_config();
    }
    try
    {
        request.config_text = read_file(request.config_path);
    }
    catch (std::exception const& e)
    {
        err << "error: " << e.what() << "\n";
        return exit_config;
    }
    return execute(request, out, err);
}

std::string bundled_acceptance_config()
{
    return STOCHAVG_SOURCE_DIR "/configs/acceptance.cfg";
}

}  // namespace stochavg::app
