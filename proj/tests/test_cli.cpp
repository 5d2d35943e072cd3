#include <filesystem>
#include <fstream>
#include <sstream>

#include "app.hpp"
#include "doctest.h"
#include "json.hpp"

namespace fs = std::filesystem;
using namespace stochavg::app;

namespace {

fs::path scratch(std::string const& name)
{
    fs::path const p = fs::temp_directory_path() / ("stochavg_cli_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(fs::path const& p)
{
    std::ifstream is(p, std::ios::binary);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

fs::path write_config(fs::path const& dir, std::string const& text)
{
    fs::path const p = dir / "system.cfg";
    std::ofstream(p) << text;
    return p;
}

std::string const ou_config = R"(format = 1
[system]
n = 2
lambdas = 1, 1.4142135623730951
epsilon = 0.05
psi_kind = constant
[drift]
p1_1 = -v1
p1_2 = -v2
[hamiltonian]
h = abs2(v1)*abs2(v2)
[dispersion]
psi_1_1 = 1
psi_2_2 = 1
[experiment]
v0 = 1, 1
paths = 200
dtau = 0.01
eps_list = 0.2, 0.05
times = 0.5, 1
T = 1
R = 50
delta_list = 0.2, 0.1
mixing_v1 = 2, 0
mixing_v2 = 0, 2
mixing_times = 0.5, 1
)";

struct Run
{
    int code;
    std::string out;
    std::string err;
};

Run cli(std::vector<std::string> args)
{
    args.insert(args.begin(), "stochavg");
    std::ostringstream out, err;
    int const code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

}  // namespace

TEST_CASE("check flags a resonance and exits 0")
{
    fs::path const dir = scratch("check");
    std::string cfg = ou_config;
    cfg.replace(cfg.find("1, 1.4142135623730951"), 21, "1, 2");
    fs::path const config = write_config(dir, cfg);
    Run const r = cli({"--config", config.string(), "--out", (dir / "run").string(), "check"});
    CHECK(r.code == 0);
    CHECK(r.out.find("RESONANT") != std::string::npos);
    auto const report = nlohmann::json::parse(slurp(dir / "run" / "check.json"));
    CHECK(report["resonant"] == true);
    CHECK(report["witness"] == nlohmann::json({2, -1}));
    CHECK(report["min_abs"] == 0.0);

    Run const strict = cli({"--config", config.string(), "--out", (dir / "strict").string(),
                            "--strict", "check"});
    CHECK(strict.code == 4);
}

TEST_CASE("average prints the resonant monomials")
{
    fs::path const dir = scratch("average");
    fs::path const config = write_config(dir, ou_config);
    Run const r = cli({"--config", config.string(), "--out", (dir / "run").string(), "average"});
    CHECK(r.code == 0);
    CHECK(r.out.find("component 1 = -a1 + i*a1*abs2(a2)") != std::string::npos);
    CHECK(slurp(dir / "run" / "average.txt") == r.out);
}

TEST_CASE("exit codes")
{
    fs::path const dir = scratch("exit");
    fs::path const config = write_config(dir, ou_config);
    std::string const out = (dir / "run").string();
    CHECK(cli({"--config", (dir / "missing.cfg").string(), "--out", out, "check"}).code == 2);
    CHECK(cli({"--out", out, "check"}).code == 2);
    CHECK(cli({"--config", config.string(), "--out", out, "frobnicate"}).code == 2);
    CHECK(cli({"--config", config.string(), "--out", out, "--set", "paths=abc", "simulate"}).code
          == 2);
    CHECK(cli({"--config", config.string(), "--out", out, "--set", "noequals", "check"}).code == 2);
    CHECK(cli({"--config", config.string(), "--out", out, "--set", "kind=bogus", "simulate"}).code
          == 2);

    fs::path const broken = dir / "broken.cfg";
    std::ofstream(broken) << "format = 1\n[system]\nn = 1\nlambdas = 1\nepsilon = 0.1\n[drift]\np1_1 = v1 +\n";
    CHECK(cli({"--config", broken.string(), "--out", out, "check"}).code == 2);

    std::string explosive = ou_config;
    explosive.replace(explosive.find("p1_1 = -v1"), 10, "p1_1 = abs2(v1)^2*v1");
    explosive.erase(explosive.find("R = 50\n"), 7);
    fs::path const ex = dir / "explosive.cfg";
    std::ofstream(ex) << explosive;
    CHECK(cli({"--config", ex.string(), "--out", out, "--set", "v0=3, 0", "--set", "T=5",
               "simulate", "--kind", "effective"})
              .code
          == 3);

    CHECK(cli({"--config", config.string(), "--out", out, "--set", "dtau=0.5", "simulate", "--kind",
               "perturbed"})
              .code
          == 2);
    CHECK(cli({"--version"}).code == 0);
}

TEST_CASE("simulate writes ensembles and a manifest")
{
    fs::path const dir = scratch("simulate");
    fs::path const config = write_config(dir, ou_config);
    fs::path const run = dir / "run";
    Run const r = cli({"--config", config.string(), "--out", run.string(), "--seed", "42",
                       "--set", "paths=5", "--set", "record_times=0.5, 1", "simulate", "--kind",
                       "perturbed"});
    REQUIRE(r.code == 0);
    std::string const states = slurp(run / "states_a.csv");
    CHECK(states.rfind("path,time,k,re,im\n", 0) == 0);
    auto const manifest = nlohmann::json::parse(slurp(run / "manifest.json"));
    CHECK(manifest["seed"] == 42);
    CHECK(manifest["version"] == version);
    CHECK(manifest["subcommand"] == "simulate");
    CHECK(manifest["config_hash"].get<std::string>().size() == 16);
    CHECK(manifest["overrides"]["kind"] == "perturbed");

    Run const again = cli({"--out", (dir / "replay").string(), "replay", "--manifest",
                           (run / "manifest.json").string()});
    REQUIRE(again.code == 0);
    CHECK(slurp(dir / "replay" / "states_a.csv") == states);
    CHECK(slurp(dir / "replay" / "states_v.csv") == slurp(run / "states_v.csv"));

    Run const actions = cli({"--config", config.string(), "--out", (dir / "act").string(), "--set",
                             "paths=5", "simulate", "--kind", "action"});
    REQUIRE(actions.code == 0);
    CHECK(slurp(dir / "act" / "actions.csv").rfind("path,time,k,I\n", 0) == 0);
}

TEST_CASE("compare, couple-demo, mixing and plot data")
{
    fs::path const dir = scratch("pipelines");
    fs::path const config = write_config(dir, ou_config);
    fs::path const run = dir / "run";
    std::string const c = config.string(), o = run.string();

    CHECK(cli({"--out", (dir / "empty").string(), "plot-data"}).code == 2);
    fs::create_directories(dir / "empty");
    CHECK(cli({"--out", (dir / "empty").string(), "plot-data"}).code == 2);

    REQUIRE(cli({"--config", c, "--out", o, "--threads", "1", "compare"}).code == 0);
    CHECK(slurp(run / "convergence.csv").rfind("eps,time,metric,estimate,ci_lo,ci_hi,noise_floor\n", 0)
          == 0);
    CHECK(nlohmann::json::parse(slurp(run / "convergence.json")).size() == 2 * 2 * 3);

    REQUIRE(cli({"--config", c, "--out", o, "--set", "T=1", "couple-demo"}).code == 0);
    CHECK(slurp(run / "occupation.csv").rfind("delta,k,estimate,ci_lo,ci_hi\n", 0) == 0);
    CHECK(slurp(run / "segments.csv").rfind("path,seg_index,kind,start_time,end_time\n", 0) == 0);

    REQUIRE(cli({"--config", c, "--out", o, "mixing"}).code == 0);
    CHECK(slurp(run / "mixing.csv").rfind("time,estimate,ci_lo,ci_hi,noise_floor\n", 0) == 0);

    REQUIRE(cli({"--out", o, "plot-data"}).code == 0);
    std::string const plot = slurp(run / "plot_data.csv");
    CHECK(plot.rfind("series,x,y,lo,hi\n", 0) == 0);
    CHECK(plot.find("convergence_bl_action_t=0.5,") != std::string::npos);
    CHECK(plot.find("convergence_bl_action_t=1,") != std::string::npos);
    CHECK(plot.find("occupation_k=1,0.2,") != std::string::npos);
    CHECK(plot.find("occupation_k=1,0.1,") != std::string::npos);
    CHECK(plot.find("mixing,0.5,") != std::string::npos);
    CHECK(plot.find("segments_path=0,") != std::string::npos);
}

TEST_CASE("reference mode is bit-exact and threads agree")
{
    fs::path const dir = scratch("threads");
    fs::path const config = write_config(dir, ou_config);
    auto run = [&](std::string const& tag, std::string const& threads) {
        fs::path const out = dir / tag;
        REQUIRE(cli({"--config", config.string(), "--out", out.string(), "--threads", threads,
                     "--seed", "5", "compare"})
                    .code
                == 0);
        return slurp(out / "convergence.csv");
    };
    std::string const a = run("a", "1");
    CHECK(run("b", "1") == a);
    CHECK(run("c", "4") == a);
}
