#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "stochavg/config.hpp"

namespace stochavg::app {

inline constexpr char const* version = "0.1.0";

enum ExitCode
{
    exit_ok = 0,
    exit_error = 1,
    exit_config = 2,
    exit_non_finite = 3,
    exit_strict = 4,
};

/// Everything needed to reproduce one run; serialized into manifest.json.
struct RunRequest
{
    std::string subcommand;
    std::string config_path;
    std::string config_text;
    std::optional<std::uint64_t> seed;
    int threads = 0;
    bool strict = false;
    std::string out_dir;
    std::map<std::string, std::string> overrides;  // take precedence over [experiment]
};

/// Typed access to [experiment] keys merged with overrides.
class ExperimentParams
{
  public:
    ExperimentParams(std::map<std::string, std::string> experiment,
                     std::map<std::string, std::string> const& overrides);

    bool has(std::string const& key) const { return values_.count(key) > 0; }
    std::string text(std::string const& key, std::string const& fallback) const;
    double real(std::string const& key, double fallback) const;
    std::size_t count(std::string const& key, std::size_t fallback) const;
    std::uint64_t u64(std::string const& key, std::uint64_t fallback) const;
    std::vector<double> reals(std::string const& key, std::vector<double> const& fallback) const;
    ComplexVec state(std::string const& key, ComplexVec const& fallback) const;

  private:
    std::map<std::string, std::string> values_;
};

/// Command-line entry point; returns the process exit code.
int run_cli(std::vector<std::string> const& args, std::ostream& out, std::ostream& err);

/// Executes a parsed request, writing artifacts and manifest.json into out_dir.
int execute(RunRequest const& request, std::ostream& out, std::ostream& err);

/// Tidy `series,x,y,lo,hi` table from the artifacts of a finished run directory.
int emit_plot_data(std::string const& run_dir, std::ostream& err);

//---------------------------------------------------------------------------//
// Acceptance suite
//---------------------------------------------------------------------------//

struct CriterionResult
{
    int id = 0;
    std::string name;
    bool pass = false;
    std::string detail;
};

struct AcceptanceOptions
{
    std::uint64_t seed = 20240601;
    std::size_t paths = 4000;
    std::vector<int> only;  // empty: all criteria
    std::string scratch_dir = "acceptance_scratch";
};

/// Runs the criteria on the bundled acceptance system, one line per criterion to `log`.
std::vector<CriterionResult> run_acceptance_suite(SystemConfig const& config,
                                                  AcceptanceOptions const& opts,
                                                  std::ostream& log);

/// Path of the bundled acceptance config.
std::string bundled_acceptance_config();

}  // namespace stochavg::app
