#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "stochavg/system.hpp"

namespace stochavg {

/*!
 * System configuration file (plain text, '#' starts a comment):
 *
 *   format = 1
 *
 *   [system]
 *   n = 2                        # state dimension
 *   n1 = 2                       # noise dimension (default n)
 *   lambdas = 1, 1.4142135623730951
 *   epsilon = 0.05
 *   psi_kind = constant          # constant | elliptic | smooth
 *   alpha = 1                    # required for elliptic
 *   m0 = 3
 *
 *   [drift]                      # P1 components, missing ones are 0
 *   p1_1 = -v1
 *
 *   [hamiltonian]                # optional
 *   h = abs2(v1)*abs2(v2)
 *
 *   [dispersion]                 # Psi entries, missing ones are 0
 *   psi_1_1 = 1
 *
 *   [experiment]                 # free-form key = value, read by the CLI
 *   T = 1
 *
 * The first non-comment line must be `format = 1`.
 */
struct SystemConfig
{
    SystemSpec system;
    std::map<std::string, std::string> experiment;
    std::string source_text;
};

SystemConfig parse_system_config(std::string_view text);
SystemConfig load_system_config(std::string const& path);

std::vector<double> parse_real_list(std::string_view text);
/// Comma-separated constant expressions, e.g. "1, 0.5 + 0.5*i".
ComplexVec parse_complex_list(std::string_view text);

}  // namespace stochavg
