#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "stochavg/averaging.hpp"
#include "stochavg/ensemble.hpp"
#include "stochavg/random.hpp"
#include "stochavg/system.hpp"

namespace stochavg {

/// Common run parameters of every ensemble integrator.
struct SimOptions
{
    double T = 1.0;
    double dtau = 1e-3;
    std::size_t n_paths = 1;
    std::uint64_t seed = 0;
    std::vector<double> record_times;  // empty: every node
};

/// Symbolic when the system is polynomial, otherwise quadrature on 16 nodes per angle.
AveragingMethod default_integrator_method(SystemSpec const& spec);

//---------------------------------------------------------------------------//
// Perturbed system
//---------------------------------------------------------------------------//

struct PerturbedEnsembles
{
    StateEnsemble v;  // original variables
    StateEnsemble a;  // interaction representation, a_k = e^{i tau lambda_k / eps} v_k
};

/*!
 * Exponential Euler for the fast-slow system in slow time:
 * v <- e^{-i Lambda dtau / eps} (v + P(v) dtau + Psi(v) dbeta).
 *
 * Requires dtau <= eps / 5 (StepTooLarge otherwise).
 */
PerturbedEnsembles simulate_perturbed(SystemSpec const& spec, ComplexVec const& v0,
                                      SimOptions const& opts);

//---------------------------------------------------------------------------//
// Effective equations
//---------------------------------------------------------------------------//

using Variant = AveragedSystem::Variant;

struct CutoffState
{
    double R = std::numeric_limits<double>::infinity();
    std::vector<double> tau_R;  // per path; T when never reached
};

struct CutoffEnsemble
{
    StateEnsemble paths;
    CutoffState cutoff;
};

/// Euler-Maruyama for da = <<P>>(a) dtau + B(a) dbeta.
StateEnsemble simulate_effective(SystemSpec const& spec, Variant variant, ComplexVec const& v0,
                                 SimOptions const& opts, AveragingMethod method);
StateEnsemble simulate_effective(SystemSpec const& spec, Variant variant, ComplexVec const& v0,
                                 SimOptions const& opts);

/// Effective equation until the first node with |a|^2 >= R, then da = dbeta.
CutoffEnsemble simulate_cutoff_effective(SystemSpec const& spec, Variant variant,
                                         ComplexVec const& v0, SimOptions const& opts, double R,
                                         AveragingMethod method);
CutoffEnsemble simulate_cutoff_effective(SystemSpec const& spec, Variant variant,
                                         ComplexVec const& v0, SimOptions const& opts, double R);

//---------------------------------------------------------------------------//
// Action equations
//---------------------------------------------------------------------------//

struct ActionSdeResult
{
    ActionEnsemble paths;
    std::vector<std::size_t> clamp_events;  // per path, components reset to 0
    std::size_t sqrt_clamps = 0;            // eigenvalues clamped inside K(I)
};

/// I <- max(I + F(I) dtau + K(I) dW, 0) componentwise.
ActionSdeResult simulate_action_sde(SystemSpec const& spec, ActionVector const& I0,
                                    SimOptions const& opts, AveragingMethod method);
ActionSdeResult simulate_action_sde(SystemSpec const& spec, ActionVector const& I0,
                                    SimOptions const& opts);

struct ItoReport
{
    double sup_error = 0.0;
    double dtau = 0.0;
};

/*!
 * One perturbed path and, driven by the same increments, the Ito action
 * equation dI_k = v_k.P_k dtau + v_k.(Psi dbeta)_k + sum_l |Psi_kl|^2 dtau
 * evaluated along it. Returns sup over nodes of |I(v) - I|.
 */
ItoReport ito_action_consistency(SystemSpec const& spec, ComplexVec const& v0, double T,
                                 double dtau, std::uint64_t seed);

/// Same as above for one fixed noise path.
ItoReport ito_action_consistency(SystemSpec const& spec, ComplexVec const& v0,
                                 NoisePath const& noise);

/*!
 * Refinement study on one Brownian path: the finest grid dtau / 2^(levels-1)
 * is sampled and coarsened. Entry i uses step dtau / 2^i.
 */
std::vector<ItoReport> ito_refinement(SystemSpec const& spec, ComplexVec const& v0, double T,
                                      double dtau, int levels, std::uint64_t seed);

//---------------------------------------------------------------------------//

struct MomentReport
{
    int m = 0;
    double sup_moment = 0.0;       // sup over nodes of E|v|^{2m}, all paths
    double sup_moment_half = 0.0;  // same over the first half of the paths
};

/// Moment diagnostic with m = ceil(max(m0, 4)) + 1.
MomentReport moment_diagnostic(StateEnsemble const& ensemble, double m0);

}  // namespace stochavg
