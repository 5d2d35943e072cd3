#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "stochavg/sde.hpp"

namespace stochavg {

enum class SegmentKind
{
    Lambda,  // coupled path runs its own modified dynamics
    Delta,   // coupled path is a rotated copy of the reference path
};

struct Segment
{
    SegmentKind kind;
    std::size_t start;  // grid step indices, closed interval
    std::size_t end;
};

/// Per path, segments Lambda_0, Delta_1, Lambda_1, ... sharing endpoints and covering [0, M].
struct SegmentSchedule
{
    double delta = 0.0;
    double dtau = 0.0;
    std::size_t steps = 0;
    std::vector<std::vector<Segment>> paths;

    /// Segments are ordered, alternate in kind, start at 0, end at M, and share endpoints.
    bool tiles() const;
    std::size_t segment_count() const;
};

struct RotationLog
{
    std::vector<std::vector<std::vector<double>>> theta;  // [path][delta segment][k]
};

/*!
 * Amplitudes stored as modulus and phase, so a Delta segment can copy the
 * reference modulus bit for bit.
 */
struct PolarEnsemble
{
    Ensemble<double> modulus;
    Ensemble<double> phase;

    double action(std::size_t path, std::size_t node, std::size_t k) const
    {
        double r = modulus.at(path, node, k);
        return 0.5 * r * r;
    }
    ActionEnsemble actions() const;
    StateEnsemble states() const;
};

struct CoupledResult
{
    PolarEnsemble coupled;    // a-tilde
    PolarEnsemble reference;  // a_R, cut-off Full effective equation
    SegmentSchedule schedule;
    RotationLog rotations;
    std::vector<double> tau_R;  // reference stopping times
    /// Per path, max over switch nodes of |a-tilde| - |a_R| jumps (grid overshoot).
    std::vector<double> switch_jump;
    /// Per path, max over Delta nodes of |I-tilde_k - I_k(a_R)|; zero by construction.
    std::vector<double> delta_mismatch;
};

/// Noise driving a-tilde on Lambda segments.
enum class NoiseCoupling
{
    PhaseAligned,  // Phi_theta dbeta of the reference, theta = arg a-tilde - arg a_R at the node
    Independent,   // separate stream of the same path
};

struct CouplingOptions
{
    double delta = 0.1;
    double R = 50.0;
    NoiseCoupling noise = NoiseCoupling::PhaseAligned;
};

/*!
 * Coupled process of the reference path a_R and a-tilde.
 *
 * a-tilde follows the cut-off Modified equation until min_k I-tilde_k <= delta
 * at a node; from there it is Phi_theta a_R with the phase-matching theta,
 * until min_k I-tilde_k >= 2 delta. With PhaseAligned noise the action
 * martingale terms of both paths coincide while their moduli agree, so the
 * actions stay close on Lambda segments. With Independent noise the modulus
 * copy at each switch replaces a-tilde's low actions by unconditioned ones.
 * Requires min_k I_k(v0) > delta and R > |v0|^2. Every node is recorded.
 */
CoupledResult build_coupled(SystemSpec const& spec, ComplexVec const& v0, SimOptions const& opts,
                            CouplingOptions const& coupling, AveragingMethod method);
CoupledResult build_coupled(SystemSpec const& spec, ComplexVec const& v0, SimOptions const& opts,
                            CouplingOptions const& coupling);

struct OccupationReport
{
    double estimate = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
    std::vector<double> per_path;
};

/*!
 * E int_0^{tau_R} 1{I_k <= delta} dtau by left-point quadrature over the
 * recorded nodes (which must be every grid node). `up_to` holds per-path
 * stopping times; empty means the horizon. The CI is a 200-resample
 * bootstrap at 90%.
 */
OccupationReport occupation_time(ActionEnsemble const& actions, double delta, std::size_t k,
                                 std::vector<double> const& up_to, std::uint64_t seed = 0);

/// Header `path,seg_index,kind,start_time,end_time`.
void write_segments_csv(std::ostream& os, SegmentSchedule const& schedule);

}  // namespace stochavg
