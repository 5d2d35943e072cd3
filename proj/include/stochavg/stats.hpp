#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "stochavg/sde.hpp"

namespace stochavg {

/// N finite samples in R^d, row-major.
class EmpiricalLaw
{
  public:
    EmpiricalLaw(std::vector<double> points, std::size_t dim, double time_tag = 0.0,
                 std::uint64_t source = 0);

    std::size_t size() const { return points_.size() / dim_; }
    std::size_t dim() const { return dim_; }
    double time_tag() const { return time_tag_; }
    std::uint64_t source() const { return source_; }
    std::span<double const> point(std::size_t i) const { return {points_.data() + i * dim_, dim_}; }
    std::vector<double> const& points() const { return points_; }
    std::vector<double> coordinate(std::size_t j) const;

    /// Rows picked by index (with repetition).
    EmpiricalLaw subset(std::vector<std::size_t> const& rows) const;

  private:
    std::vector<double> points_;
    std::size_t dim_;
    double time_tag_;
    std::uint64_t source_;
};

/// Actions (I_1, ..., I_n) at one recorded node.
EmpiricalLaw action_law(StateEnsemble const& e, std::size_t node);
EmpiricalLaw action_law(ActionEnsemble const& e, std::size_t node);
/// States flattened to (Re a_1, Im a_1, ...) at one recorded node.
EmpiricalLaw state_law(StateEnsemble const& e, std::size_t node);

enum class DistanceMethod
{
    Exact1D,
    LowerBoundND,
};

std::string to_string(DistanceMethod method);

struct DistanceReport
{
    double estimate = 0.0;
    DistanceMethod method = DistanceMethod::Exact1D;
    double ci_lo = 0.0;  // bootstrap percentile interval
    double ci_hi = 0.0;
    double noise_floor = 0.0;   // mean of the half-split distances of each law
    double marginal_max = 0.0;  // max of exact coordinate-marginal distances
    double ramp_max = 0.0;      // best ramp feature (nd only)
    double projection = 0.0;    // exact distance along the mean-difference direction (nd only)
};

struct BootstrapOptions
{
    int resamples = 200;
    double level = 0.9;
    std::uint64_t seed = 0;
};

//---------------------------------------------------------------------------//
// Raw estimators (no bootstrap)
//---------------------------------------------------------------------------//

/// sup |E1 f - E2 f| over Lip(f) + sup|f| <= 1 on the line.
double bl_exact_1d(std::span<double const> x1, std::span<double const> x2);

struct RampFeature
{
    std::vector<double> u;  // unit direction
    double b = 0.0;
    double w = 1.0;
    double scale() const { return w / (1.0 + w); }
    double operator()(std::span<double const> x) const;
};

/// Ramp family x -> s clamp((u.x - b) / w, -1, 1), s = w / (1 + w).
std::vector<RampFeature> make_ramp_features(EmpiricalLaw const& pooled_a,
                                            EmpiricalLaw const& pooled_b, int count,
                                            std::uint64_t seed);

struct NdParts
{
    double ramp_max = 0.0;
    double marginal_max = 0.0;
    double projection = 0.0;
    double estimate() const;
};

NdParts bl_lower_bound_nd(EmpiricalLaw const& law1, EmpiricalLaw const& law2,
                          std::vector<RampFeature> const& features);

//---------------------------------------------------------------------------//
// Reports
//---------------------------------------------------------------------------//

DistanceReport bl_distance_1d(EmpiricalLaw const& law1, EmpiricalLaw const& law2,
                              BootstrapOptions const& boot = {});

/// Lower bound: max of ramps, exact coordinate marginals, and the mean-difference projection.
DistanceReport bl_distance_nd(EmpiricalLaw const& law1, EmpiricalLaw const& law2,
                              int feature_count, std::uint64_t seed,
                              BootstrapOptions const& boot = {});

/// Exact 1-D report for d = 1, nd lower bound otherwise (64 features).
DistanceReport bl_distance(EmpiricalLaw const& law1, EmpiricalLaw const& law2,
                           std::uint64_t seed, BootstrapOptions const& boot = {});

struct MeanInterval
{
    double mean = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
    double std_error = 0.0;
};

/// Sample mean with bootstrap percentile interval.
MeanInterval bootstrap_mean(std::vector<double> const& values, BootstrapOptions const& boot = {});

/// sup_x |F_N(x) - cdf(x)|.
double ks_statistic(std::vector<double> samples, std::function<double(double)> const& cdf);
/// Asymptotic one-sample critical value sqrt(-ln(alpha/2)/2) / sqrt(N).
double ks_critical_value(std::size_t n, double alpha = 0.01);

//---------------------------------------------------------------------------//
// Experiments
//---------------------------------------------------------------------------//

struct MixingOptions
{
    SimOptions sim;           // sim.seed drives the ensemble from v1
    std::uint64_t seed2 = 1;  // master seed of the ensemble from v2
    std::vector<double> times;
    std::uint64_t feature_seed = 0;
};

/// BL distance between the state laws started at v1 and v2, one report per time.
std::vector<DistanceReport> mixing_profile(SystemSpec const& spec, Variant variant,
                                           ComplexVec const& v1, ComplexVec const& v2,
                                           MixingOptions const& opts);

struct ConvergenceRow
{
    double eps = 0.0;
    double time = 0.0;
    std::string metric;
    DistanceReport report;
};

struct ConvergenceOptions
{
    std::vector<double> eps_list;  // decreasing
    std::vector<double> times;
    std::size_t n_paths = 4000;
    double dtau_effective = 0.005;
    double dtau_factor = 0.2;  // perturbed step = min(dtau_factor * eps, dtau_effective)
    std::uint64_t seed = 0;
};

/*!
 * For each eps, action laws of the perturbed system against the effective
 * equation at the requested times. Metrics: `bl_action` (joint lower bound)
 * and `bl_action_marginal` (max exact marginal).
 */
std::vector<ConvergenceRow> convergence_table(SystemSpec const& spec, ComplexVec const& v0,
                                              ConvergenceOptions const& opts);

/// Header `eps,time,metric,estimate,ci_lo,ci_hi,noise_floor`.
void write_convergence_csv(std::ostream& os, std::vector<ConvergenceRow> const& rows);
/// JSON array with the same fields.
std::string convergence_json(std::vector<ConvergenceRow> const& rows);

}  // namespace stochavg
