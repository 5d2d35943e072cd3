#pragma once

#include <cstdint>
#include <vector>

#include "stochavg/expr.hpp"
#include "stochavg/hermitian.hpp"
#include "stochavg/poly.hpp"
#include "stochavg/system.hpp"
#include "stochavg/types.hpp"

namespace stochavg {

/// How torus averages are evaluated.
struct AveragingMethod
{
    enum class Kind
    {
        Symbolic,    // exact monomial selection, polynomial inputs only
        Quadrature,  // tensor-product rectangle rule, grid^n nodes
        MonteCarlo,  // uniform random angles; cross-check only
    };

    Kind kind = Kind::Symbolic;
    int grid = 64;
    int samples = 0;
    std::uint64_t seed = 0;

    static AveragingMethod symbolic() { return {Kind::Symbolic, 0, 0, 0}; }
    static AveragingMethod quadrature(int grid_per_dim = 64)
    {
        return {Kind::Quadrature, grid_per_dim, 0, 0};
    }
    static AveragingMethod monte_carlo(int samples, std::uint64_t seed)
    {
        return {Kind::MonteCarlo, 0, samples, seed};
    }
};

/// (Phi_w v)_k = e^{i w_k} v_k.
ComplexVec rotate(RotationVector const& w, ComplexVec const& v);

//---------------------------------------------------------------------------//
// Symbolic selection rules
//---------------------------------------------------------------------------//

/// <f>: keeps monomials with alpha == beta.
Poly average_poly(Poly const& f);
/// <<P>>_k: keeps monomials of P_k with alpha - beta == e_k.
Poly average_field_poly(Poly const& p, std::size_t k);
/// A(a) entries (row-major n x n) from row-major n x n1 dispersion polys.
std::vector<Poly> averaged_diffusion_poly(std::vector<Poly> const& psi, std::size_t n1);
/// Angle-averaged integrands of F(I) as alpha == beta polys (evaluate at v = sqrt(2I)).
std::vector<Poly> action_drift_poly(SystemSpec const& spec, bool with_hamiltonian = true);
/// Angle-averaged integrands of S(I), row-major n x n.
std::vector<Poly> action_diffusion_poly(SystemSpec const& spec);

//---------------------------------------------------------------------------//
// Averages at a point
//---------------------------------------------------------------------------//

Complex average_function(FieldExpr const& f, ComplexVec const& a, AveragingMethod method);

ComplexVec average_field(std::vector<FieldExpr> const& p, ComplexVec const& a,
                         AveragingMethod method);

HermitianMatrix averaged_diffusion(DispersionExprs const& psi, ComplexVec const& a,
                                   AveragingMethod method);

/// F(I); `with_hamiltonian` = false drops the i dh/dconj(v) part of the drift.
std::vector<double> action_drift_F(SystemSpec const& spec, ActionVector const& actions,
                                   AveragingMethod method, bool with_hamiltonian = true);

struct ActionDiffusion
{
    HermitianMatrix S;  // real symmetric PSD
    HermitianMatrix K;  // principal square root of S
    int clamped = 0;
};

ActionDiffusion action_diffusion_SK(SystemSpec const& spec, ActionVector const& actions,
                                    AveragingMethod method);

/// Amplitudes v_k = sqrt(2 I_k) on the positive real axis.
ComplexVec amplitudes_from_actions(ActionVector const& actions);

//---------------------------------------------------------------------------//

/*!
 * Precomputed averaged coefficients of one system, for repeated evaluation
 * inside integrators.
 *
 * The symbolic method compiles every average into flat polynomials once;
 * quadrature re-integrates on each call. The Modified variant drops the
 * hamiltonian part of the drift.
 */
class AveragedSystem
{
  public:
    enum class Variant
    {
        Full,
        Modified,
    };

    AveragedSystem(SystemSpec spec, Variant variant, AveragingMethod method);

    SystemSpec const& spec() const { return spec_; }
    Variant variant() const { return variant_; }

    /// <<P>>(a) or <<P1>>(a).
    ComplexVec drift(ComplexVec const& a) const;
    HermitianMatrix diffusion(ComplexVec const& a) const;
    /// B(a) = principal_sqrt(A(a)); cached for constant dispersion.
    SqrtResult dispersion(ComplexVec const& a) const;
    bool constant_dispersion() const { return constant_b_.has_value(); }

    std::vector<double> action_drift(ActionVector const& actions) const;
    ActionDiffusion action_diffusion(ActionVector const& actions) const;

  private:
    SystemSpec spec_;
    Variant variant_;
    AveragingMethod method_;
    bool symbolic_ = false;
    PolyEvaluator drift_eval_;
    PolyEvaluator diffusion_eval_;
    PolyEvaluator action_drift_eval_;
    PolyEvaluator action_diffusion_eval_;
    std::optional<SqrtResult> constant_b_;
};

}  // namespace stochavg
