#pragma once

#include <optional>
#include <vector>

#include "stochavg/averaging.hpp"
#include "stochavg/expr.hpp"
#include "stochavg/poly.hpp"

namespace stochavg {

/// A real-valued Hamiltonian h(v) on C^n.
class HamiltonianSpec
{
  public:
    /// Validates real-valuedness at 64 sampled states (1e-10 relative).
    HamiltonianSpec(FieldExpr h, std::size_t n);

    FieldExpr const& h() const { return h_; }
    std::size_t n() const { return n_; }
    /// Polynomial form; throws NonPolynomial.
    Poly const& poly() const;

  private:
    FieldExpr h_;
    std::size_t n_;
    std::optional<Poly> poly_;
};

struct WirtingerMethod
{
    enum class Kind
    {
        Symbolic,
        FiniteDiff,
    };
    Kind kind = Kind::Symbolic;
    double step = 1e-5;

    static WirtingerMethod symbolic() { return {Kind::Symbolic, 0.0}; }
    static WirtingerMethod finite_diff(double step = 1e-5) { return {Kind::FiniteDiff, step}; }
};

/// dh/dconj(v_k) = (dh/dx_k + i dh/dy_k) / 2 for every k.
ComplexVec wirtinger_dbar(HamiltonianSpec const& h, ComplexVec const& v,
                          WirtingerMethod method = WirtingerMethod::symbolic());

/// Components i dh/dconj(v_k), as expressions.
std::vector<FieldExpr> hamiltonian_field(HamiltonianSpec const& h);
/// Same field as polynomials.
std::vector<Poly> hamiltonian_field_poly(Poly const& h);

/// <h>(a).
double averaged_hamiltonian(HamiltonianSpec const& h, ComplexVec const& a,
                            AveragingMethod method = AveragingMethod::symbolic());

/// (i d<h>/dconj(v_k)) . v_k for every k; identically zero for real h.
std::vector<double> orthogonality_residual(HamiltonianSpec const& h, ComplexVec const& v);

/// Expression with the same value as `p` (built from its canonical text).
FieldExpr to_field_expr(Poly const& p);

}  // namespace stochavg
