#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "stochavg/expr.hpp"
#include "stochavg/poly.hpp"
#include "stochavg/types.hpp"

namespace stochavg {

/// Which branch of the dispersion assumption the user declares.
enum class PsiKind
{
    Constant,  // v-independent
    Elliptic,  // Psi Psi^* >= alpha E
    Smooth,    // C^2 in v
};

std::string to_string(PsiKind kind);
PsiKind psi_kind_from_string(std::string const& text);

/// n x n1 matrix of expressions, row-major.
struct DispersionExprs
{
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<FieldExpr> entries;

    FieldExpr const& operator()(std::size_t k, std::size_t l) const
    {
        return entries[k * cols + l];
    }
};

/*!
 * One perturbed system
 *
 *   dv_k + i eps^-1 lambda_k v_k dtau = P_k(v) dtau + sum_l Psi_kl(v) dbeta_l
 *
 * with P = P1 + i d h / d conj(v). The split into P1 and h is an input.
 * Instances are immutable and cheap to copy (shared compiled state).
 */
class SystemSpec
{
  public:
    struct Params
    {
        std::vector<double> lambdas;
        double epsilon = 1.0;
        std::vector<FieldExpr> p1;
        std::optional<FieldExpr> h;
        DispersionExprs psi;
        PsiKind psi_kind = PsiKind::Smooth;
        double alpha = 0.0;  // ellipticity constant when psi_kind == Elliptic
        double m0 = 0.0;
    };

    static SystemSpec create(Params params);

    std::size_t n() const { return freqs_.size(); }
    std::size_t n1() const { return params_->psi.cols; }
    Frequencies const& freqs() const { return freqs_; }
    double epsilon() const { return params_->epsilon; }
    double m0() const { return params_->m0; }
    double alpha() const { return params_->alpha; }
    PsiKind psi_kind() const { return params_->psi_kind; }
    std::vector<FieldExpr> const& p1() const { return params_->p1; }
    std::optional<FieldExpr> const& h() const { return params_->h; }
    DispersionExprs const& psi() const { return params_->psi; }

    /// Same system with a different epsilon.
    SystemSpec with_epsilon(double epsilon) const;

    /// True when P1, h and Psi all have polynomial forms.
    bool is_polynomial() const;
    /// Polynomial forms; throw NonPolynomial when unavailable.
    std::vector<Poly> const& p1_poly() const;
    /// Hamiltonian field i dh/dconj(v); zero polys when h is absent.
    std::vector<Poly> const& p2_poly() const;
    std::optional<Poly> const& h_poly() const;
    /// Row-major n x n1.
    std::vector<Poly> const& psi_poly() const;

    /// P(v) (with_hamiltonian) or P1(v) only.
    ComplexVec drift(ComplexVec const& v, bool with_hamiltonian = true) const;
    /// Psi(v), row-major n x n1.
    ComplexVec dispersion(ComplexVec const& v) const;
    /// Psi for PsiKind::Constant (evaluated once at construction).
    ComplexVec const& constant_dispersion() const;

    /// Stable fingerprint of every input field, for ensemble metadata.
    std::uint64_t hash() const;
    std::string describe() const;

  private:
    struct Compiled;
    SystemSpec(std::shared_ptr<Params const> params, std::shared_ptr<Compiled const> compiled);

    std::shared_ptr<Params const> params_;
    std::shared_ptr<Compiled const> compiled_;
    Frequencies freqs_;
};

/// FNV-1a over bytes; used for config and system fingerprints.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed = 1469598103934665603ull);

}  // namespace stochavg
