#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "stochavg/expr.hpp"
#include "stochavg/types.hpp"

namespace stochavg {

/// Exponents of one monomial: alpha_1..alpha_n followed by beta_1..beta_n.
using Exponents = std::vector<std::uint16_t>;

/*!
 * Polynomial in v and conj(v): sum of c * prod_j v_j^alpha_j conj(v_j)^beta_j.
 *
 * Keys are unique and zero coefficients are pruned after every operation.
 */
class Poly
{
  public:
    using TermMap = std::map<Exponents, Complex>;

    explicit Poly(std::size_t n) : n_(n) {}
    static Poly constant(std::size_t n, Complex c);
    static Poly var(std::size_t n, std::size_t k);
    static Poly conj_var(std::size_t n, std::size_t k);

    std::size_t nvars() const { return n_; }
    TermMap const& terms() const { return terms_; }
    bool is_zero() const { return terms_.empty(); }
    std::size_t size() const { return terms_.size(); }
    /// Largest total degree sum(alpha) + sum(beta); 0 for the zero polynomial.
    unsigned degree() const;

    /// Coefficient of the monomial with the given exponents (0 if absent).
    Complex coefficient(Exponents const& key) const;
    void add_term(Exponents const& key, Complex c);

    Poly& operator+=(Poly const& other);
    Poly& operator-=(Poly const& other);
    Poly& operator*=(Complex c);
    friend Poly operator+(Poly a, Poly const& b) { return a += b; }
    friend Poly operator-(Poly a, Poly const& b) { return a -= b; }
    friend Poly operator*(Poly const& a, Poly const& b);
    friend Poly operator*(Poly a, Complex c) { return a *= c; }
    friend Poly operator-(Poly a) { return a *= Complex{-1.0, 0.0}; }

    Poly pow(unsigned e) const;
    /// Complex conjugate: swaps alpha and beta, conjugates coefficients.
    Poly conj() const;
    /// Wirtinger derivative d/d(conj v_k).
    Poly dbar(std::size_t k) const;
    /// Wirtinger derivative d/d(v_k).
    Poly d(std::size_t k) const;
    /// Keep only terms accepted by `keep`.
    Poly filter(std::function<bool(Exponents const&)> const& keep) const;

    Complex evaluate(ComplexVec const& v) const;

    /// Grammar-compatible text, e.g. "-v1 + i*v1*abs2(v2)"; "0" when empty.
    std::string to_string() const;

  private:
    std::size_t n_;
    TermMap terms_;
};

/// Canonical polynomial form of an expression over n variables.
Poly to_polynomial(FieldExpr const& expr, std::size_t n);

/// Flattened polynomials sharing one power table, for integrator loops.
class PolyEvaluator
{
  public:
    PolyEvaluator() = default;
    explicit PolyEvaluator(std::vector<Poly> const& polys);
    explicit PolyEvaluator(Poly const& p) : PolyEvaluator(std::vector<Poly>{p}) {}

    std::size_t outputs() const { return offsets_.empty() ? 0 : offsets_.size() - 1; }
    /// Writes outputs() values to `out`.
    void evaluate(ComplexVec const& v, Complex* out) const;
    Complex operator()(ComplexVec const& v) const;

  private:
    std::size_t n_ = 0;
    unsigned max_exp_ = 0;
    std::vector<std::size_t> offsets_;  // term range per output
    std::vector<Complex> coeffs_;
    std::vector<std::uint16_t> exps_;  // 2n per term
};

}  // namespace stochavg
