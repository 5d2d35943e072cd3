#pragma once

#include <functional>
#include <memory>
#include <string>
#include <string_view>

#include "stochavg/types.hpp"

namespace stochavg {

/*!
 * Immutable expression tree over v_1..v_n, their conjugates, the imaginary
 * unit and real literals.
 *
 * Grammar accepted by parse_field_expr (whitespace insignificant):
 *
 *   expr   := term (('+' | '-') term)*
 *   term   := factor ('*' factor)*
 *   factor := base ('^' uint)?
 *   base   := 'v' uint | 'cv' uint | 'i' | number
 *           | 'abs2(' 'v' uint ')' | '(' expr ')' | '-' base
 *
 * Variable indices are 1-based in text and 0-based in the API. Besides the
 * grammar nodes, library callers may wrap an arbitrary function as an opaque
 * node; such expressions evaluate normally but have no polynomial form.
 */
class FieldExpr
{
  public:
    enum class Kind
    {
        Literal,
        ImagUnit,
        Var,
        ConjVar,
        Abs2,
        Add,
        Sub,
        Mul,
        Neg,
        Pow,
        Opaque,
    };

    using OpaqueFn = std::function<Complex(ComplexVec const&)>;

    /// The zero literal.
    FieldExpr();

    static FieldExpr literal(double value);
    static FieldExpr imag_unit();
    static FieldExpr var(std::size_t index);
    static FieldExpr conj_var(std::size_t index);
    static FieldExpr abs2(std::size_t index);
    static FieldExpr pow(FieldExpr base, unsigned exponent);
    static FieldExpr opaque(std::string name, OpaqueFn fn, std::size_t max_index);

    friend FieldExpr operator+(FieldExpr const& a, FieldExpr const& b);
    friend FieldExpr operator-(FieldExpr const& a, FieldExpr const& b);
    friend FieldExpr operator*(FieldExpr const& a, FieldExpr const& b);
    friend FieldExpr operator-(FieldExpr const& a);

    Kind kind() const;
    double literal_value() const;
    std::size_t index() const;
    unsigned exponent() const;
    FieldExpr const& lhs() const;
    FieldExpr const& rhs() const;
    std::string const& opaque_name() const;

    Complex evaluate(ComplexVec const& v) const;

    /// Number of variables referenced, i.e. (max index + 1), or 0.
    std::size_t arity() const;
    /// True when no variable (plain, conjugate, abs2 or opaque) occurs.
    bool is_constant() const;

    /// Fully parenthesized text accepted by parse_field_expr.
    std::string to_string() const;

    struct Node;  // defined in expr.cpp

  private:
    explicit FieldExpr(std::shared_ptr<Node const> node);

    std::shared_ptr<Node const> node_;
};

/// Parse `text` as an expression over n variables.
FieldExpr parse_field_expr(std::string_view text, std::size_t n);

}  // namespace stochavg
