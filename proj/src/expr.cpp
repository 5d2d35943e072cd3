#include "stochavg/expr.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>

namespace stochavg {

struct FieldExpr::Node
{
    Kind kind = Kind::Literal;
    double value = 0.0;
    std::size_t index = 0;
    unsigned exponent = 0;
    FieldExpr lhs{nullptr};
    FieldExpr rhs{nullptr};
    std::string name;
    OpaqueFn fn;
};

namespace {

std::shared_ptr<FieldExpr::Node const> make_node(FieldExpr::Node node)
{
    return std::make_shared<FieldExpr::Node const>(std::move(node));
}

Complex int_pow(Complex base, unsigned e)
{
    Complex result{1.0, 0.0};
    while (e)
    {
        if (e & 1u)
            result *= base;
        base *= base;
        e >>= 1;
    }
    return result;
}

std::string format_number(double x)
{
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    std::string s(buf);
    if (x < 0 || s.find('-') == 0)
        return "(" + s + ")";
    return s;
}

}  // namespace

FieldExpr::FieldExpr(std::shared_ptr<Node const> node) : node_(std::move(node)) {}

FieldExpr::FieldExpr() : FieldExpr(literal(0.0)) {}

FieldExpr FieldExpr::literal(double value)
{
    Node n;
    n.kind = Kind::Literal;
    n.value = value;
    return FieldExpr(make_node(std::move(n)));
}

FieldExpr FieldExpr::imag_unit()
{
    Node n;
    n.kind = Kind::ImagUnit;
    return FieldExpr(make_node(std::move(n)));
}

FieldExpr FieldExpr::var(std::size_t index)
{
    Node n;
    n.kind = Kind::Var;
    n.index = index;
    return FieldExpr(make_node(std::move(n)));
}

FieldExpr FieldExpr::conj_var(std::size_t index)
{
    Node n;
    n.kind = Kind::ConjVar;
    n.index = index;
    return FieldExpr(make_node(std::move(n)));
}

FieldExpr FieldExpr::abs2(std::size_t index)
{
    Node n;
    n.kind = Kind::Abs2;
    n.index = index;
    return FieldExpr(make_node(std::move(n)));
}

FieldExpr FieldExpr::pow(FieldExpr base, unsigned exponent)
{
    Node n;
    n.kind = Kind::Pow;
    n.lhs = std::move(base);
    n.exponent = exponent;
    return FieldExpr(make_node(std::move(n)));
}

FieldExpr FieldExpr::opaque(std::string name, OpaqueFn fn, std::size_t max_index)
{
    Node n;
    n.kind = Kind::Opaque;
    n.name = std::move(name);
    n.fn = std::move(fn);
    n.index = max_index;
    return FieldExpr(make_node(std::move(n)));
}

FieldExpr operator+(FieldExpr const& a, FieldExpr const& b)
{
    FieldExpr::Node n;
    n.kind = FieldExpr::Kind::Add;
    n.lhs = a;
    n.rhs = b;
    return FieldExpr(make_node(std::move(n)));
}

FieldExpr operator-(FieldExpr const& a, FieldExpr const& b)
{
    FieldExpr::Node n;
    n.kind = FieldExpr::Kind::Sub;
    n.lhs = a;
    n.rhs = b;
    return FieldExpr(make_node(std::move(n)));
}

FieldExpr operator*(FieldExpr const& a, FieldExpr const& b)
{
    FieldExpr::Node n;
    n.kind = FieldExpr::Kind::Mul;
    n.lhs = a;
    n.rhs = b;
    return FieldExpr(make_node(std::move(n)));
}

FieldExpr operator-(FieldExpr const& a)
{
    FieldExpr::Node n;
    n.kind = FieldExpr::Kind::Neg;
    n.lhs = a;
    return FieldExpr(make_node(std::move(n)));
}

FieldExpr::Kind FieldExpr::kind() const { return node_->kind; }
double FieldExpr::literal_value() const { return node_->value; }
std::size_t FieldExpr::index() const { return node_->index; }
unsigned FieldExpr::exponent() const { return node_->exponent; }
FieldExpr const& FieldExpr::lhs() const { return node_->lhs; }
FieldExpr const& FieldExpr::rhs() const { return node_->rhs; }
std::string const& FieldExpr::opaque_name() const { return node_->name; }

Complex FieldExpr::evaluate(ComplexVec const& v) const
{
    Node const& n = *node_;
    switch (n.kind)
    {
        case Kind::Literal: return {n.value, 0.0};
        case Kind::ImagUnit: return {0.0, 1.0};
        case Kind::Var: return v.at(n.index);
        case Kind::ConjVar: return std::conj(v.at(n.index));
        case Kind::Abs2: return {std::norm(v.at(n.index)), 0.0};
        case Kind::Add: return n.lhs.evaluate(v) + n.rhs.evaluate(v);
        case Kind::Sub: return n.lhs.evaluate(v) - n.rhs.evaluate(v);
        case Kind::Mul: return n.lhs.evaluate(v) * n.rhs.evaluate(v);
        case Kind::Neg: return -n.lhs.evaluate(v);
        case Kind::Pow: return int_pow(n.lhs.evaluate(v), n.exponent);
        case Kind::Opaque:
            if (v.size() < n.index)
                throw DimensionMismatch("opaque expression '" + n.name + "' needs "
                                        + std::to_string(n.index) + " variables");
            return n.fn(v);
    }
    return {};
}

std::size_t FieldExpr::arity() const
{
    Node const& n = *node_;
    switch (n.kind)
    {
        case Kind::Literal:
        case Kind::ImagUnit: return 0;
        case Kind::Var:
        case Kind::ConjVar:
        case Kind::Abs2: return n.index + 1;
        case Kind::Opaque: return n.index;
        case Kind::Add:
        case Kind::Sub:
        case Kind::Mul: return std::max(n.lhs.arity(), n.rhs.arity());
        case Kind::Neg:
        case Kind::Pow: return n.lhs.arity();
    }
    return 0;
}

bool FieldExpr::is_constant() const
{
    Node const& n = *node_;
    switch (n.kind)
    {
        case Kind::Literal:
        case Kind::ImagUnit: return true;
        case Kind::Var:
        case Kind::ConjVar:
        case Kind::Abs2:
        case Kind::Opaque: return false;
        case Kind::Add:
        case Kind::Sub:
        case Kind::Mul: return n.lhs.is_constant() && n.rhs.is_constant();
        case Kind::Neg:
        case Kind::Pow: return n.lhs.is_constant();
    }
    return false;
}

std::string FieldExpr::to_string() const
{
    Node const& n = *node_;
    switch (n.kind)
    {
        case Kind::Literal: return format_number(n.value);
        case Kind::ImagUnit: return "i";
        case Kind::Var: return "v" + std::to_string(n.index + 1);
        case Kind::ConjVar: return "cv" + std::to_string(n.index + 1);
        case Kind::Abs2: return "abs2(v" + std::to_string(n.index + 1) + ")";
        case Kind::Add: return "(" + n.lhs.to_string() + " + " + n.rhs.to_string() + ")";
        case Kind::Sub: return "(" + n.lhs.to_string() + " - " + n.rhs.to_string() + ")";
        case Kind::Mul: return "(" + n.lhs.to_string() + "*" + n.rhs.to_string() + ")";
        case Kind::Neg: return "(-(" + n.lhs.to_string() + "))";
        case Kind::Pow:
            return "((" + n.lhs.to_string() + ")^" + std::to_string(n.exponent) + ")";
        case Kind::Opaque: return "<" + n.name + ">";
    }
    return {};
}

//---------------------------------------------------------------------------//
// Parser
//---------------------------------------------------------------------------//

namespace {

class Parser
{
  public:
    Parser(std::string_view text, std::size_t n) : text_(text), n_(n) {}

    FieldExpr parse()
    {
        FieldExpr e = expr();
        skip_ws();
        if (pos_ != text_.size())
            throw ParseError("unexpected character '" + std::string(1, text_[pos_]) + "'",
                             pos_);
        return e;
    }

  private:
    std::string_view text_;
    std::size_t n_;
    std::size_t pos_ = 0;

    void skip_ws()
    {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_])))
            ++pos_;
    }

    bool accept(char c)
    {
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == c)
        {
            ++pos_;
            return true;
        }
        return false;
    }

    void expect(char c)
    {
        if (!accept(c))
            throw ParseError(std::string("expected '") + c + "'", pos_);
    }

    FieldExpr expr()
    {
        FieldExpr result = term();
        for (;;)
        {
            if (accept('+'))
                result = result + term();
            else if (accept('-'))
                result = result - term();
            else
                return result;
        }
    }

    FieldExpr term()
    {
        FieldExpr result = factor();
        while (accept('*'))
            result = result * factor();
        return result;
    }

    FieldExpr factor()
    {
        FieldExpr b = base();
        if (accept('^'))
        {
            skip_ws();
            std::size_t start = pos_;
            unsigned long e = read_uint();
            if (e > 64)
                throw ParseError("exponent too large", start);
            return FieldExpr::pow(std::move(b), static_cast<unsigned>(e));
        }
        return b;
    }

    unsigned long read_uint()
    {
        std::size_t start = pos_;
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_])))
            ++pos_;
        if (start == pos_)
            throw ParseError("expected unsigned integer", start);
        unsigned long value = 0;
        auto [ptr, ec] = std::from_chars(text_.data() + start, text_.data() + pos_, value);
        if (ec != std::errc())
            throw ParseError("integer out of range", start);
        return value;
    }

    std::size_t variable_index(std::string_view digits, std::size_t at)
    {
        if (digits.empty())
            throw ParseError("missing variable index", at);
        for (char c : digits)
        {
            if (!std::isdigit(static_cast<unsigned char>(c)))
                throw ParseError("unknown identifier", at);
        }
        std::size_t idx = 0;
        auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), idx);
        if (ec != std::errc() || idx == 0 || idx > n_)
            throw ParseError("variable index out of range (n = " + std::to_string(n_) + ")",
                             at);
        return idx - 1;
    }

    FieldExpr number()
    {
        std::size_t start = pos_;
        auto is_digit = [&](std::size_t p) {
            return p < text_.size() && std::isdigit(static_cast<unsigned char>(text_[p]));
        };
        while (is_digit(pos_))
            ++pos_;
        if (pos_ < text_.size() && text_[pos_] == '.')
        {
            ++pos_;
            while (is_digit(pos_))
                ++pos_;
        }
        if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E'))
        {
            std::size_t p = pos_ + 1;
            if (p < text_.size() && (text_[p] == '+' || text_[p] == '-'))
                ++p;
            if (is_digit(p))
            {
                pos_ = p;
                while (is_digit(pos_))
                    ++pos_;
            }
        }
        double value = 0.0;
        auto [ptr, ec] = std::from_chars(text_.data() + start, text_.data() + pos_, value);
        if (ec != std::errc() || ptr != text_.data() + pos_)
            throw ParseError("malformed number", start);
        return FieldExpr::literal(value);
    }

    FieldExpr base()
    {
        skip_ws();
        if (pos_ >= text_.size())
            throw ParseError("unexpected end of expression", pos_);
        char c = text_[pos_];
        if (c == '(')
        {
            ++pos_;
            FieldExpr e = expr();
            expect(')');
            return e;
        }
        if (c == '-')
        {
            ++pos_;
            return -base();
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.')
            return number();
        if (std::isalpha(static_cast<unsigned char>(c)))
        {
            std::size_t start = pos_;
            while (pos_ < text_.size() && std::isalnum(static_cast<unsigned char>(text_[pos_])))
                ++pos_;
            std::string_view ident = text_.substr(start, pos_ - start);
            if (ident == "i")
                return FieldExpr::imag_unit();
            if (ident == "abs2")
            {
                expect('(');
                skip_ws();
                std::size_t vstart = pos_;
                while (pos_ < text_.size()
                       && std::isalnum(static_cast<unsigned char>(text_[pos_])))
                    ++pos_;
                std::string_view inner = text_.substr(vstart, pos_ - vstart);
                if (inner.empty() || inner[0] != 'v')
                    throw ParseError("abs2 expects a variable v<k>", vstart);
                std::size_t idx = variable_index(inner.substr(1), vstart);
                expect(')');
                return FieldExpr::abs2(idx);
            }
            if (ident.starts_with("cv"))
                return FieldExpr::conj_var(variable_index(ident.substr(2), start));
            if (ident.starts_with("v"))
                return FieldExpr::var(variable_index(ident.substr(1), start));
            throw ParseError("unknown identifier '" + std::string(ident) + "'", start);
        }
        throw ParseError("unexpected character '" + std::string(1, c) + "'", pos_);
    }
};

}  // namespace

FieldExpr parse_field_expr(std::string_view text, std::size_t n)
{
    return Parser(text, n).parse();
}

}  // namespace stochavg
