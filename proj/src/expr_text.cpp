// DSL parser and printer. Grammar (docs/dsl.md):
//
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := ('+' | '-') unary | power
//   power   := primary ('^' intexp)*
//   intexp  := ['+' | '-'] INTEGER | '(' ['+' | '-'] INTEGER ')'
//   primary := NUMBER | IDENT | FUNC '(' expr ')' | '(' expr ')'

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <unordered_map>

#include "anisosplit/error.hpp"
#include "anisosplit/expr.hpp"

namespace anisosplit {

namespace {

class Parser {
public:
    explicit Parser(std::string_view text) : text_(text) {}

    Expr parse_all() {
        Expr e = expr();
        skip_ws();
        if (pos_ != text_.size()) fail("expected operator or end of input");
        return e;
    }

private:
    [[noreturn]] void fail(const std::string& msg) const {
        std::string found = pos_ < text_.size() ? "'" + std::string(1, text_[pos_]) + "'" : "end of input";
        throw ParseError(msg + ", found " + found, pos_);
    }

    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    bool accept(char c) {
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    void expect(char c) {
        if (!accept(c)) fail(std::string("expected '") + c + "'");
    }

    Expr expr() {
        Expr lhs = term();
        for (;;) {
            if (accept('+'))
                lhs = raw::binary(Op::Add, lhs, term());
            else if (accept('-'))
                lhs = raw::binary(Op::Sub, lhs, term());
            else
                return lhs;
        }
    }

    Expr term() {
        Expr lhs = unary();
        for (;;) {
            if (accept('*'))
                lhs = raw::binary(Op::Mul, lhs, unary());
            else if (accept('/'))
                lhs = raw::binary(Op::Div, lhs, unary());
            else
                return lhs;
        }
    }

    Expr unary() {
        if (accept('-')) return raw::unary(Op::Neg, unary());
        if (accept('+')) return unary();
        return power();
    }

    Expr power() {
        Expr base = primary();
        while (accept('^')) base = raw::power(base, int_exponent());
        return base;
    }

    int int_exponent() {
        const bool paren = accept('(');
        int sign = 1;
        if (accept('-'))
            sign = -1;
        else
            accept('+');
        skip_ws();
        const std::size_t start = pos_;
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
        if (start == pos_) fail("expected integer exponent");
        if (pos_ < text_.size() && (text_[pos_] == '.' || text_[pos_] == 'e' || text_[pos_] == 'E'))
            fail("expected integer exponent");
        int value = 0;
        auto [ptr, ec] = std::from_chars(text_.data() + start, text_.data() + pos_, value);
        if (ec != std::errc()) {
            pos_ = start;
            fail("exponent out of range");
        }
        if (paren) expect(')');
        return sign * value;
    }

    Expr primary() {
        skip_ws();
        if (pos_ >= text_.size()) fail("expected expression");
        const char c = text_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier();
        if (accept('(')) {
            Expr e = expr();
            expect(')');
            return e;
        }
        fail("expected expression");
    }

    Expr number() {
        const std::size_t start = pos_;
        double value = 0.0;
        auto [ptr, ec] = std::from_chars(text_.data() + pos_, text_.data() + text_.size(), value);
        if (ec != std::errc() || ptr == text_.data() + start) fail("malformed number");
        pos_ = static_cast<std::size_t>(ptr - text_.data());
        return Expr(value);
    }

    Expr identifier() {
        const std::size_t start = pos_;
        while (pos_ < text_.size() &&
               (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
            ++pos_;
        const std::string_view id = text_.substr(start, pos_ - start);
        static const std::unordered_map<std::string_view, VarId> vars = {
            {"x1", VarId::X1}, {"x2", VarId::X2}, {"x3", VarId::X3},
            {"xi1", VarId::XI1}, {"xi2", VarId::XI2}, {"s", VarId::S}};
        static const std::unordered_map<std::string_view, Op> funcs = {
            {"sqrt", Op::Sqrt}, {"exp", Op::Exp}, {"sin", Op::Sin}, {"cos", Op::Cos}};
        if (auto it = vars.find(id); it != vars.end()) return Expr::var(it->second);
        if (id == "i") return Expr::imag_unit();
        if (id == "pi") return Expr(M_PI);
        if (auto it = funcs.find(id); it != funcs.end()) {
            expect('(');
            Expr arg = expr();
            expect(')');
            return raw::unary(it->second, arg);
        }
        pos_ = start;
        throw ParseError("unknown identifier '" + std::string(id) + "'", start);
    }

    std::string_view text_;
    std::size_t pos_ = 0;
};

// Precedence levels used by the printer.
constexpr int kSum = 1;
constexpr int kProduct = 2;
constexpr int kUnary = 3;
constexpr int kPower = 4;
constexpr int kAtom = 5;

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    std::string s(buf);
    return s;
}

class Printer {
public:
    std::string print(const Expr& e, int min_prec) {
        auto [text, prec] = render(e);
        if (prec < min_prec) return "(" + text + ")";
        return text;
    }

private:
    std::pair<std::string, int> render(const Expr& e) {
        const Node& n = e.node();
        const Expr a = n.a ? Expr(n.a) : Expr();
        const Expr b = n.b ? Expr(n.b) : Expr();
        switch (n.op) {
            case Op::Const: return render_const(n.value);
            case Op::Var: return {std::string(var_name(n.var)), kAtom};
            case Op::Neg: return {"-" + print(a, kUnary), kUnary};
            case Op::Sqrt: return {"sqrt(" + print(a, 0) + ")", kAtom};
            case Op::Exp: return {"exp(" + print(a, 0) + ")", kAtom};
            case Op::Sin: return {"sin(" + print(a, 0) + ")", kAtom};
            case Op::Cos: return {"cos(" + print(a, 0) + ")", kAtom};
            case Op::Recip: return {"1/" + print(a, kPower), kProduct};
            case Op::Add: return {print(a, kSum) + " + " + print(b, kSum), kSum};
            case Op::Sub: return {print(a, kSum) + " - " + print(b, kProduct), kSum};
            case Op::Mul: return {print(a, kProduct) + "*" + print(b, kUnary), kProduct};
            case Op::Div: return {print(a, kProduct) + "/" + print(b, kPower), kProduct};
            case Op::Pow: {
                const std::string ex = n.exponent < 0 ? "(" + std::to_string(n.exponent) + ")"
                                                      : std::to_string(n.exponent);
                return {print(a, kAtom) + "^" + ex, kPower};
            }
        }
        return {"?", kAtom};
    }

    static std::pair<std::string, int> render_const(cplx v) {
        if (v.imag() == 0.0) {
            if (v.real() < 0.0) return {format_double(v.real()), kUnary};
            return {format_double(v.real()), kAtom};
        }
        if (v.real() == 0.0) return {"(" + format_double(v.imag()) + "*i)", kAtom};
        return {"(" + format_double(v.real()) + " + " + format_double(v.imag()) + "*i)", kAtom};
    }
};

}  // namespace

Expr parse(std::string_view text) { return Parser(text).parse_all(); }

std::string to_string(const Expr& e) { return Printer().print(e, 0); }

}  // namespace anisosplit
