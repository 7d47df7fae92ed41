#pragma once

// Symbolic expressions over the spatial coordinates x1..x3, the transverse
// wavenumbers xi1, xi2 and the Laplace parameter s.
//
// Nodes are hash-consed: structurally identical subtrees share one node, so
// an Expr is really a DAG and pointer equality means structural equality.
// Every operation that walks a DAG memoizes per call, which keeps the cost
// linear in the number of distinct nodes instead of the tree size.

#include <array>
#include <complex>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace anisosplit {

using cplx = std::complex<double>;

enum class VarId : std::uint8_t { X1 = 0, X2, X3, XI1, XI2, S };

inline constexpr int kNumVars = 6;

constexpr std::uint8_t var_bit(VarId v) { return static_cast<std::uint8_t>(1u << static_cast<int>(v)); }

inline constexpr std::uint8_t kSpatialMask = var_bit(VarId::X1) | var_bit(VarId::X2) | var_bit(VarId::X3);
inline constexpr std::uint8_t kTransverseMask = var_bit(VarId::X1) | var_bit(VarId::X2);
inline constexpr std::uint8_t kWavenumberMask = var_bit(VarId::XI1) | var_bit(VarId::XI2);
inline constexpr std::uint8_t kHomogeneityMask = kWavenumberMask | var_bit(VarId::S);

std::string_view var_name(VarId v);

/// Homogeneity variables are xi1, xi2 and s.
constexpr bool is_homogeneity_var(VarId v) { return (var_bit(v) & kHomogeneityMask) != 0; }

enum class Op : std::uint8_t { Const, Var, Neg, Sqrt, Exp, Sin, Cos, Recip, Add, Sub, Mul, Div, Pow };

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Node {
    Op op;
    VarId var;
    int exponent;
    cplx value;
    NodePtr a;
    NodePtr b;
    std::size_t hash;
    std::uint8_t var_mask;
};

/// Immutable handle to an interned expression node.
class Expr {
public:
    Expr();  // constant 0
    Expr(double v);  // NOLINT(google-explicit-constructor)
    Expr(cplx v);    // NOLINT(google-explicit-constructor)
    explicit Expr(NodePtr n) : node_(std::move(n)) {}

    static Expr var(VarId v);
    static Expr x1() { return var(VarId::X1); }
    static Expr x2() { return var(VarId::X2); }
    static Expr x3() { return var(VarId::X3); }
    static Expr xi1() { return var(VarId::XI1); }
    static Expr xi2() { return var(VarId::XI2); }
    static Expr s() { return var(VarId::S); }
    static Expr imag_unit() { return Expr(cplx(0.0, 1.0)); }

    const Node& node() const { return *node_; }
    const NodePtr& ptr() const { return node_; }
    Op op() const { return node_->op; }
    std::uint8_t var_mask() const { return node_->var_mask; }
    bool depends_on(VarId v) const { return (node_->var_mask & var_bit(v)) != 0; }

    bool is_const() const { return node_->op == Op::Const; }
    bool is_zero() const;
    bool is_one() const;

    /// Structural identity (nodes are interned).
    bool same(const Expr& o) const { return node_ == o.node_; }

    /// Number of distinct nodes reachable from this root.
    std::size_t dag_size() const;

private:
    NodePtr node_;
};

// Simplifying constructors: fold constants and prune 0/1 identities as the
// tree is built. These are what the symbol calculus uses.
Expr operator+(const Expr& a, const Expr& b);
Expr operator-(const Expr& a, const Expr& b);
Expr operator*(const Expr& a, const Expr& b);
Expr operator/(const Expr& a, const Expr& b);
Expr operator-(const Expr& a);
Expr pow(const Expr& a, int n);
Expr sqrt(const Expr& a);
Expr exp(const Expr& a);
Expr sin(const Expr& a);
Expr cos(const Expr& a);
Expr recip(const Expr& a);

/// Verbatim constructors that build exactly the requested node. The parser
/// uses these so that `parse` returns the tree as written.
namespace raw {
Expr unary(Op op, const Expr& a);
Expr binary(Op op, const Expr& a, const Expr& b);
Expr power(const Expr& a, int n);
}  // namespace raw

/// Binding of variables to complex values.
class Point {
public:
    Point() = default;
    Point& set(VarId v, cplx value);
    cplx get(VarId v) const { return values_[static_cast<int>(v)]; }
    bool bound(VarId v) const { return (mask_ & var_bit(v)) != 0; }
    std::uint8_t mask() const { return mask_; }

    static Point spatial(double x1, double x2, double x3);

private:
    std::array<cplx, kNumVars> values_{};
    std::uint8_t mask_ = 0;
};

/// How sqrt treats arguments on the closed negative real axis.
enum class BranchPolicy {
    Strict,     // EvalError::BranchCut
    Principal,  // std::sqrt, upper lip of the cut
};

/// Linearized DAG for repeated evaluation. A Tape is immutable; scratch
/// storage is supplied by the caller, so one Tape can be evaluated from
/// many threads at once.
class Tape {
public:
    explicit Tape(std::span<const Expr> roots);
    explicit Tape(const Expr& root);

    std::size_t num_roots() const { return roots_.size(); }
    std::size_t size() const { return code_.size(); }
    std::uint8_t var_mask() const { return var_mask_; }

    /// Evaluates all roots; `scratch` is resized as needed.
    void eval(const Point& p, std::vector<cplx>& scratch, std::span<cplx> out,
              BranchPolicy policy = BranchPolicy::Strict) const;
    cplx eval1(const Point& p, std::vector<cplx>& scratch, BranchPolicy policy = BranchPolicy::Strict) const;

private:
    struct Instr {
        Op op;
        VarId var;
        int exponent;
        std::uint32_t a;
        std::uint32_t b;
        cplx value;
    };
    std::vector<Instr> code_;
    std::vector<std::uint32_t> roots_;
    std::uint8_t var_mask_ = 0;
};

Expr parse(std::string_view text);
std::string to_string(const Expr& e);

cplx eval(const Expr& e, const Point& p, BranchPolicy policy = BranchPolicy::Strict);

/// Exact symbolic derivative.
Expr diff(const Expr& e, VarId v);
/// Repeated derivative d^n/dv^n.
Expr diff(const Expr& e, VarId v, int n);

/// Best-effort rewriting: constant folding, identity pruning, collection of
/// like terms and like factors. Not a canonical form.
Expr simplify(const Expr& e);

/// Replaces every occurrence of `v` by `value`.
Expr substitute(const Expr& e, VarId v, const Expr& value);

}  // namespace anisosplit
