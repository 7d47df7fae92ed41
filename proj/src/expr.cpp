#include "anisosplit/expr.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <functional>
#include <mutex>
#include <unordered_map>

#include "anisosplit/error.hpp"

namespace anisosplit {

namespace {

std::size_t hash_combine(std::size_t seed, std::size_t v) {
    return seed ^ (v + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2));
}

std::size_t hash_double(double d) { return std::hash<std::uint64_t>{}(std::bit_cast<std::uint64_t>(d)); }

std::size_t node_hash(Op op, VarId var, int exponent, cplx value, const NodePtr& a, const NodePtr& b) {
    std::size_t h = static_cast<std::size_t>(op) * 1000003u;
    h = hash_combine(h, static_cast<std::size_t>(var));
    h = hash_combine(h, static_cast<std::size_t>(exponent));
    h = hash_combine(h, hash_double(value.real()));
    h = hash_combine(h, hash_double(value.imag()));
    h = hash_combine(h, a ? a->hash : 0x51u);
    h = hash_combine(h, b ? b->hash : 0x73u);
    return h;
}

// Global intern table. Entries are weak so that unused expressions are
// released; expired entries are swept when the table doubles.
class InternTable {
public:
    NodePtr intern(Op op, VarId var, int exponent, cplx value, NodePtr a, NodePtr b) {
        if (value.real() == 0.0) value.real(0.0);  // fold -0.0
        if (value.imag() == 0.0) value.imag(0.0);
        const std::size_t h = node_hash(op, var, exponent, value, a, b);
        std::lock_guard lock(mutex_);
        auto [lo, hi] = table_.equal_range(h);
        for (auto it = lo; it != hi;) {
            NodePtr n = it->second.lock();
            if (!n) {
                it = table_.erase(it);
                continue;
            }
            if (n->op == op && n->var == var && n->exponent == exponent &&
                std::bit_cast<std::uint64_t>(n->value.real()) == std::bit_cast<std::uint64_t>(value.real()) &&
                std::bit_cast<std::uint64_t>(n->value.imag()) == std::bit_cast<std::uint64_t>(value.imag()) &&
                n->a == a && n->b == b) {
                return n;
            }
            ++it;
        }
        std::uint8_t mask = 0;
        if (op == Op::Var) mask = var_bit(var);
        if (a) mask |= a->var_mask;
        if (b) mask |= b->var_mask;
        auto n = std::make_shared<const Node>(Node{op, var, exponent, value, std::move(a), std::move(b), h, mask});
        table_.emplace(h, n);
        if (table_.size() > sweep_at_) sweep();
        return n;
    }

private:
    void sweep() {
        std::erase_if(table_, [](const auto& kv) { return kv.second.expired(); });
        sweep_at_ = std::max<std::size_t>(1u << 16, 2 * table_.size());
    }

    std::mutex mutex_;
    std::unordered_multimap<std::size_t, std::weak_ptr<const Node>> table_;
    std::size_t sweep_at_ = 1u << 16;
};

InternTable& table() {
    static InternTable t;
    return t;
}

NodePtr make_const(cplx v) { return table().intern(Op::Const, VarId::X1, 0, v, nullptr, nullptr); }

NodePtr make(Op op, const Expr& a) { return table().intern(op, VarId::X1, 0, {}, a.ptr(), nullptr); }

NodePtr make(Op op, const Expr& a, const Expr& b) { return table().intern(op, VarId::X1, 0, {}, a.ptr(), b.ptr()); }

cplx ipow(cplx base, int n) {
    if (n < 0) return cplx(1.0) / ipow(base, -n);
    cplx result(1.0);
    while (n > 0) {
        if (n & 1) result *= base;
        base *= base;
        n >>= 1;
    }
    return result;
}

bool on_branch_cut(cplx u) { return u.imag() == 0.0 && u.real() <= 0.0; }

cplx const_value(const Expr& e) { return e.node().value; }

}  // namespace

std::string_view var_name(VarId v) {
    switch (v) {
        case VarId::X1: return "x1";
        case VarId::X2: return "x2";
        case VarId::X3: return "x3";
        case VarId::XI1: return "xi1";
        case VarId::XI2: return "xi2";
        case VarId::S: return "s";
    }
    return "?";
}

Expr::Expr() : node_(make_const(0.0)) {}
Expr::Expr(double v) : node_(make_const(v)) {}
Expr::Expr(cplx v) : node_(make_const(v)) {}

Expr Expr::var(VarId v) { return Expr(table().intern(Op::Var, v, 0, {}, nullptr, nullptr)); }

bool Expr::is_zero() const { return is_const() && node_->value == cplx(0.0); }
bool Expr::is_one() const { return is_const() && node_->value == cplx(1.0); }

std::size_t Expr::dag_size() const {
    std::unordered_map<const Node*, bool> seen;
    std::vector<const Node*> stack{node_.get()};
    while (!stack.empty()) {
        const Node* n = stack.back();
        stack.pop_back();
        if (!seen.emplace(n, true).second) continue;
        if (n->a) stack.push_back(n->a.get());
        if (n->b) stack.push_back(n->b.get());
    }
    return seen.size();
}

// ---------------------------------------------------------------------------
// Simplifying constructors

Expr operator-(const Expr& a) {
    if (a.is_const()) return Expr(-const_value(a));
    if (a.op() == Op::Neg) return Expr(a.node().a);
    if (a.op() == Op::Sub) return Expr(make(Op::Sub, Expr(a.node().b), Expr(a.node().a)));
    return Expr(make(Op::Neg, a));
}

Expr operator+(const Expr& a, const Expr& b) {
    if (a.is_zero()) return b;
    if (b.is_zero()) return a;
    if (a.is_const() && b.is_const()) return Expr(const_value(a) + const_value(b));
    if (a.same(b)) return Expr(2.0) * a;
    if (b.op() == Op::Neg) return a - Expr(b.node().a);
    if (a.op() == Op::Neg) return b - Expr(a.node().a);
    return Expr(make(Op::Add, a, b));
}

Expr operator-(const Expr& a, const Expr& b) {
    if (b.is_zero()) return a;
    if (a.is_zero()) return -b;
    if (a.is_const() && b.is_const()) return Expr(const_value(a) - const_value(b));
    if (a.same(b)) return Expr(0.0);
    if (b.op() == Op::Neg) return a + Expr(b.node().a);
    return Expr(make(Op::Sub, a, b));
}

Expr operator*(const Expr& a, const Expr& b) {
    if (a.is_zero() || b.is_zero()) return Expr(0.0);
    if (a.is_one()) return b;
    if (b.is_one()) return a;
    if (a.is_const() && b.is_const()) return Expr(const_value(a) * const_value(b));
    if (b.is_const()) return b * a;
    if (a.is_const()) {
        const cplx c = const_value(a);
        if (c == cplx(-1.0)) return -b;
        if (b.op() == Op::Mul && Expr(b.node().a).is_const())
            return Expr(c * b.node().a->value) * Expr(b.node().b);
        if (b.op() == Op::Neg) return Expr(-c) * Expr(b.node().a);
    }
    if (a.op() == Op::Neg) return -(Expr(a.node().a) * b);
    if (b.op() == Op::Neg) return -(a * Expr(b.node().a));
    if (a.same(b)) return pow(a, 2);
    return Expr(make(Op::Mul, a, b));
}

Expr operator/(const Expr& a, const Expr& b) {
    if (b.is_one()) return a;
    if (a.is_zero()) return Expr(0.0);
    if (b.is_const() && const_value(b) != cplx(0.0)) {
        if (a.is_const()) return Expr(const_value(a) / const_value(b));
        return Expr(cplx(1.0) / const_value(b)) * a;
    }
    if (a.same(b)) return Expr(1.0);
    if (a.is_one()) return recip(b);
    return Expr(make(Op::Div, a, b));
}

Expr pow(const Expr& a, int n) {
    if (n == 0) return Expr(1.0);
    if (n == 1) return a;
    if (a.is_const() && !(const_value(a) == cplx(0.0) && n < 0)) return Expr(ipow(const_value(a), n));
    if (a.op() == Op::Pow) return pow(Expr(a.node().a), a.node().exponent * n);
    if (n == -1) return recip(a);
    return Expr(table().intern(Op::Pow, VarId::X1, n, {}, a.ptr(), nullptr));
}

Expr recip(const Expr& a) {
    if (a.is_const() && const_value(a) != cplx(0.0)) return Expr(cplx(1.0) / const_value(a));
    if (a.op() == Op::Recip) return Expr(a.node().a);
    return Expr(make(Op::Recip, a));
}

Expr sqrt(const Expr& a) {
    if (a.is_const() && !on_branch_cut(const_value(a))) return Expr(std::sqrt(const_value(a)));
    return Expr(make(Op::Sqrt, a));
}

Expr exp(const Expr& a) {
    if (a.is_const()) return Expr(std::exp(const_value(a)));
    return Expr(make(Op::Exp, a));
}

Expr sin(const Expr& a) {
    if (a.is_const()) return Expr(std::sin(const_value(a)));
    return Expr(make(Op::Sin, a));
}

Expr cos(const Expr& a) {
    if (a.is_const()) return Expr(std::cos(const_value(a)));
    return Expr(make(Op::Cos, a));
}

namespace raw {
Expr unary(Op op, const Expr& a) { return Expr(make(op, a)); }
Expr binary(Op op, const Expr& a, const Expr& b) { return Expr(make(op, a, b)); }
Expr power(const Expr& a, int n) { return Expr(table().intern(Op::Pow, VarId::X1, n, {}, a.ptr(), nullptr)); }
}  // namespace raw

// ---------------------------------------------------------------------------
// Point / Tape / eval

Point& Point::set(VarId v, cplx value) {
    values_[static_cast<int>(v)] = value;
    mask_ |= var_bit(v);
    return *this;
}

Point Point::spatial(double x1, double x2, double x3) {
    Point p;
    p.set(VarId::X1, x1).set(VarId::X2, x2).set(VarId::X3, x3);
    return p;
}

Tape::Tape(const Expr& root) : Tape(std::span<const Expr>(&root, 1)) {}

Tape::Tape(std::span<const Expr> roots) {
    std::unordered_map<const Node*, std::uint32_t> index;
    // Iterative post-order so deep sums do not exhaust the stack.
    struct Frame {
        const Node* n;
        bool expanded;
    };
    std::vector<Frame> stack;
    for (const Expr& r : roots) {
        stack.push_back({&r.node(), false});
        while (!stack.empty()) {
            Frame f = stack.back();
            stack.pop_back();
            if (index.count(f.n)) continue;
            if (!f.expanded) {
                stack.push_back({f.n, true});
                if (f.n->b && !index.count(f.n->b.get())) stack.push_back({f.n->b.get(), false});
                if (f.n->a && !index.count(f.n->a.get())) stack.push_back({f.n->a.get(), false});
                continue;
            }
            Instr in{f.n->op, f.n->var, f.n->exponent, 0, 0, f.n->value};
            if (f.n->a) in.a = index.at(f.n->a.get());
            if (f.n->b) in.b = index.at(f.n->b.get());
            index.emplace(f.n, static_cast<std::uint32_t>(code_.size()));
            code_.push_back(in);
        }
        roots_.push_back(index.at(&r.node()));
        var_mask_ |= r.var_mask();
    }
}

void Tape::eval(const Point& p, std::vector<cplx>& scratch, std::span<cplx> out, BranchPolicy policy) const {
    const std::uint8_t missing = static_cast<std::uint8_t>(var_mask_ & ~p.mask());
    if (missing) {
        for (int v = 0; v < kNumVars; ++v) {
            if (missing & (1u << v)) {
                throw EvalError(EvalError::Kind::UnboundVariable,
                                "unbound variable '" + std::string(var_name(static_cast<VarId>(v))) + "'");
            }
        }
    }
    scratch.resize(code_.size());
    cplx* val = scratch.data();
    for (std::size_t k = 0; k < code_.size(); ++k) {
        const Instr& in = code_[k];
        switch (in.op) {
            case Op::Const: val[k] = in.value; break;
            case Op::Var: val[k] = p.get(in.var); break;
            case Op::Neg: val[k] = -val[in.a]; break;
            case Op::Sqrt: {
                const cplx u = val[in.a];
                if (policy == BranchPolicy::Strict && on_branch_cut(u)) {
                    throw EvalError(EvalError::Kind::BranchCut,
                                    "sqrt argument " + std::to_string(u.real()) + " lies on (-inf, 0]");
                }
                val[k] = std::sqrt(u);
                break;
            }
            case Op::Exp: val[k] = std::exp(val[in.a]); break;
            case Op::Sin: val[k] = std::sin(val[in.a]); break;
            case Op::Cos: val[k] = std::cos(val[in.a]); break;
            case Op::Recip:
                if (val[in.a] == cplx(0.0)) throw EvalError(EvalError::Kind::DivisionByZero, "division by zero");
                val[k] = cplx(1.0) / val[in.a];
                break;
            case Op::Add: val[k] = val[in.a] + val[in.b]; break;
            case Op::Sub: val[k] = val[in.a] - val[in.b]; break;
            case Op::Mul: val[k] = val[in.a] * val[in.b]; break;
            case Op::Div:
                if (val[in.b] == cplx(0.0)) throw EvalError(EvalError::Kind::DivisionByZero, "division by zero");
                val[k] = val[in.a] / val[in.b];
                break;
            case Op::Pow:
                if (in.exponent < 0 && val[in.a] == cplx(0.0))
                    throw EvalError(EvalError::Kind::DivisionByZero, "division by zero");
                val[k] = ipow(val[in.a], in.exponent);
                break;
        }
    }
    for (std::size_t r = 0; r < roots_.size(); ++r) {
        const cplx v = val[roots_[r]];
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
            throw EvalError(EvalError::Kind::NonFinite, "non-finite value");
        out[r] = v;
    }
}

cplx Tape::eval1(const Point& p, std::vector<cplx>& scratch, BranchPolicy policy) const {
    cplx out;
    eval(p, scratch, std::span<cplx>(&out, 1), policy);
    return out;
}

cplx eval(const Expr& e, const Point& p, BranchPolicy policy) {
    std::vector<cplx> scratch;
    return Tape(e).eval1(p, scratch, policy);
}

// ---------------------------------------------------------------------------
// diff

namespace {

class Differentiator {
public:
    explicit Differentiator(VarId v) : v_(v) {}

    Expr operator()(const Expr& e) {
        if (!e.depends_on(v_)) return Expr(0.0);
        if (auto it = memo_.find(&e.node()); it != memo_.end()) return it->second;
        Expr d = compute(e);
        memo_.emplace(&e.node(), d);
        keep_.push_back(e);
        return d;
    }

private:
    Expr compute(const Expr& e) {
        const Node& n = e.node();
        const Expr a = n.a ? Expr(n.a) : Expr();
        const Expr b = n.b ? Expr(n.b) : Expr();
        switch (n.op) {
            case Op::Const: return Expr(0.0);
            case Op::Var: return Expr(n.var == v_ ? 1.0 : 0.0);
            case Op::Neg: return -(*this)(a);
            case Op::Sqrt: return (*this)(a) / (Expr(2.0) * e);
            case Op::Exp: return (*this)(a) * e;
            case Op::Sin: return (*this)(a) * cos(a);
            case Op::Cos: return -((*this)(a) * sin(a));
            case Op::Recip: return -((*this)(a) * pow(e, 2));
            case Op::Add: return (*this)(a) + (*this)(b);
            case Op::Sub: return (*this)(a) - (*this)(b);
            case Op::Mul: return (*this)(a) * b + a * (*this)(b);
            case Op::Div: return ((*this)(a) - e * (*this)(b)) / b;
            case Op::Pow: return Expr(static_cast<double>(n.exponent)) * pow(a, n.exponent - 1) * (*this)(a);
        }
        return Expr(0.0);
    }

    VarId v_;
    std::unordered_map<const Node*, Expr> memo_;
    std::vector<Expr> keep_;  // pins memo keys for the lifetime of the call
};

}  // namespace

Expr diff(const Expr& e, VarId v) { return Differentiator(v)(e); }

Expr diff(const Expr& e, VarId v, int n) {
    Expr r = e;
    for (int k = 0; k < n; ++k) r = diff(r, v);
    return r;
}

// ---------------------------------------------------------------------------
// simplify

namespace {

constexpr std::size_t kMaxFlatten = 512;

class Simplifier {
public:
    Expr operator()(const Expr& e) {
        if (auto it = memo_.find(&e.node()); it != memo_.end()) return it->second;
        Expr r = compute(e);
        memo_.emplace(&e.node(), r);
        keep_.push_back(e);
        return r;
    }

private:
    Expr compute(const Expr& e) {
        const Node& n = e.node();
        switch (n.op) {
            case Op::Const:
            case Op::Var: return e;
            case Op::Sqrt: return sqrt((*this)(Expr(n.a)));
            case Op::Exp: return exp((*this)(Expr(n.a)));
            case Op::Sin: return sin((*this)(Expr(n.a)));
            case Op::Cos: return cos((*this)(Expr(n.a)));
            case Op::Add:
            case Op::Sub:
            case Op::Neg: return collect_sum(e);
            case Op::Mul:
            case Op::Div:
            case Op::Recip:
            case Op::Pow: return collect_product(e);
        }
        return e;
    }

    struct SumTerm {
        cplx coef;
        Expr term;
    };

    void flatten_sum(const Expr& e, cplx sign, cplx& constant, std::vector<SumTerm>& terms) {
        const Node& n = e.node();
        if (terms.size() < kMaxFlatten) {
            switch (n.op) {
                case Op::Add:
                    flatten_sum(Expr(n.a), sign, constant, terms);
                    flatten_sum(Expr(n.b), sign, constant, terms);
                    return;
                case Op::Sub:
                    flatten_sum(Expr(n.a), sign, constant, terms);
                    flatten_sum(Expr(n.b), -sign, constant, terms);
                    return;
                case Op::Neg: flatten_sum(Expr(n.a), -sign, constant, terms); return;
                default: break;
            }
        }
        const Expr s = (*this)(e);
        if (s.op() == Op::Add || s.op() == Op::Sub || s.op() == Op::Neg) {
            if (!s.same(e) && terms.size() < kMaxFlatten) {
                flatten_sum(s, sign, constant, terms);
                return;
            }
        }
        if (s.is_const()) {
            constant += sign * s.node().value;
        } else if (s.op() == Op::Mul && s.node().a->op == Op::Const) {
            terms.push_back({sign * s.node().a->value, Expr(s.node().b)});
        } else {
            terms.push_back({sign, s});
        }
    }

    Expr collect_sum(const Expr& e) {
        cplx constant(0.0);
        std::vector<SumTerm> flat;
        flatten_sum(e, cplx(1.0), constant, flat);
        std::vector<SumTerm> grouped;
        std::unordered_map<const Node*, std::size_t> slot;
        for (auto& t : flat) {
            auto [it, inserted] = slot.emplace(&t.term.node(), grouped.size());
            if (inserted)
                grouped.push_back(t);
            else
                grouped[it->second].coef += t.coef;
        }
        Expr result(0.0);
        for (const auto& t : grouped) {
            if (t.coef == cplx(0.0)) continue;
            result = result + Expr(t.coef) * t.term;
        }
        return result + Expr(constant);
    }

    struct Factor {
        Expr base;
        int exponent;
    };

    // Returns false when the product cannot be flattened safely (e.g. a
    // constant zero denominator), in which case the node is kept as is.
    bool flatten_product(const Expr& e, int power, cplx& coef, std::vector<Factor>& factors) {
        const Node& n = e.node();
        if (factors.size() < kMaxFlatten) {
            switch (n.op) {
                case Op::Mul:
                    return flatten_product(Expr(n.a), power, coef, factors) &&
                           flatten_product(Expr(n.b), power, coef, factors);
                case Op::Div:
                    return flatten_product(Expr(n.a), power, coef, factors) &&
                           flatten_product(Expr(n.b), -power, coef, factors);
                case Op::Recip: return flatten_product(Expr(n.a), -power, coef, factors);
                case Op::Pow: return flatten_product(Expr(n.a), power * n.exponent, coef, factors);
                case Op::Neg:
                    if (power % 2 != 0) coef = -coef;
                    return flatten_product(Expr(n.a), power, coef, factors);
                default: break;
            }
        }
        const Expr s = (*this)(e);
        if (s.is_const()) {
            if (s.node().value == cplx(0.0) && power < 0) return false;
            coef *= ipow(s.node().value, power);
            return true;
        }
        if ((s.op() == Op::Mul || s.op() == Op::Div || s.op() == Op::Recip || s.op() == Op::Pow ||
             s.op() == Op::Neg) &&
            !s.same(e) && factors.size() < kMaxFlatten) {
            return flatten_product(s, power, coef, factors);
        }
        factors.push_back({s, power});
        return true;
    }

    Expr collect_product(const Expr& e) {
        cplx coef(1.0);
        std::vector<Factor> flat;
        if (!flatten_product(e, 1, coef, flat)) {
            const Node& n = e.node();
            const Expr a = n.a ? (*this)(Expr(n.a)) : Expr();
            const Expr b = n.b ? (*this)(Expr(n.b)) : Expr();
            return Expr(table().intern(n.op, n.var, n.exponent, n.value, a.ptr(), n.b ? b.ptr() : nullptr));
        }
        if (coef == cplx(0.0)) return Expr(0.0);
        std::vector<Factor> grouped;
        std::unordered_map<const Node*, std::size_t> slot;
        for (auto& f : flat) {
            auto [it, inserted] = slot.emplace(&f.base.node(), grouped.size());
            if (inserted)
                grouped.push_back(f);
            else
                grouped[it->second].exponent += f.exponent;
        }
        // Order factors by structural hash so that equal products built in
        // different orders meet as the same node.
        std::stable_sort(grouped.begin(), grouped.end(),
                         [](const Factor& x, const Factor& y) { return x.base.node().hash < y.base.node().hash; });
        Expr num(1.0);
        Expr den(1.0);
        for (const auto& f : grouped) {
            if (f.exponent > 0) num = num * pow(f.base, f.exponent);
            if (f.exponent < 0) den = den * pow(f.base, -f.exponent);
        }
        Expr r = den.is_one() ? num : (num.is_one() ? recip(den) : num / den);
        return Expr(coef) * r;
    }

    std::unordered_map<const Node*, Expr> memo_;
    std::vector<Expr> keep_;
};

class Substituter {
public:
    Substituter(VarId v, Expr value) : v_(v), value_(std::move(value)) {}

    Expr operator()(const Expr& e) {
        if (!e.depends_on(v_)) return e;
        if (auto it = memo_.find(&e.node()); it != memo_.end()) return it->second;
        const Node& n = e.node();
        Expr r;
        switch (n.op) {
            case Op::Const: r = e; break;
            case Op::Var: r = n.var == v_ ? value_ : e; break;
            case Op::Neg: r = -(*this)(Expr(n.a)); break;
            case Op::Sqrt: r = sqrt((*this)(Expr(n.a))); break;
            case Op::Exp: r = exp((*this)(Expr(n.a))); break;
            case Op::Sin: r = sin((*this)(Expr(n.a))); break;
            case Op::Cos: r = cos((*this)(Expr(n.a))); break;
            case Op::Recip: r = recip((*this)(Expr(n.a))); break;
            case Op::Add: r = (*this)(Expr(n.a)) + (*this)(Expr(n.b)); break;
            case Op::Sub: r = (*this)(Expr(n.a)) - (*this)(Expr(n.b)); break;
            case Op::Mul: r = (*this)(Expr(n.a)) * (*this)(Expr(n.b)); break;
            case Op::Div: r = (*this)(Expr(n.a)) / (*this)(Expr(n.b)); break;
            case Op::Pow: r = pow((*this)(Expr(n.a)), n.exponent); break;
        }
        memo_.emplace(&n, r);
        keep_.push_back(e);
        return r;
    }

private:
    VarId v_;
    Expr value_;
    std::unordered_map<const Node*, Expr> memo_;
    std::vector<Expr> keep_;
};

}  // namespace

Expr simplify(const Expr& e) { return Simplifier()(e); }

Expr substitute(const Expr& e, VarId v, const Expr& value) { return Substituter(v, value)(e); }

}  // namespace anisosplit
