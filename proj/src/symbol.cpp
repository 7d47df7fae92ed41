#include "anisosplit/symbol.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "anisosplit/error.hpp"

namespace anisosplit {

PolyhomSymbol::PolyhomSymbol(int top_degree, std::vector<Expr> terms) : top_(top_degree), terms_(std::move(terms)) {}

Expr PolyhomSymbol::term(int degree) const {
    if (terms_.empty() || degree > top_ || degree < low_degree()) return Expr(0.0);
    return terms_[static_cast<std::size_t>(top_ - degree)];
}

std::vector<SymbolTerm> PolyhomSymbol::terms() const {
    std::vector<SymbolTerm> out;
    for (std::size_t k = 0; k < terms_.size(); ++k) out.push_back({terms_[k], top_ - static_cast<int>(k)});
    return out;
}

PolyhomSymbol PolyhomSymbol::truncated(int floor) const {
    if (terms_.empty() || floor > top_) return {};
    const auto keep = std::min<std::size_t>(terms_.size(), static_cast<std::size_t>(top_ - floor + 1));
    return PolyhomSymbol(top_, std::vector<Expr>(terms_.begin(), terms_.begin() + static_cast<std::ptrdiff_t>(keep)));
}

PolyhomSymbol PolyhomSymbol::padded(int floor) const {
    if (terms_.empty()) return {};
    std::vector<Expr> t = terms_;
    while (top_ - static_cast<int>(t.size()) + 1 > floor) t.emplace_back(0.0);
    return PolyhomSymbol(top_, std::move(t));
}

Expr PolyhomSymbol::sum() const {
    Expr r(0.0);
    for (const Expr& e : terms_) r = r + e;
    return r;
}

bool PolyhomSymbol::is_structurally_zero() const {
    return std::all_of(terms_.begin(), terms_.end(), [](const Expr& e) { return e.is_zero(); });
}

std::uint8_t PolyhomSymbol::var_mask() const {
    std::uint8_t m = 0;
    for (const Expr& e : terms_) m |= e.var_mask();
    return m;
}

namespace {

template <class Op>
PolyhomSymbol combine(const PolyhomSymbol& a, const PolyhomSymbol& b, Op op) {
    if (a.empty() && b.empty()) return {};
    const int top = a.empty() ? b.top_degree() : (b.empty() ? a.top_degree() : std::max(a.top_degree(), b.top_degree()));
    const int low = a.empty() ? b.low_degree() : (b.empty() ? a.low_degree() : std::min(a.low_degree(), b.low_degree()));
    std::vector<Expr> t;
    for (int d = top; d >= low; --d) t.push_back(op(a.term(d), b.term(d)));
    return PolyhomSymbol(top, std::move(t));
}

double factorial(int n) {
    double f = 1.0;
    for (int k = 2; k <= n; ++k) f *= k;
    return f;
}

// Lazily computed mixed derivatives d^b1/dv1^b1 d^b2/dv2^b2 of one term.
class DerivativeTable {
public:
    DerivativeTable(Expr base, VarId v1, VarId v2) : v1_(v1), v2_(v2) { memo_[{0, 0}] = std::move(base); }

    const Expr& get(int b1, int b2) {
        auto it = memo_.find({b1, b2});
        if (it != memo_.end()) return it->second;
        Expr d = b1 > 0 ? diff(get(b1 - 1, b2), v1_) : diff(get(b1, b2 - 1), v2_);
        return memo_.emplace(std::make_pair(b1, b2), std::move(d)).first->second;
    }

private:
    VarId v1_, v2_;
    std::map<std::pair<int, int>, Expr> memo_;
};

}  // namespace

PolyhomSymbol operator+(const PolyhomSymbol& a, const PolyhomSymbol& b) {
    return combine(a, b, [](const Expr& x, const Expr& y) { return x + y; });
}

PolyhomSymbol operator-(const PolyhomSymbol& a, const PolyhomSymbol& b) {
    return combine(a, b, [](const Expr& x, const Expr& y) { return x - y; });
}

PolyhomSymbol operator-(const PolyhomSymbol& a) {
    return a.map([](const Expr& e) { return -e; });
}

PolyhomSymbol multiply(const PolyhomSymbol& a, const Expr& factor, int degree) {
    return a.map([&](const Expr& e) { return factor * e; }, degree);
}

PolyhomSymbol simplify(const PolyhomSymbol& a) {
    return a.map([](const Expr& e) { return simplify(e); });
}

PolyhomSymbol diff_x3(const PolyhomSymbol& a) {
    return a.map([](const Expr& e) { return diff(e, VarId::X3); });
}

std::vector<std::pair<int, std::vector<Expr>>> compose_contributions(const PolyhomSymbol& p, const PolyhomSymbol& q,
                                                                     int floor, std::optional<int> max_beta,
                                                                     std::optional<int> ceiling) {
    std::vector<std::pair<int, std::vector<Expr>>> out;
    if (p.empty() || q.empty()) return out;
    const int full_top = p.top_degree() + q.top_degree();
    const int top = ceiling ? std::min(*ceiling, full_top) : full_top;
    if (floor > top) return out;
    const int beta_cap = max_beta.value_or(full_top - floor);
    for (int d = top; d >= floor; --d) out.emplace_back(d, std::vector<Expr>{});

    std::vector<DerivativeTable> pxi, qx;
    for (const auto& t : p.terms()) pxi.emplace_back(t.expr, VarId::XI1, VarId::XI2);
    for (const auto& t : q.terms()) qx.emplace_back(t.expr, VarId::X1, VarId::X2);

    const auto pt = p.terms();
    const auto qt = q.terms();
    for (std::size_t a = 0; a < pt.size(); ++a) {
        if (pt[a].expr.is_zero()) continue;
        for (std::size_t b = 0; b < qt.size(); ++b) {
            if (qt[b].expr.is_zero()) continue;
            for (int order = 0; order <= beta_cap; ++order) {
                const int d = pt[a].degree + qt[b].degree - order;
                if (d < floor) break;
                if (d > top) continue;
                if (order > 0 && (!(pt[a].expr.var_mask() & kWavenumberMask) ||
                                  !(qt[b].expr.var_mask() & kTransverseMask)))
                    break;
                // (1/i)^|beta| = (-i)^|beta|
                cplx phase(1.0);
                for (int k = 0; k < order; ++k) phase *= cplx(0.0, -1.0);
                for (int b1 = order; b1 >= 0; --b1) {
                    const int b2 = order - b1;
                    const Expr& dp = pxi[a].get(b1, b2);
                    if (dp.is_zero()) continue;
                    const Expr& dq = qx[b].get(b1, b2);
                    if (dq.is_zero()) continue;
                    const cplx coef = phase / (factorial(b1) * factorial(b2));
                    out[static_cast<std::size_t>(top - d)].second.push_back(Expr(coef) * dp * dq);
                }
            }
        }
    }
    return out;
}

PolyhomSymbol compose(const PolyhomSymbol& p, const PolyhomSymbol& q, int floor, std::optional<int> max_beta,
                      std::optional<int> ceiling) {
    const auto parts = compose_contributions(p, q, floor, max_beta, ceiling);
    if (parts.empty()) return {};
    std::vector<Expr> terms;
    for (const auto& [d, list] : parts) {
        Expr s(0.0);
        for (const Expr& c : list) s = s + c;
        terms.push_back(simplify(s));
    }
    return PolyhomSymbol(parts.front().first, std::move(terms));
}

SymbolMatrix22 compose(const SymbolMatrix22& a, const SymbolMatrix22& b, int floor) {
    SymbolMatrix22 r;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) r(i, j) = compose(a(i, 0), b(0, j), floor) + compose(a(i, 1), b(1, j), floor);
    return r;
}

SymbolMatrix22 operator-(const SymbolMatrix22& a, const SymbolMatrix22& b) {
    SymbolMatrix22 r;
    for (int k = 0; k < 4; ++k) r.entries[k] = a.entries[k] - b.entries[k];
    return r;
}

SymbolMatrix22 diff_x3(const SymbolMatrix22& a) {
    SymbolMatrix22 r;
    for (int k = 0; k < 4; ++k) r.entries[k] = diff_x3(a.entries[k]);
    return r;
}

SymbolMatrix22 systems_symbols(const MediumSpec& m) { return systems_symbols(m, schur(m)); }

SymbolMatrix22 systems_symbols(const MediumSpec& m, const SchurData& sd) {
    const Expr i = Expr::imag_unit();
    const Expr s = Expr::s();
    const Expr xi[2] = {Expr::xi1(), Expr::xi2()};
    const VarId dx[2] = {VarId::X1, VarId::X2};
    const Expr& a33 = m.alpha(2, 2);

    Expr a11_1, a11_0, a22_1, a12_0;
    for (int mu = 0; mu < 2; ++mu) {
        const Expr c = simplify(m.alpha(mu, 2) / a33);
        a11_1 = a11_1 + i * xi[mu] * c;
        a11_0 = a11_0 + diff(c, dx[mu]);
        a22_1 = a22_1 + i * xi[mu] * simplify(m.alpha(2, mu) / a33);
        for (int nu = 0; nu < 2; ++nu) a12_0 = a12_0 + diff(sd.Q(mu, nu), dx[mu]) * i * xi[nu];
    }
    const Expr a12_1 = s * m.kappa() + quadratic_form(sd.q) / s;
    a12_0 = -(a12_0 / s);
    const Expr a21_1 = s / a33;

    SymbolMatrix22 a;
    a(0, 0) = PolyhomSymbol(1, {simplify(a11_1), simplify(a11_0)});
    a(0, 1) = PolyhomSymbol(1, {simplify(a12_1), simplify(a12_0)});
    a(1, 0) = PolyhomSymbol(1, {simplify(a21_1), Expr(0.0)});
    a(1, 1) = PolyhomSymbol(1, {simplify(a22_1), Expr(0.0)});
    return a;
}

std::vector<Point> random_probes(int count, std::uint64_t seed, const ProbeRegion& region) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<Point> pts;
    pts.reserve(static_cast<std::size_t>(count));
    for (int n = 0; n < count; ++n) {
        Point p;
        for (int a = 0; a < 3; ++a)
            p.set(static_cast<VarId>(a), region.box.lo[a] + (region.box.hi[a] - region.box.lo[a]) * u(rng));
        p.set(VarId::XI1, region.xi_max * (2.0 * u(rng) - 1.0));
        p.set(VarId::XI2, region.xi_max * (2.0 * u(rng) - 1.0));
        p.set(VarId::S, cplx(region.s_re_min + (region.s_re_max - region.s_re_min) * u(rng),
                             region.s_im_max * (2.0 * u(rng) - 1.0)));
        pts.push_back(p);
    }
    return pts;
}

Point scaled(const Point& p, double lambda) {
    Point q = p;
    q.set(VarId::XI1, lambda * p.get(VarId::XI1));
    q.set(VarId::XI2, lambda * p.get(VarId::XI2));
    q.set(VarId::S, lambda * p.get(VarId::S));
    return q;
}

HomogeneityReport homogeneity_check(const SymbolTerm& t, int trials, std::uint64_t seed, const ProbeRegion& region) {
    if (trials < 1) throw PreconditionError("homogeneity_check: trials must be >= 1");
    HomogeneityReport report;
    const Tape tape(t.expr);
    std::vector<cplx> scratch;
    for (const Point& p : random_probes(trials, seed, region)) {
        const cplx base = tape.eval1(p, scratch);
        for (double lambda : {2.0, 5.0, 10.0}) {
            const cplx expected = std::pow(lambda, t.degree) * base;
            const cplx got = tape.eval1(scaled(p, lambda), scratch);
            const double scale = std::abs(expected);
            const double err = std::abs(got - expected);
            const double rel = scale > 0.0 ? err / scale : (err == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
            report.max_error = std::max(report.max_error, rel);
            ++report.evaluations;
        }
    }
    return report;
}

}  // namespace anisosplit
