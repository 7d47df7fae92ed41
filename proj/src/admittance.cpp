#include "anisosplit/admittance.hpp"

#include <map>
#include <string>

#include "anisosplit/error.hpp"

namespace anisosplit {

namespace {

const Expr kI = Expr::imag_unit();

// c_mu = alpha_mu3 / alpha33 and d_mu = alpha_3mu / alpha33.
struct Coupling {
    Expr c[2];
    Expr d[2];
    Expr inv_a33;
};

Coupling coupling(const MediumSpec& m) {
    Coupling k;
    k.inv_a33 = simplify(recip(m.alpha(2, 2)));
    for (int mu = 0; mu < 2; ++mu) {
        k.c[mu] = simplify(m.alpha(mu, 2) * k.inv_a33);
        k.d[mu] = simplify(m.alpha(2, mu) * k.inv_a33);
    }
    return k;
}

Expr xi(int mu) { return mu == 0 ? Expr::xi1() : Expr::xi2(); }
VarId xvar(int mu) { return mu == 0 ? VarId::X1 : VarId::X2; }
VarId xivar(int mu) { return mu == 0 ? VarId::XI1 : VarId::XI2; }

double factorial(int n) {
    double f = 1.0;
    for (int k = 2; k <= n; ++k) f *= k;
    return f;
}

cplx minus_i_pow(int k) {
    cplx r(1.0);
    for (int j = 0; j < k; ++j) r *= cplx(0.0, -1.0);
    return r;
}

// Mixed derivatives d^b1/dv1 d^b2/dv2 keyed by node, shared across a build.
class DerivativeCache {
public:
    DerivativeCache(VarId v1, VarId v2) : v1_(v1), v2_(v2) {}

    Expr get(const Expr& e, int b1, int b2) {
        if (b1 == 0 && b2 == 0) return e;
        const Key key{&e.node(), b1, b2};
        if (auto it = memo_.find(key); it != memo_.end()) return it->second;
        Expr d = b1 > 0 ? diff(get(e, b1 - 1, b2), v1_) : diff(get(e, b1, b2 - 1), v2_);
        keep_.push_back(e);
        memo_.emplace(key, d);
        return d;
    }

private:
    using Key = std::tuple<const Node*, int, int>;
    VarId v1_, v2_;
    std::map<Key, Expr> memo_;
    std::vector<Expr> keep_;
};

void check_size(const Expr& e, std::size_t cap, int degree) {
    const std::size_t n = e.dag_size();
    if (n > cap)
        throw SizeLimitError("expansion term of degree " + std::to_string(degree) + " has " + std::to_string(n) +
                                 " nodes, above the limit of " + std::to_string(cap),
                             degree);
}

// Degree -n part of the Riccati equation for y truncated at -n; the unknown
// y_{-n-1} enters it as (+-2 gamma_1 / alpha33) y_{-n-1}.
Expr collector_term(const SymbolMatrix22& a, const PolyhomSymbol& y, int eta, int n) {
    const auto parts = riccati_contributions(a, y, eta, -n, -n);
    Expr e(0.0);
    for (const Expr& c : parts.front().second) e = e + c;
    return e;
}

Expr closed_form_first(const SchurData& sd, const Coupling& k, const Expr& y0, int eta) {
    Expr r(0.0);
    for (int mu = 0; mu < 2; ++mu) {
        for (int nu = 0; nu < 2; ++nu) r = r - diff(sd.Q(mu, nu), xvar(mu)) * kI * xi(nu) / Expr::s();
        r = r + diff(k.c[mu] * y0, xvar(mu));
    }
    if (eta) r = r + diff(y0, VarId::X3);
    const Expr b = simplify(Expr::s() * k.inv_a33 * y0 + kI * (xi(0) * k.d[0] + xi(1) * k.d[1]));
    for (int mu = 0; mu < 2; ++mu) r = r - diff(y0, xivar(mu)) * Expr(cplx(0.0, -1.0)) * diff(b, xvar(mu));
    return r;
}

Expr closed_form_next(const Coupling& k, const std::vector<Expr>& y, int eta, DerivativeCache& dxi,
                      DerivativeCache& dx) {
    const int n = static_cast<int>(y.size()) - 1;  // y[j] = y_{-j}, j = 0..n
    Expr r(0.0);
    for (int mu = 0; mu < 2; ++mu) r = r + diff(k.c[mu] * y[n], xvar(mu));
    if (eta) r = r + diff(y[n], VarId::X3);
    // j + k = -n - 1 with -n <= j, k <= -1
    Expr quad(0.0);
    for (int j = 1; j <= n; ++j) {
        const int kk = n + 1 - j;
        if (kk >= 1 && kk <= n) quad = quad + y[j] * y[kk];
    }
    r = r - Expr::s() * k.inv_a33 * quad;
    const Expr drift = kI * (xi(0) * k.d[0] + xi(1) * k.d[1]);
    for (int order = 1; order <= n + 1; ++order) {
        const cplx phase = minus_i_pow(order);
        // j + m = order - n - 1 with -n <= j, m <= 0
        for (int j = 0; j <= n; ++j) {
            const int m = n + 1 - order - j;  // y index of the second factor
            if (m < 0 || m > n) continue;
            const Expr b = simplify(Expr::s() * k.inv_a33 * y[m] + (m == 0 ? drift : Expr(0.0)));
            for (int b1 = order; b1 >= 0; --b1) {
                const int b2 = order - b1;
                const Expr dy = dxi.get(y[j], b1, b2);
                if (dy.is_zero()) continue;
                const Expr db = dx.get(b, b1, b2);
                if (db.is_zero()) continue;
                r = r - Expr(phase / (factorial(b1) * factorial(b2))) * dy * db;
            }
        }
    }
    return r;
}

}  // namespace

SymbolTerm gamma1(const MediumSpec& m) { return gamma1(m, schur(m)); }

SymbolTerm gamma1(const MediumSpec& m, const SchurData& sd) {
    const Expr s = Expr::s();
    return {sqrt(m.alpha(2, 2)) * sqrt(pow(s, 2) * m.kappa() + quadratic_form(sd.qtilde)), 1};
}

namespace {

Expr leading_expr(const MediumSpec& m, const Expr& g1, Sign sign) {
    Expr skew(0.0);
    for (int mu = 0; mu < 2; ++mu) skew = skew + xi(mu) * (m.alpha(2, mu) - m.alpha(mu, 2));
    const Expr root = sign == Sign::Plus ? g1 : -g1;
    return simplify((Expr(cplx(0.0, -0.5)) * skew + root) / Expr::s());
}

}  // namespace

SymbolTerm leading_term(const MediumSpec& m, Sign sign) { return {leading_expr(m, gamma1(m).expr, sign), 0}; }

AdmittanceExpansion::AdmittanceExpansion(MediumSpec medium, Sign sign, int eta, SymbolTerm g1,
                                         std::vector<SymbolTerm> terms, std::vector<HomogeneityReport> homogeneity)
    : medium_(std::move(medium)),
      sign_(sign),
      eta_(eta),
      gamma1_(std::move(g1)),
      terms_(std::move(terms)),
      homogeneity_(std::move(homogeneity)) {}

PolyhomSymbol AdmittanceExpansion::symbol(int n) const {
    if (n < 0 || n > order()) throw PreconditionError("admittance symbol: truncation outside the computed range");
    std::vector<Expr> t;
    for (int j = 0; j <= n; ++j) t.push_back(terms_[static_cast<std::size_t>(j)].expr);
    return PolyhomSymbol(0, std::move(t));
}

std::vector<std::pair<int, std::vector<Expr>>> riccati_contributions(const SymbolMatrix22& a, const PolyhomSymbol& y,
                                                                     int eta, int floor, std::optional<int> ceiling) {
    const PolyhomSymbol b = multiply(y, a(1, 0).term(1), 1) + a(1, 1);
    auto out = compose_contributions(y, b, floor, std::nullopt, ceiling);
    const auto left = compose_contributions(a(0, 0), y, floor, std::nullopt, ceiling);
    const int top = out.empty() ? 1 : out.front().first;
    auto slot = [&](int d) -> std::vector<Expr>* {
        if (out.empty() || d > top || d < floor) return nullptr;
        return &out[static_cast<std::size_t>(top - d)].second;
    };
    for (const auto& [d, list] : left)
        if (auto* s = slot(d))
            for (const Expr& c : list) s->push_back(-c);
    for (const SymbolTerm& t : a(0, 1).terms())
        if (auto* s = slot(t.degree); s && !t.expr.is_zero()) s->push_back(-t.expr);
    if (eta)
        for (const SymbolTerm& t : y.terms())
            if (auto* s = slot(t.degree)) {
                const Expr d3 = diff(t.expr, VarId::X3);
                if (!d3.is_zero()) s->push_back(-d3);
            }
    return out;
}

PolyhomSymbol riccati_lhs(const SymbolMatrix22& a, const PolyhomSymbol& y, int eta, int floor) {
    const auto parts = riccati_contributions(a, y, eta, floor);
    if (parts.empty()) return {};
    std::vector<Expr> terms;
    for (const auto& [d, list] : parts) {
        Expr e(0.0);
        for (const Expr& c : list) e = e + c;
        terms.push_back(simplify(e));
    }
    return PolyhomSymbol(parts.front().first, std::move(terms));
}

AdmittanceExpansion expand(const MediumSpec& m, Sign sign, int eta, int order, const ExpansionOptions& options) {
    if (eta != 0 && eta != 1) throw PreconditionError("eta must be 0 or 1");
    if (order < 0 || order > options.max_order)
        throw PreconditionError("expansion order " + std::to_string(order) + " outside [0, " +
                                std::to_string(options.max_order) + "]");

    const SchurData sd = schur(m);
    const SymbolMatrix22 a = systems_symbols(m, sd);
    const Coupling k = coupling(m);
    const SymbolTerm g1 = gamma1(m, sd);
    // y_{-n-1} = prefactor * E_{-n}, with prefactor = -+ alpha33 / (2 gamma_1)
    const Expr half = Expr(0.5 * sign_value(sign)) * m.alpha(2, 2) / g1.expr;

    std::vector<Expr> y{leading_expr(m, g1.expr, sign)};
    check_size(y[0], options.max_nodes, 0);
    DerivativeCache dxi(VarId::XI1, VarId::XI2), dx(VarId::X1, VarId::X2);
    for (int n = 0; n < order; ++n) {
        Expr next;
        if (options.method == ExpansionMethod::Collector) {
            next = -(half * collector_term(a, PolyhomSymbol(0, y), eta, n));
        } else if (n == 0) {
            next = half * closed_form_first(sd, k, y[0], eta);
        } else {
            next = half * closed_form_next(k, y, eta, dxi, dx);
        }
        next = simplify(next);
        check_size(next, options.max_nodes, -n - 1);
        y.push_back(next);
    }

    std::vector<SymbolTerm> terms;
    std::vector<HomogeneityReport> reports;
    ProbeRegion region;
    region.box = m.box();
    for (int n = 0; n <= order; ++n) {
        terms.push_back({y[static_cast<std::size_t>(n)], -n});
        reports.push_back(homogeneity_check(terms.back(), options.homogeneity_trials, options.seed + n, region));
    }
    return AdmittanceExpansion(m, sign, eta, g1, std::move(terms), std::move(reports));
}

SplitSymbols split_symbols(const AdmittanceExpansion& plus, const AdmittanceExpansion& minus) {
    if (plus.sign() != Sign::Plus || minus.sign() != Sign::Minus)
        throw PreconditionError("split_symbols: expects the + and - expansions");
    if (plus.eta() != minus.eta() || plus.order() != minus.order())
        throw PreconditionError("split_symbols: expansions differ in eta or order");
    if (!plus.medium().kappa().same(minus.medium().kappa()))
        throw PreconditionError("split_symbols: expansions belong to different media");
    for (int e = 0; e < 9; ++e)
        if (!plus.medium().alpha()[e].same(minus.medium().alpha()[e]))
            throw PreconditionError("split_symbols: expansions belong to different media");

    const MediumSpec& m = plus.medium();
    const int order = plus.order();
    const Expr inv_a33 = simplify(recip(m.alpha(2, 2)));
    Expr drift(0.0);
    for (int mu = 0; mu < 2; ++mu) drift = drift + kI * xi(mu) * m.alpha(2, mu);

    auto g_of = [&](const AdmittanceExpansion& y) {
        std::vector<Expr> t{simplify(inv_a33 * (Expr::s() * y.term(0).expr + drift))};
        for (int n = 1; n <= order; ++n) t.push_back(simplify(inv_a33 * Expr::s() * y.term(n).expr));
        return PolyhomSymbol(1, std::move(t));
    };

    SplitSymbols out{plus, minus, g_of(plus), g_of(minus), {}, {}, {}, {}, plus.eta(), order};
    out.g(0, 0) = out.g_plus;
    out.g(1, 1) = out.g_minus;
    out.ell(0, 0) = plus.symbol();
    out.ell(0, 1) = minus.symbol();
    out.ell(1, 0) = PolyhomSymbol::constant(1.0);
    out.ell(1, 1) = PolyhomSymbol::constant(1.0);
    out.d3_ell = diff_x3(out.ell);
    out.p = compose(out.ell, out.g, 1 - order);
    return out;
}

Expr d3_leading_term(const MediumSpec& m, Sign sign) {
    const SchurData sd = schur(m);
    const Expr s = Expr::s();
    Expr skew(0.0);
    for (int mu = 0; mu < 2; ++mu) skew = skew + xi(mu) * diff(m.alpha(2, mu) - m.alpha(mu, 2), VarId::X3);
    const Expr radicand = m.alpha(2, 2) * (pow(s, 2) * m.kappa() + quadratic_form(sd.qtilde));
    const Expr root = diff(radicand, VarId::X3) / (Expr(2.0) * gamma1(m, sd).expr);
    return simplify((Expr(cplx(0.0, -0.5)) * skew + (sign == Sign::Plus ? root : -root)) / s);
}

}  // namespace anisosplit
