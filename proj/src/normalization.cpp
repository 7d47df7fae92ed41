#include "anisosplit/normalization.hpp"

#include <cmath>

#include "anisosplit/error.hpp"

namespace anisosplit {

namespace {

SymbolMatrix22 diagonal(PolyhomSymbol a, PolyhomSymbol b) {
    SymbolMatrix22 r;
    r(0, 0) = std::move(a);
    r(1, 1) = std::move(b);
    return r;
}

SymbolMatrix22 truncated(const SymbolMatrix22& a, int floor) {
    SymbolMatrix22 r;
    for (std::size_t k = 0; k < 4; ++k)
        if (!a.entries[k].empty() && a.entries[k].top_degree() >= floor) r.entries[k] = a.entries[k].truncated(floor);
    return r;
}

SymbolMatrix22 simplified(const SymbolMatrix22& a) {
    SymbolMatrix22 r;
    for (std::size_t k = 0; k < 4; ++k)
        if (!a.entries[k].empty()) r.entries[k] = simplify(a.entries[k]);
    return r;
}

}  // namespace

PolyhomSymbol symbol_inverse(const PolyhomSymbol& y, int order, int probes, const ProbeRegion& region) {
    if (order < 0) throw PreconditionError("symbol_inverse: order must be >= 0");
    if (y.empty()) throw PreconditionError("symbol_inverse: empty symbol");
    const int t = y.top_degree();
    const Expr top = y.term(t);
    const Tape tape(top);
    std::vector<cplx> scratch;
    for (const Point& p : random_probes(probes, 7, region)) {
        cplx v;
        try {
            v = tape.eval1(p, scratch);
        } catch (const EvalError& e) {
            throw PreconditionError(std::string("symbol_inverse: top symbol fails to evaluate: ") + e.what());
        }
        if (!(std::abs(v) > 0.0)) throw PreconditionError("symbol_inverse: top symbol vanishes at a probe point");
    }

    const Expr inv_top = simplify(recip(top));
    std::vector<Expr> z{inv_top};
    for (int k = 1; k <= order; ++k) {
        const PolyhomSymbol current(-t, z);
        const PolyhomSymbol r = compose(current, y, -k, std::nullopt, -k);
        const Expr residue = r.empty() ? Expr(0.0) : r.term(-k);
        z.push_back(simplify(-(inv_top * residue)));
    }
    return PolyhomSymbol(-t, std::move(z));
}

PolyhomSymbol parametrix_defect(const PolyhomSymbol& z, const PolyhomSymbol& y, int floor) {
    return simplify(compose(z, y, floor) - PolyhomSymbol::constant(1.0));
}

SplitSymbols apply_normalization(const SplitSymbols& split, const NormalizationSpec& n) {
    const int order = split.order;
    SymbolMatrix22 N, N_inv;
    switch (n.kind) {
        case NormalizationSpec::Kind::ConstantDiagonal:
            if (n.m == 0.0 || n.m_prime == 0.0)
                throw PreconditionError("apply_normalization: constant normalization must be nonzero");
            N = diagonal(PolyhomSymbol::constant(n.m), PolyhomSymbol::constant(n.m_prime));
            N_inv = diagonal(PolyhomSymbol::constant(1.0 / n.m), PolyhomSymbol::constant(1.0 / n.m_prime));
            break;
        case NormalizationSpec::Kind::AdmittancePower: {
            if (n.power != 1 && n.power != -1)
                throw PreconditionError("apply_normalization: only admittance powers 1 and -1 are supported");
            const PolyhomSymbol yp = split.plus.symbol(), ym = split.minus.symbol();
            ProbeRegion region;
            region.box = split.plus.medium().box();
            const PolyhomSymbol zp = symbol_inverse(yp, order, 64, region);
            const PolyhomSymbol zm = symbol_inverse(ym, order, 64, region);
            N = n.power == 1 ? diagonal(yp, ym) : diagonal(zp, zm);
            N_inv = n.power == 1 ? diagonal(zp, zm) : diagonal(yp, ym);
            break;
        }
    }

    SplitSymbols out = split;
    out.ell = simplified(compose(split.ell, N_inv, -order));
    SymbolMatrix22 g = compose(compose(N, split.g, 1 - order), N_inv, 1 - order);
    if (split.eta == 1) g = g - compose(diff_x3(N), N_inv, 1 - order);
    out.g = simplified(truncated(g, 1 - order));
    out.g_plus = out.g(0, 0);
    out.g_minus = out.g(1, 1);
    out.d3_ell = diff_x3(out.ell);
    out.p = compose(out.ell, out.g, 1 - order);
    return out;
}

double offdiagonal_ratio(const SymbolMatrix22& g, std::span<const Point> points) {
    double worst = 0.0;
    for (const Point& p : points) {
        const double diag = std::max(std::abs(eval(g(0, 0).sum(), p)), std::abs(eval(g(1, 1).sum(), p)));
        for (const PolyhomSymbol* e : {&g(0, 1), &g(1, 0)}) {
            if (e->empty()) continue;
            worst = std::max(worst, std::abs(eval(e->sum(), p)) / diag);
        }
    }
    return worst;
}

}  // namespace anisosplit
