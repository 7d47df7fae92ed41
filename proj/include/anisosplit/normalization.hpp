#pragma once

#include "anisosplit/admittance.hpp"

namespace anisosplit {

/// Symbol z with compose(z, y) = 1 + O(degree -(order + 1)):
/// z_top = 1 / y_top, lower terms cancel the composition residue degree by
/// degree. Throws PreconditionError when y_top vanishes or fails to evaluate
/// at one of `probes` random points.
PolyhomSymbol symbol_inverse(const PolyhomSymbol& y, int order, int probes = 64, const ProbeRegion& region = {});

/// compose(z, y) - 1 kept down to degree `floor`.
PolyhomSymbol parametrix_defect(const PolyhomSymbol& z, const PolyhomSymbol& y, int floor);

/// Diagonal normalization N of a splitting.
struct NormalizationSpec {
    enum class Kind {
        ConstantDiagonal,  // N = diag(m, m')
        AdmittancePower,   // N = diag(Y+, Y-)^power, power = 1 (impedance) or -1
    };
    Kind kind = Kind::ConstantDiagonal;
    cplx m = 1.0;
    cplx m_prime = 1.0;
    int power = 1;

    static NormalizationSpec constant(cplx m, cplx m_prime) { return {Kind::ConstantDiagonal, m, m_prime, 1}; }
    static NormalizationSpec impedance() { return {Kind::AdmittancePower, 1.0, 1.0, 1}; }
    static NormalizationSpec inverse_impedance() { return {Kind::AdmittancePower, 1.0, 1.0, -1}; }
};

/// Normalized splitting L~ = L N^-1, G~ = N G N^-1 - eta (d3 N) N^-1, with
/// all products as truncated symbol compositions (L~ to degree -N, G~ to
/// degree 1 - N). The returned split keeps the underlying expansions; g,
/// ell, d3_ell and p describe the normalized pair. Throws PreconditionError
/// for a zero constant.
SplitSymbols apply_normalization(const SplitSymbols& split, const NormalizationSpec& n);

/// Largest |off-diagonal entry of G~| / |diagonal entry| over the points.
double offdiagonal_ratio(const SymbolMatrix22& g, std::span<const Point> points);

}  // namespace anisosplit
