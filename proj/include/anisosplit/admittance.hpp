#pragma once

#include <cstddef>
#include <vector>

#include "anisosplit/medium.hpp"
#include "anisosplit/symbol.hpp"

namespace anisosplit {

/// + is the family with Re g_1 > 0 (decaying in increasing x3).
enum class Sign { Plus, Minus };

inline int sign_value(Sign s) { return s == Sign::Plus ? 1 : -1; }
inline const char* sign_name(Sign s) { return s == Sign::Plus ? "+" : "-"; }

enum class ExpansionMethod {
    Collector,   // degree-(-n) part of the symbol Riccati equation, solved for y_{-n-1}
    ClosedForm,  // explicit index sums
};

struct ExpansionOptions {
    int max_order = 6;
    std::size_t max_nodes = 200000;
    ExpansionMethod method = ExpansionMethod::Collector;
    int homogeneity_trials = 8;
    std::uint64_t seed = 1;
};

/// gamma_1 = alpha33^(1/2) (s^2 kappa + Qt xi.xi)^(1/2), degree 1.
SymbolTerm gamma1(const MediumSpec& m);
SymbolTerm gamma1(const MediumSpec& m, const SchurData& schur);

/// y0 = s^-1 (-1/2 i xi_mu (alpha_3mu - alpha_mu3) +- gamma_1), degree 0.
SymbolTerm leading_term(const MediumSpec& m, Sign sign);

/// Admittance symbol y = y_0 + y_{-1} + ... + y_{-N} for one sign and eta.
class AdmittanceExpansion {
public:
    AdmittanceExpansion(MediumSpec medium, Sign sign, int eta, SymbolTerm gamma1, std::vector<SymbolTerm> terms,
                        std::vector<HomogeneityReport> homogeneity);

    const MediumSpec& medium() const { return medium_; }
    Sign sign() const { return sign_; }
    int eta() const { return eta_; }
    int order() const { return static_cast<int>(terms_.size()) - 1; }
    const SymbolTerm& gamma1() const { return gamma1_; }
    /// y_{-n}, n = 0..order.
    const SymbolTerm& term(int n) const { return terms_.at(static_cast<std::size_t>(n)); }
    const std::vector<SymbolTerm>& terms() const { return terms_; }
    const std::vector<HomogeneityReport>& homogeneity() const { return homogeneity_; }

    /// y truncated at degree -n (n <= order); full symbol by default.
    PolyhomSymbol symbol() const { return symbol(order()); }
    PolyhomSymbol symbol(int n) const;

private:
    MediumSpec medium_;
    Sign sign_;
    int eta_;
    SymbolTerm gamma1_;
    std::vector<SymbolTerm> terms_;
    std::vector<HomogeneityReport> homogeneity_;
};

/// Builds y_0 .. y_{-N}. Throws PreconditionError for N outside
/// [0, max_order] or eta not in {0, 1}, and SizeLimitError when a term
/// exceeds max_nodes DAG nodes.
AdmittanceExpansion expand(const MediumSpec& m, Sign sign, int eta, int order, const ExpansionOptions& options = {});

/// Left side of the symbol Riccati equation
///   compose(y, a21 y + a22) - compose(a11, y) - a12 - eta d3 y
/// for degrees >= floor, as per-degree lists of contributions.
std::vector<std::pair<int, std::vector<Expr>>> riccati_contributions(const SymbolMatrix22& a, const PolyhomSymbol& y,
                                                                     int eta, int floor,
                                                                     std::optional<int> ceiling = std::nullopt);
/// Simplified sum of riccati_contributions per degree.
PolyhomSymbol riccati_lhs(const SymbolMatrix22& a, const PolyhomSymbol& y, int eta, int floor);

/// Symbols of the splitting built from both sign expansions.
struct SplitSymbols {
    AdmittanceExpansion plus;
    AdmittanceExpansion minus;
    PolyhomSymbol g_plus;   // degrees 1 .. -N+1
    PolyhomSymbol g_minus;
    SymbolMatrix22 g;       // diag(g+, g-)
    SymbolMatrix22 ell;     // [[y+, y-], [1, 1]], degrees 0 .. -N
    SymbolMatrix22 d3_ell;  // x3 derivative of ell
    SymbolMatrix22 p;       // ell o g, degrees 1 .. -N+1
    int eta;
    int order;

    const PolyhomSymbol& g_of(Sign s) const { return s == Sign::Plus ? g_plus : g_minus; }
};

SplitSymbols split_symbols(const AdmittanceExpansion& plus, const AdmittanceExpansion& minus);

/// Degree-0 part of d3 y for one sign, from the derivative of the leading term:
///   s^-1 (-1/2 i xi_mu d3(alpha_3mu - alpha_mu3) +- d3(alpha33 (s^2 kappa + Qt xi.xi)) / (2 gamma_1)).
Expr d3_leading_term(const MediumSpec& m, Sign sign);

}  // namespace anisosplit
