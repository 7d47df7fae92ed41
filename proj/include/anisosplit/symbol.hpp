#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "anisosplit/expr.hpp"
#include "anisosplit/medium.hpp"

namespace anisosplit {

/// One polyhomogeneous component: an expression homogeneous of integer
/// degree in (xi, s).
struct SymbolTerm {
    Expr expr;
    int degree;
};

/// Finite polyhomogeneous sum p_top + p_{top-1} + ... + p_low. Degrees are
/// contiguous; individual terms may be the zero expression. A default
/// constructed symbol is the zero symbol and has no terms.
class PolyhomSymbol {
public:
    PolyhomSymbol() = default;
    PolyhomSymbol(int top_degree, std::vector<Expr> terms);

    static PolyhomSymbol single(const Expr& e, int degree) { return PolyhomSymbol(degree, {e}); }
    static PolyhomSymbol constant(cplx c) { return single(Expr(c), 0); }

    bool empty() const { return terms_.empty(); }
    int top_degree() const { return top_; }
    int low_degree() const { return top_ - static_cast<int>(terms_.size()) + 1; }
    std::size_t num_terms() const { return terms_.size(); }

    /// Term of the given degree; zero outside the stored range.
    Expr term(int degree) const;
    std::vector<SymbolTerm> terms() const;

    /// Keeps degrees >= floor.
    PolyhomSymbol truncated(int floor) const;
    /// Extends the stored range with zero terms down to `floor`.
    PolyhomSymbol padded(int floor) const;

    /// The full symbol as one expression.
    Expr sum() const;

    /// Applies f to every term; degrees shift by `degree_shift`.
    template <class F>
    PolyhomSymbol map(F&& f, int degree_shift = 0) const {
        std::vector<Expr> t;
        t.reserve(terms_.size());
        for (const Expr& e : terms_) t.push_back(f(e));
        return PolyhomSymbol(top_ + degree_shift, std::move(t));
    }

    /// True when every term is the zero expression.
    bool is_structurally_zero() const;

    std::uint8_t var_mask() const;

private:
    int top_ = 0;
    std::vector<Expr> terms_;
};

PolyhomSymbol operator+(const PolyhomSymbol& a, const PolyhomSymbol& b);
PolyhomSymbol operator-(const PolyhomSymbol& a, const PolyhomSymbol& b);
PolyhomSymbol operator-(const PolyhomSymbol& a);
/// Multiplication by a homogeneous expression of degree `degree`.
PolyhomSymbol multiply(const PolyhomSymbol& a, const Expr& factor, int degree);
PolyhomSymbol simplify(const PolyhomSymbol& a);
/// Term-wise x3 derivative (degrees unchanged).
PolyhomSymbol diff_x3(const PolyhomSymbol& a);

/// Symbol of the operator product P Q:
///   sum over beta of (1/beta!) (d_xi^beta p_j) ((1/i) d_x)^beta q_k,
/// collected by degree j + k - |beta| for degrees >= floor. Transverse
/// derivatives only. `max_beta` caps |beta| (default: all that can reach
/// the floor); degrees above `ceiling` are skipped.
PolyhomSymbol compose(const PolyhomSymbol& p, const PolyhomSymbol& q, int floor,
                      std::optional<int> max_beta = std::nullopt, std::optional<int> ceiling = std::nullopt);

/// Same as compose but keeps each degree as its list of contributions, so
/// callers can measure cancellation (sum of |contribution|).
std::vector<std::pair<int, std::vector<Expr>>> compose_contributions(const PolyhomSymbol& p, const PolyhomSymbol& q,
                                                                     int floor, std::optional<int> max_beta = std::nullopt,
                                                                     std::optional<int> ceiling = std::nullopt);

/// 2x2 matrix of symbols, row-major, 0-based.
struct SymbolMatrix22 {
    std::array<PolyhomSymbol, 4> entries;

    PolyhomSymbol& operator()(int i, int j) { return entries[2 * i + j]; }
    const PolyhomSymbol& operator()(int i, int j) const { return entries[2 * i + j]; }
};

/// Entry-wise matrix symbol product with truncation at `floor`.
SymbolMatrix22 compose(const SymbolMatrix22& a, const SymbolMatrix22& b, int floor);
SymbolMatrix22 operator-(const SymbolMatrix22& a, const SymbolMatrix22& b);
SymbolMatrix22 diff_x3(const SymbolMatrix22& a);

/// Left symbols of the acoustic systems matrix, split into homogeneous
/// parts of degree 1 and 0.
SymbolMatrix22 systems_symbols(const MediumSpec& m);
SymbolMatrix22 systems_symbols(const MediumSpec& m, const SchurData& schur);

struct HomogeneityReport {
    double max_error = 0.0;
    int evaluations = 0;
    bool passed(double tol = 1e-9) const { return max_error <= tol; }
};

/// Sampling region for random symbol probes.
struct ProbeRegion {
    SampleBox box;
    double xi_max = 2.0;
    double s_re_min = 0.5;
    double s_re_max = 2.0;
    double s_im_max = 1.0;
};

/// Reproducible random (x, xi, s) probe points with Re s > 0.
std::vector<Point> random_probes(int count, std::uint64_t seed, const ProbeRegion& region = {});

/// Max relative Euler-scaling error |t(x, l xi, l s) - l^d t(x, xi, s)| / |l^d t|
/// over `trials` random points and l in {2, 5, 10}.
HomogeneityReport homogeneity_check(const SymbolTerm& t, int trials, std::uint64_t seed = 1,
                                    const ProbeRegion& region = {});

/// Scales xi and s of a point by lambda.
Point scaled(const Point& p, double lambda);

}  // namespace anisosplit
