#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "anisosplit/expr.hpp"

namespace anisosplit {

using SpatialPoint = std::array<double, 3>;

/// Declared material bounds: kappa in [kappa_min, kappa_max] and the
/// eigenvalues of sym(rho) in [rho_min, rho_max].
struct MediumBounds {
    double kappa_min = 1e-6;
    double kappa_max = 1e6;
    double rho_min = 1e-6;
    double rho_max = 1e6;
};

/// Bounded computational box the medium is validated on.
struct SampleBox {
    SpatialPoint lo{0.0, 0.0, 0.0};
    SpatialPoint hi{2.0 * M_PI, 2.0 * M_PI, 2.0 * M_PI};
};

enum class AlphaSource { Given, InvertedRho };

using Matrix3Expr = std::array<Expr, 9>;  // row-major
using Matrix2Expr = std::array<Expr, 4>;  // row-major

/// Compressibility kappa(x) and inverse density alpha(x) = rho(x)^-1.
/// alpha may be nonsymmetric. Immutable after construction.
class MediumSpec {
public:
    MediumSpec(Expr kappa, Matrix3Expr alpha, AlphaSource source = AlphaSource::Given, MediumBounds bounds = {},
               SampleBox box = {});

    const Expr& kappa() const { return kappa_; }
    /// 0-based indices.
    const Expr& alpha(int j, int k) const { return alpha_[3 * j + k]; }
    const Matrix3Expr& alpha() const { return alpha_; }
    AlphaSource source() const { return source_; }
    const MediumBounds& bounds() const { return bounds_; }
    const SampleBox& box() const { return box_; }

    /// Union of the variables kappa and alpha depend on.
    std::uint8_t var_mask() const { return var_mask_; }
    bool depends_on_x3() const { return (var_mask_ & var_bit(VarId::X3)) != 0; }
    bool depends_on_transverse() const { return (var_mask_ & kTransverseMask) != 0; }
    bool is_symbolically_constant() const { return var_mask_ == 0; }

private:
    Expr kappa_;
    Matrix3Expr alpha_;
    AlphaSource source_;
    MediumBounds bounds_;
    SampleBox box_;
    std::uint8_t var_mask_;
};

/// Textual medium description, as found in the [medium] config section.
/// Exactly one of alpha / rho must be set (row-major, 9 expressions).
struct MediumInput {
    std::string kappa;
    std::optional<std::array<std::string, 9>> alpha;
    std::optional<std::array<std::string, 9>> rho;
    MediumBounds bounds;
    SampleBox box;
    int lattice = 5;
};

struct Violation {
    std::string what;
    SpatialPoint point;
    double value;
};

struct ValidationReport {
    std::size_t samples = 0;
    double kappa_min = 0.0;
    double kappa_max = 0.0;
    double rho_eig_min = 0.0;
    double rho_eig_max = 0.0;
    double alpha33_min = 0.0;
    std::vector<Violation> violations;

    bool passed() const { return violations.empty(); }
    std::string summary() const;
};

/// n^3 lattice including the box corners.
std::vector<SpatialPoint> lattice_points(const SampleBox& box, int n);

/// Parses the expressions, inverts rho symbolically when given, and
/// validates on the default lattice. Throws ValidationError on singular rho
/// or any bound violation; the message names the offending point.
MediumSpec load_medium(const MediumInput& input);

/// Sampling check of the bounds on kappa, sym(rho) and alpha33.
ValidationReport validate(const MediumSpec& m, std::span<const SpatialPoint> samples);

/// Symbolic adjugate / determinant inverse, simplified per entry.
Matrix3Expr symbolic_inverse(const Matrix3Expr& a);

/// Schur complements of alpha33 in alpha.
struct SchurData {
    Matrix2Expr q;       // alpha_mn - alpha_m3 alpha_3n / alpha33
    Matrix2Expr qtilde;  // alpha_mn - (alpha_m3 + alpha_3m)(alpha_n3 + alpha_3n) / (4 alpha33)
    const Expr& Q(int mu, int nu) const { return q[2 * mu + nu]; }
    const Expr& Qt(int mu, int nu) const { return qtilde[2 * mu + nu]; }
};

SchurData schur(const MediumSpec& m);

/// Quadratic form Q_mn xi_m xi_n as an expression in xi1, xi2.
Expr quadratic_form(const Matrix2Expr& q);

/// Numeric material values at one point.
struct MaterialSample {
    double kappa;
    std::array<double, 9> alpha;
};

MaterialSample sample_material(const MediumSpec& m, const SpatialPoint& x);

/// True when kappa and alpha agree at every sample to `tol` relative.
bool is_homogeneous(const MediumSpec& m, std::span<const SpatialPoint> samples, double tol = 1e-12);

}  // namespace anisosplit
