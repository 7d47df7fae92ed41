#pragma once

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <vector>

#include "anisosplit/admittance.hpp"
#include "anisosplit/grid.hpp"

namespace anisosplit {

/// Least-squares line through (log x, log y).
struct SlopeFit {
    double slope = 0.0;
    double intercept = 0.0;
    double max_deviation = 0.0;  // max |residual| of the fit in log space
    int points = 0;
};

/// Throws PreconditionError with fewer than 3 positive finite samples.
SlopeFit fit_loglog(std::span<const double> x, std::span<const double> y);

/// {4, 8, 16, 32, 64, 128, 256}
std::vector<double> default_lambdas();

/// RMS over points of |e(x, lambda xi, lambda s)| for each lambda.
std::vector<double> scaling_rms(const Expr& e, std::span<const Point> points, std::span<const double> lambdas);

struct ResidualSeries {
    int order = 0;
    std::vector<double> residuals;  // RMS over points, one per lambda
    SlopeFit fit;
};

struct ResidualReport {
    std::vector<double> lambdas;
    std::vector<ResidualSeries> series;
};

/// Riccati residual of y truncated at each requested order n, evaluated at
/// (x, lambda xi0, lambda s0); the expected slope is -n. Orders default to
/// the expansion's own order.
ResidualReport riccati_residual(const AdmittanceExpansion& exp, std::span<const Point> points,
                                std::span<const double> lambdas, std::vector<int> orders = {});

/// Per-degree cancellation of the Riccati equation: for every degree
/// d in {1, ..., -N+1}, max over points of |sum c| / sum |c| over the
/// contributions c of that degree.
std::vector<std::pair<int, double>> riccati_balance(const AdmittanceExpansion& exp, std::span<const Point> points);

struct QuadRoots {
    cplx plus;
    cplx minus;
    cplx discriminant;
};

/// Exact admittance of a homogeneous medium: roots of
/// a21 y^2 + (a22 - a11) y - a12 = 0 at (xi, s), labelled by the sign of
/// Re(a21 y + a22). Throws PreconditionError("medium not homogeneous") and
/// on a vanishing discriminant.
QuadRoots quad_oracle(const MediumSpec& m, double xi1, double xi2, cplx s);

struct GridOracleOptions {
    double gap_tolerance = 1e-6;  // relative to the 1-norm of A
};

struct GridOracleResult {
    Eigen::MatrixXcd Y_plus;
    Eigen::MatrixXcd Y_minus;
    Eigen::MatrixXcd A;  // full 2n^2 x 2n^2 systems matrix
    int count_plus = 0;
    int count_minus = 0;
    double gap = 0.0;        // min |Re lambda| / ||A||_1
    double cond_plus = 0.0;  // condition number of the V block
    double cond_minus = 0.0;
    double residual_plus = 0.0;  // relative Frobenius Riccati residual
    double residual_minus = 0.0;
};

/// Dense systems matrix of an x3-independent medium on the grid, blocks
/// A11 = D_mu c_mu, A12 = s kappa - s^-1 D_mu Q_mu_nu D_nu, A21 = s / alpha33,
/// A22 = d_mu D_mu with D the spectral derivative matrices.
Eigen::MatrixXcd systems_matrix(const MediumSpec& m, const TransverseGrid& g, cplx s);

/// Invariant-subspace admittance Y = W V^-1 for each half-plane of the
/// spectrum of A.
GridOracleResult grid_riccati_oracle(const MediumSpec& m, const TransverseGrid& g, cplx s,
                                     const GridOracleOptions& options = {});

/// Relative Frobenius residual of Y A21 Y + Y A22 - A11 Y - A12.
double matrix_riccati_residual(const Eigen::MatrixXcd& A, const Eigen::MatrixXcd& Y);

/// Random smooth fields made of low Fourier modes (|k| <= kmax per axis).
std::vector<Eigen::VectorXcd> smooth_probes(const TransverseGrid& g, int count, std::uint64_t seed, int kmax = 3);

/// max over probes u of ||Op(sym) u - Y u|| / ||Y u||.
double operator_distance(const PolyhomSymbol& sym, const Eigen::MatrixXcd& Y, const TransverseGrid& g, double x3,
                         cplx s, int probes, std::uint64_t seed = 1);

struct OrderClaim {
    std::optional<SlopeFit> d3_ell;  // empty when d3 ell vanishes identically
    SlopeFit p;
    std::vector<double> d3_ell_magnitude;
    std::vector<double> p_magnitude;
    double dzy_error = 0.0;  // max relative mismatch of the degree-0 part of d3 y
};

/// Scaling of the 2x2 symbols d3 ell and p = ell o g (Frobenius norm, RMS
/// over points), plus agreement of d3 y0 with d3_leading_term.
OrderClaim order_claim_check(const SplitSymbols& split, std::span<const Point> points, std::span<const double> lambdas);

}  // namespace anisosplit
