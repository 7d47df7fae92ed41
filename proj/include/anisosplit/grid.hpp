#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <string>

#include "anisosplit/expr.hpp"
#include "anisosplit/symbol.hpp"

namespace anisosplit {

/// Periodic transverse grid: n points per axis on [0, L1) x [0, L2).
/// Samples are stored row-major with index i * n + j, i along x1.
/// Wavenumbers follow FFT ordering; index n/2 is the unmatched Nyquist mode.
/// Symbols and derivatives see the Nyquist wavenumber as 0, so that the
/// lattice they act on is symmetric.
class TransverseGrid {
public:
    explicit TransverseGrid(int n, double L1 = 2.0 * M_PI, double L2 = 2.0 * M_PI);

    int n() const { return n_; }
    double L1() const { return L1_; }
    double L2() const { return L2_; }
    Eigen::Index size() const { return static_cast<Eigen::Index>(n_) * n_; }
    Eigen::Index index(int i, int j) const { return static_cast<Eigen::Index>(i) * n_ + j; }

    double x1(int i) const { return L1_ * i / n_; }
    double x2(int j) const { return L2_ * j / n_; }
    /// Wavenumber of FFT index k: (2 pi / L) * (k or k - n).
    double xi1(int k) const { return 2.0 * M_PI / L1_ * signed_index(k); }
    double xi2(int k) const { return 2.0 * M_PI / L2_ * signed_index(k); }
    int signed_index(int k) const { return k < n_ / 2 ? k : k - n_; }
    bool is_nyquist(int k) const { return k == n_ / 2; }
    /// Wavenumber seen by symbols: as xi1 / xi2, but 0 at the Nyquist index.
    double symbol_xi1(int k) const { return is_nyquist(k) ? 0.0 : xi1(k); }
    double symbol_xi2(int k) const { return is_nyquist(k) ? 0.0 : xi2(k); }

    bool operator==(const TransverseGrid& o) const { return n_ == o.n_ && L1_ == o.L1_ && L2_ == o.L2_; }

private:
    int n_;
    double L1_, L2_;
};

enum class Component { Pressure, VerticalVelocity, ConstituentPlus, ConstituentMinus, Scalar };

std::string component_name(Component c);

/// Complex field on a transverse grid at depth x3 for Laplace parameter s.
struct Wavefield {
    TransverseGrid grid;
    Component component = Component::Scalar;
    double x3 = 0.0;
    cplx s = 1.0;
    Eigen::VectorXcd data;

    Wavefield(const TransverseGrid& g, Component c, double depth, cplx s_value)
        : grid(g), component(c), x3(depth), s(s_value), data(Eigen::VectorXcd::Zero(g.size())) {}
    Wavefield(const TransverseGrid& g, Component c, double depth, cplx s_value, Eigen::VectorXcd values);

    bool is_finite() const { return data.allFinite(); }
};

/// CSV with columns i, j, re, im.
void write_csv(std::ostream& os, const Wavefield& w);
Wavefield read_csv(std::istream& is, const TransverseGrid& grid, Component c, double x3, cplx s);

/// Unnormalized forward transform: u_hat(k) = sum_x u(x) exp(-i x.xi_k).
Eigen::VectorXcd fft2(const TransverseGrid& g, const Eigen::VectorXcd& u);
/// Inverse of fft2 (includes the 1 / n^2 factor).
Eigen::VectorXcd ifft2(const TransverseGrid& g, const Eigen::VectorXcd& u_hat);

/// d/dx_axis (axis 0 or 1) by FFT, i.e. the Fourier multiplier i symbol_xi.
Eigen::VectorXcd spectral_derivative(const TransverseGrid& g, const Eigen::VectorXcd& u, int axis);
/// Dense matrix of spectral_derivative.
Eigen::MatrixXcd derivative_matrix(const TransverseGrid& g, int axis);

/// Samples an expression in (x1, x2) at depth x3 and parameter s on the grid.
/// The expression must not depend on xi.
Eigen::VectorXcd sample(const Expr& e, const TransverseGrid& g, double x3, cplx s);

/// Left quantization of a symbol at fixed (x3, s):
///   (R u)(x) = n^-2 sum_k r(x, xi_k) u_hat(k) exp(i x.xi_k).
/// The symbol table is evaluated once. Three paths are used depending on the
/// symbol's variables: pointwise multiplier (no xi), Fourier multiplier (no
/// x1, x2) and the general direct sum. The symbol is evaluated at the
/// symbol_xi lattice, so polynomial symbols reproduce spectral derivatives
/// exactly.
class QuantizedOperator {
public:
    enum class Kind { Multiplier, FourierMultiplier, General };

    QuantizedOperator(const Expr& symbol, const TransverseGrid& g, double x3, cplx s,
                      BranchPolicy policy = BranchPolicy::Strict);
    QuantizedOperator(const PolyhomSymbol& symbol, const TransverseGrid& g, double x3, cplx s,
                      BranchPolicy policy = BranchPolicy::Strict);

    Kind kind() const { return kind_; }
    const TransverseGrid& grid() const { return grid_; }

    Eigen::VectorXcd apply(const Eigen::VectorXcd& u) const;
    /// Operator as an n^2 x n^2 matrix acting on grid samples.
    Eigen::MatrixXcd dense_matrix() const;

private:
    TransverseGrid grid_;
    Kind kind_;
    Eigen::VectorXcd diag_;   // Multiplier / FourierMultiplier
    Eigen::MatrixXcd table_;  // General: table_(x, k) = r(x, xi_k) exp(i x.xi_k) / n^2
};

Wavefield quantize_apply(const PolyhomSymbol& symbol, const Wavefield& field, const TransverseGrid& grid, double x3,
                         cplx s);

}  // namespace anisosplit
