#pragma once

#include <array>
#include <optional>
#include <vector>

#include "anisosplit/admittance.hpp"
#include "anisosplit/grid.hpp"

namespace anisosplit {

/// F = (v3, p) on one grid at one depth.
struct StateField {
    Wavefield v3;
    Wavefield p;

    StateField(const TransverseGrid& g, double x3, cplx s)
        : v3(g, Component::VerticalVelocity, x3, s), p(g, Component::Pressure, x3, s) {}
    StateField(Wavefield v, Wavefield pr) : v3(std::move(v)), p(std::move(pr)) {}

    double x3() const { return v3.x3; }
    double norm() const { return std::sqrt(v3.data.squaredNorm() + p.data.squaredNorm()); }
};

/// W = (u+, u-).
struct Constituents {
    Wavefield plus;
    Wavefield minus;
};

/// Source vector of the two-component system,
///   N = T^-1 (q - s^-1 d_mu(alpha_mu_k f_k), alpha_3k f_k)
/// with T^-1 = [[1, d_mu(alpha_mu3 alpha33^-1 .)], [0, alpha33^-1]].
StateField build_rhs(const Wavefield& q, const std::array<Wavefield, 3>& f, const MediumSpec& m,
                     const TransverseGrid& g, cplx s);

/// Grid samples of the coefficients of A at one depth.
class SystemsSampler {
public:
    SystemsSampler(const MediumSpec& m, const TransverseGrid& g, cplx s);

    struct Coefficients {
        std::array<Eigen::VectorXcd, 2> c;  // alpha_mu3 / alpha33
        std::array<Eigen::VectorXcd, 2> d;  // alpha_3mu / alpha33
        std::array<Eigen::VectorXcd, 4> q;  // Q, row-major
        Eigen::VectorXcd kappa;
        Eigen::VectorXcd inv_a33;
    };

    const Coefficients& at(double x3);
    bool depth_independent() const { return !depends_on_x3_; }

    /// (A F) with A applied by spectral differentiation and pointwise products.
    std::pair<Eigen::VectorXcd, Eigen::VectorXcd> apply(double x3, const Eigen::VectorXcd& v,
                                                         const Eigen::VectorXcd& p);

private:
    TransverseGrid grid_;
    cplx s_;
    bool depends_on_x3_;
    Tape tape_;
    std::optional<double> cached_x3_;
    Coefficients cache_;
};

enum class Integrator {
    RK4,          // classical 4th order
    Modal,        // exact per Fourier mode; homogeneous media only
    Exponential,  // dense exponential of the frozen operator at each step midpoint
};

struct StepOptions {
    int steps = 100;
    Integrator method = Integrator::RK4;
    /// Extra output depths strictly inside (a, b); b is always recorded.
    std::vector<double> record_depths;
    /// Also run with twice the steps and report the change at b.
    bool check_convergence = false;
    /// Norm growth above this factor is reported as instability.
    double blowup = 1e12;
};

template <class Field>
struct Trace {
    std::vector<Field> samples;  // at the record depths, then b
    std::optional<double> convergence_delta;  // relative change when the step count is doubled

    const Field& final() const { return samples.back(); }
};

/// Integrates dF/dx3 = -A F from a to b (source free).
Trace<StateField> full_solve(const MediumSpec& m, const TransverseGrid& g, cplx s, const StateField& F_a, double a,
                             double b, const StepOptions& options = {});

/// Integrates du/dx3 = -G^sign u with G the quantized generator symbol of the
/// split. For eta = 0 the d3 L correction is not applied.
Trace<Wavefield> oneway_solve(const SplitSymbols& split, Sign sign, const TransverseGrid& g, cplx s,
                              const Wavefield& u_a, double a, double b, const StepOptions& options = {});

/// F = (Y+ u+ + Y- u-, u+ + u-).
StateField recompose(const Constituents& w, const SplitSymbols& split, const TransverseGrid& g, cplx s);

/// Inverse of recompose: per Fourier mode when Y+- are Fourier multipliers,
/// otherwise a dense solve.
Constituents decompose(const StateField& F, const SplitSymbols& split, const TransverseGrid& g, cplx s);

/// Exact per-mode propagator exp(-(b - a) A(xi, s)) of a homogeneous medium.
StateField modal_full_propagate(const MediumSpec& m, const TransverseGrid& g, cplx s, const StateField& F_a,
                                double a, double b);

}  // namespace anisosplit
