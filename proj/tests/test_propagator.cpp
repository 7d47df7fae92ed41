#include <unsupported/Eigen/MatrixFunctions>
#include <cmath>
#include <random>

#include "anisosplit/error.hpp"
#include "anisosplit/oracle.hpp"
#include "anisosplit/propagator.hpp"
#include "anisosplit/reference_media.hpp"
#include "doctest.h"
#include "random_media.hpp"

using namespace anisosplit;
namespace rm = anisosplit::reference_media;

namespace {

// exp(i x . xi_k) sampled on the grid.
Eigen::VectorXcd plane_wave(const TransverseGrid& g, int k1, int k2) {
    Eigen::VectorXcd u(g.size());
    for (int i = 0; i < g.n(); ++i)
        for (int j = 0; j < g.n(); ++j)
            u(g.index(i, j)) = std::exp(cplx(0.0, g.x1(i) * g.xi1(k1) + g.x2(j) * g.xi2(k2)));
    return u;
}

Eigen::VectorXcd random_modes(const TransverseGrid& g, int count, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> k(0, g.n() - 1);
    std::normal_distribution<double> nd;
    Eigen::VectorXcd hat = Eigen::VectorXcd::Zero(g.size());
    int placed = 0;
    while (placed < count) {
        const int k1 = k(rng), k2 = k(rng);
        if (g.is_nyquist(k1) || g.is_nyquist(k2) || hat(g.index(k1, k2)) != 0.0) continue;
        hat(g.index(k1, k2)) = cplx(nd(rng), nd(rng));
        ++placed;
    }
    return ifft2(g, hat);
}

double rel_norm(const Eigen::VectorXcd& a, const Eigen::VectorXcd& b) { return (a - b).norm() / b.norm(); }

double rel_state(const StateField& a, const StateField& b) {
    return std::sqrt((a.v3.data - b.v3.data).squaredNorm() + (a.p.data - b.p.data).squaredNorm()) / b.norm();
}

SplitSymbols make_split(const MediumSpec& m, int eta, int order) {
    return split_symbols(expand(m, Sign::Plus, eta, order), expand(m, Sign::Minus, eta, order));
}

}  // namespace

TEST_CASE("build_rhs examples") {
    const TransverseGrid g(8);
    const cplx s(2.0, 0.5);
    const Eigen::VectorXcd q = random_modes(g, 6, 1);
    auto field = [&](const Eigen::VectorXcd& d) { return Wavefield(g, Component::Scalar, 0.3, s, d); };
    const Wavefield zero = field(Eigen::VectorXcd::Zero(g.size()));

    const StateField n0 = build_rhs(zero, {zero, zero, zero}, rm::heterogeneous_anisotropic(), g, s);
    CHECK(n0.norm() == 0.0);

    const StateField n1 = build_rhs(field(q), {zero, zero, zero}, rm::isotropic_unit(), g, s);
    CHECK(rel_norm(n1.v3.data, q) < 1e-15);
    CHECK(n1.p.data.norm() == 0.0);

    const Eigen::VectorXcd f3 = random_modes(g, 5, 2);
    const StateField n2 = build_rhs(zero, {zero, zero, field(f3)}, rm::heterogeneous_anisotropic(), g, s);
    CHECK(rel_norm(n2.p.data, f3) < 1e-14);

    CHECK_THROWS_AS(build_rhs(field(q), {zero, zero, zero}, rm::isotropic_unit(), TransverseGrid(16), s),
                    PreconditionError);
}

TEST_CASE("full solve on a homogeneous isotropic medium matches the closed-form exponential") {
    const TransverseGrid g(8);
    const cplx s(1.5, 0.7);
    const int k1 = 2, k2 = 7;
    const Eigen::VectorXcd w = plane_wave(g, k1, k2);
    const cplx v0(0.3, -0.2), p0(1.0, 0.4);
    const StateField Fa(Wavefield(g, Component::VerticalVelocity, 0.0, s, v0 * w),
                        Wavefield(g, Component::Pressure, 0.0, s, p0 * w));
    const double z = 0.4;

    // A = [[0, s + |xi|^2 / s], [s, 0]], eigenvalues +-lambda with lambda^2 = s^2 + |xi|^2.
    const double xi2 = std::pow(g.xi1(k1), 2) + std::pow(g.xi2(k2), 2);
    const cplx a12 = s + xi2 / s, lambda = std::sqrt(s * s + xi2);
    const cplx c = std::cosh(lambda * z), sh = std::sinh(lambda * z) / lambda;
    const cplx v_exact = c * v0 - sh * a12 * p0, p_exact = c * p0 - sh * s * v0;

    const StateField modal = full_solve(rm::isotropic_unit(), g, s, Fa, 0.0, z, {.steps = 1, .method = Integrator::Modal}).final();
    CHECK(rel_norm(modal.v3.data, v_exact * w) < 1e-12);
    CHECK(rel_norm(modal.p.data, p_exact * w) < 1e-12);

    const auto rk = full_solve(rm::isotropic_unit(), g, s, Fa, 0.0, z, {.steps = 200, .check_convergence = true});
    CHECK(rel_norm(rk.final().v3.data, v_exact * w) < 1e-8);
    CHECK(rel_norm(rk.final().p.data, p_exact * w) < 1e-8);
    REQUIRE(rk.convergence_delta.has_value());
    CHECK(*rk.convergence_delta < 1e-6);
    CHECK(rk.final().x3() == doctest::Approx(z));

    const auto same = full_solve(rm::isotropic_unit(), g, s, Fa, 0.2, 0.2);
    CHECK(rel_state(same.final(), Fa) == 0.0);
}

TEST_CASE("down-going eigen data decays at rate g1+") {
    const MediumSpec m = rm::anisotropic_constant();
    const TransverseGrid g(8);
    const cplx s(2.0, 0.0);
    const int k1 = 1, k2 = 6;
    const QuadRoots r = quad_oracle(m, g.xi1(k1), g.xi2(k2), s);
    const SymbolMatrix22 a = systems_symbols(m);
    Point p = Point::spatial(0, 0, 0);
    p.set(VarId::XI1, g.xi1(k1)).set(VarId::XI2, g.xi2(k2)).set(VarId::S, s);
    const cplx g1 = eval(a(1, 0).sum(), p) * r.plus + eval(a(1, 1).sum(), p);
    const Eigen::VectorXcd w = plane_wave(g, k1, k2);
    const StateField Fa(Wavefield(g, Component::VerticalVelocity, 0.0, s, r.plus * w),
                        Wavefield(g, Component::Pressure, 0.0, s, w));
    const auto tr = full_solve(m, g, s, Fa, 0.0, 0.5, {.steps = 400, .record_depths = {0.25}});
    REQUIRE(tr.samples.size() == 2);
    for (const StateField& f : tr.samples) {
        const cplx decay = std::exp(-g1 * f.x3());
        CHECK(rel_norm(f.p.data, decay * w) < 1e-8);
        CHECK(rel_norm(f.v3.data, decay * r.plus * w) < 1e-8);
    }
}

TEST_CASE("RK4 full solve on a laterally varying medium matches the dense exponential") {
    const MediumSpec m = rm::lateral_anisotropic();
    const TransverseGrid g(8);
    const cplx s(3.0, 1.0);
    const Eigen::MatrixXcd A = systems_matrix(m, g, s);
    const Eigen::VectorXcd v = random_modes(g, 4, 3), pr = random_modes(g, 4, 4);
    const StateField Fa(Wavefield(g, Component::VerticalVelocity, 0.0, s, v), Wavefield(g, Component::Pressure, 0.0, s, pr));
    Eigen::VectorXcd x(2 * g.size());
    x << v, pr;
    const double z = 0.15;
    const Eigen::VectorXcd exact = (-z * A).exp() * x;
    const StateField rk = full_solve(m, g, s, Fa, 0.0, z, {.steps = 300}).final();
    Eigen::VectorXcd got(2 * g.size());
    got << rk.v3.data, rk.p.data;
    CHECK(rel_norm(got, exact) < 1e-8);

    const StateField ex = full_solve(m, g, s, Fa, 0.0, z, {.steps = 1, .method = Integrator::Exponential}).final();
    got << ex.v3.data, ex.p.data;
    CHECK(rel_norm(got, exact) < 1e-10);

    CHECK_THROWS_AS(full_solve(m, g, s, Fa, 0.0, z, {.method = Integrator::Modal}), PreconditionError);
}

TEST_CASE("full solve reports instability and bad intervals") {
    const TransverseGrid g(16);
    const cplx s(40.0, 0.0);
    const StateField Fa(Wavefield(g, Component::VerticalVelocity, 0.0, s, random_modes(g, 20, 5)),
                        Wavefield(g, Component::Pressure, 0.0, s, random_modes(g, 20, 6)));
    CHECK_THROWS_AS(full_solve(rm::isotropic_unit(), g, s, Fa, 0.0, 8.0, {.steps = 4}), PreconditionError);
    CHECK_THROWS_AS(full_solve(rm::isotropic_unit(), g, s, Fa, 1.0, 0.0), PreconditionError);
    CHECK_THROWS_AS(full_solve(rm::isotropic_unit(), g, s, Fa, 0.0, 1.0, {.steps = 0}), PreconditionError);
    CHECK_THROWS_AS(full_solve(rm::isotropic_unit(), g, s, Fa, 0.0, 1.0, {.record_depths = {2.0}}),
                    PreconditionError);
    CHECK_THROWS_AS(full_solve(rm::isotropic_unit(), g, cplx(-1.0, 0.0), Fa, 0.0, 1.0), PreconditionError);
}

TEST_CASE("one-way propagation is exact in a homogeneous slab") {
    const MediumSpec m = testing::random_medium(4, false);
    const TransverseGrid g(16);
    const cplx s(2.0, 0.5);
    const SplitSymbols sp = make_split(m, 1, 0);
    const Wavefield up(g, Component::ConstituentPlus, 0.0, s, random_modes(g, 50, 7));
    const Wavefield zero(g, Component::ConstituentMinus, 0.0, s);
    const StateField Fa = recompose({up, zero}, sp, g, s);
    const double z = 0.6;

    const StateField full = full_solve(m, g, s, Fa, 0.0, z, {.steps = 1, .method = Integrator::Modal}).final();
    const Constituents w = decompose(full, sp, g, s);
    CHECK(w.minus.data.norm() < 1e-8 * w.plus.data.norm());

    for (Integrator method : {Integrator::Modal, Integrator::RK4, Integrator::Exponential}) {
        const Wavefield u = oneway_solve(sp, Sign::Plus, g, s, up, 0.0, z, {.steps = 400, .method = method}).final();
        CHECK(rel_norm(u.data, w.plus.data) < 1e-8);
    }

    const Wavefield same = oneway_solve(sp, Sign::Plus, g, s, up, 0.3, 0.3).final();
    CHECK((same.data - up.data).norm() == 0.0);
}

TEST_CASE("one-way field norm is non-increasing for the + branch") {
    const MediumSpec m = rm::anisotropic_constant();
    const TransverseGrid g(16);
    const cplx s(1.0, 0.0);
    const SplitSymbols sp = make_split(m, 1, 0);
    const Wavefield up(g, Component::ConstituentPlus, 0.0, s, random_modes(g, 30, 8));
    std::vector<double> depths;
    for (int k = 1; k < 10; ++k) depths.push_back(0.1 * k);
    const auto tr = oneway_solve(sp, Sign::Plus, g, s, up, 0.0, 1.0, {.steps = 100, .record_depths = depths});
    double prev = up.data.norm();
    for (const Wavefield& w : tr.samples) {
        CHECK(w.data.norm() <= prev);
        prev = w.data.norm();
    }
}

TEST_CASE("eta has no effect on x3-independent media") {
    const MediumSpec m = rm::lateral_anisotropic();
    const TransverseGrid g(8);
    const cplx s(5.0, 0.0);
    const Wavefield up(g, Component::ConstituentPlus, 0.0, s, random_modes(g, 6, 9));
    const Wavefield a = oneway_solve(make_split(m, 0, 1), Sign::Plus, g, s, up, 0.0, 0.2, {.steps = 20}).final();
    const Wavefield b = oneway_solve(make_split(m, 1, 1), Sign::Plus, g, s, up, 0.0, 0.2, {.steps = 20}).final();
    CHECK(rel_norm(a.data, b.data) < 1e-12);
}

TEST_CASE("recompose and decompose") {
    const TransverseGrid g(8);
    const cplx s(2.0, 1.0);
    const MediumSpec hom = rm::anisotropic_constant();
    const SplitSymbols sp = make_split(hom, 1, 0);
    const Wavefield up(g, Component::ConstituentPlus, 0.0, s, random_modes(g, 10, 10));
    const Wavefield um(g, Component::ConstituentMinus, 0.0, s, random_modes(g, 10, 11));
    const Wavefield zero(g, Component::ConstituentMinus, 0.0, s);

    const StateField F0 = recompose({zero, zero}, sp, g, s);
    CHECK(F0.norm() == 0.0);

    // u- = 0: F = (Y+ u+, u+), with Y+ applied mode by mode.
    const StateField F1 = recompose({up, zero}, sp, g, s);
    CHECK(rel_norm(F1.p.data, up.data) == 0.0);
    Eigen::VectorXcd hat = fft2(g, up.data);
    for (int k1 = 0; k1 < g.n(); ++k1)
        for (int k2 = 0; k2 < g.n(); ++k2) {
            const QuadRoots r = quad_oracle(hom, g.symbol_xi1(k1), g.symbol_xi2(k2), s);
            hat(g.index(k1, k2)) *= r.plus;
        }
    CHECK(rel_norm(F1.v3.data, ifft2(g, hat)) < 1e-12);

    const Constituents back = decompose(recompose({up, um}, sp, g, s), sp, g, s);
    CHECK(rel_norm(back.plus.data, up.data) < 1e-10);
    CHECK(rel_norm(back.minus.data, um.data) < 1e-10);

    const SplitSymbols het = make_split(rm::lateral_anisotropic(), 1, 1);
    const Constituents back2 = decompose(recompose({up, um}, het, g, s), het, g, s);
    CHECK(rel_norm(back2.plus.data, up.data) < 1e-10);
    CHECK(rel_norm(back2.minus.data, um.data) < 1e-10);
}

TEST_CASE("one-way error against the full solve decreases with order") {
    const MediumSpec m = rm::isotropic_lateral();
    const TransverseGrid g(16);
    const cplx s(20.0, 0.0);
    const double z = 0.1;
    const Wavefield up(g, Component::ConstituentPlus, 0.0, s, smooth_probes(g, 1, 12)[0]);
    const Wavefield zero(g, Component::ConstituentMinus, 0.0, s);
    double prev = 1e300;
    for (int order = 0; order <= 2; ++order) {
        const SplitSymbols sp = make_split(m, 1, order);
        const StateField Fa = recompose({up, zero}, sp, g, s);
        const StateField full = full_solve(m, g, s, Fa, 0.0, z, {.steps = 1, .method = Integrator::Exponential}).final();
        const Wavefield u = oneway_solve(sp, Sign::Plus, g, s, up, 0.0, z, {.steps = 40}).final();
        Wavefield ub = zero;
        ub.x3 = z;
        const StateField one = recompose({u, ub}, sp, g, s);
        const double err = rel_state(one, full);
        INFO("order " << order << " error " << err);
        CHECK(err < prev);
        prev = err;
    }
}
