#include <cmath>

#include "anisosplit/error.hpp"
#include "anisosplit/oracle.hpp"
#include "anisosplit/reference_media.hpp"
#include "doctest.h"
#include "random_media.hpp"

using namespace anisosplit;
namespace rm = anisosplit::reference_media;

TEST_CASE("log-log fit") {
    const std::vector<double> x{1, 2, 4, 8, 16};
    std::vector<double> y;
    for (double v : x) y.push_back(3.0 * std::pow(v, -2.5));
    const SlopeFit f = fit_loglog(x, y);
    CHECK(f.slope == doctest::Approx(-2.5).epsilon(1e-12));
    CHECK(std::exp(f.intercept) == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(f.max_deviation < 1e-12);
    CHECK(f.points == 5);

    const std::vector<double> zeros{0, 0, 0, 1, 0};
    CHECK_THROWS_AS(fit_loglog(x, zeros), PreconditionError);
    CHECK_THROWS_AS(fit_loglog(std::vector<double>{1, 2}, std::vector<double>{1, 2}), PreconditionError);
}

TEST_CASE("quadratic oracle examples") {
    const QuadRoots q = quad_oracle(rm::isotropic_unit(), 0.0, 0.0, 1.0);
    CHECK(std::abs(q.plus - 1.0) < 1e-14);
    CHECK(std::abs(q.minus + 1.0) < 1e-14);
    CHECK(std::abs(q.discriminant - 4.0) < 1e-14);

    // Roots satisfy the quadratic for random homogeneous media.
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const MediumSpec m = testing::random_medium(seed, false);
        const SymbolMatrix22 a = systems_symbols(m);
        for (const Point& p : random_probes(10, seed, testing::wide_region())) {
            const QuadRoots r = quad_oracle(m, p.get(VarId::XI1).real(), p.get(VarId::XI2).real(), p.get(VarId::S));
            for (cplx y : {r.plus, r.minus}) {
                const cplx v = eval(a(1, 0).sum(), p) * y * y +
                               (eval(a(1, 1).sum(), p) - eval(a(0, 0).sum(), p)) * y - eval(a(0, 1).sum(), p);
                CHECK(std::abs(v) < 1e-11 * (1 + std::norm(y)));
            }
            const cplx gp = eval(a(1, 0).sum(), p) * r.plus + eval(a(1, 1).sum(), p);
            CHECK(gp.real() > 0.0);
        }
    }

    CHECK_THROWS_WITH_AS(quad_oracle(rm::isotropic_heterogeneous(), 1, 0, 1.0), "medium not homogeneous",
                         PreconditionError);
}

TEST_CASE("Riccati residual decays like lambda^-N") {
    const MediumSpec m = rm::isotropic_lateral();
    const AdmittanceExpansion e = expand(m, Sign::Plus, 1, 2);
    ProbeRegion region;
    region.xi_max = 1.0;
    const auto probes = random_probes(50, 3, region);
    const auto lambdas = default_lambdas();
    const ResidualReport r = riccati_residual(e, probes, lambdas, {1, 2});
    REQUIRE(r.series.size() == 2);
    for (const ResidualSeries& s : r.series) {
        INFO("order " << s.order << " slope " << s.fit.slope);
        CHECK(std::abs(s.fit.slope + s.order) < 0.15);
    }

    const std::vector<double> bad{1, 2, 4};
    CHECK_THROWS_AS(riccati_residual(e, probes, bad), PreconditionError);
    const std::vector<double> descending{8, 4, 2, 1};
    CHECK_THROWS_AS(riccati_residual(e, probes, descending), PreconditionError);
}

TEST_CASE("systems matrix of a constant medium is a Fourier multiplier") {
    const MediumSpec m = rm::anisotropic_constant();
    const TransverseGrid g(8);
    const cplx s(2.0, 0.5);
    const Eigen::MatrixXcd A = systems_matrix(m, g, s);
    const SymbolMatrix22 a = systems_symbols(m);
    const Eigen::Index N = g.size();
    const auto u = smooth_probes(g, 1, 4)[0];
    for (int bi = 0; bi < 2; ++bi)
        for (int bj = 0; bj < 2; ++bj) {
            const QuantizedOperator op(a(bi, bj), g, 0.0, s);
            const Eigen::VectorXcd want = op.apply(u);
            const Eigen::VectorXcd got = A.block(bi * N, bj * N, N, N) * u;
            CHECK((got - want).norm() <= 1e-11 * (1 + want.norm()));
        }
}

TEST_CASE("grid oracle on a constant medium equals the quantized quadratic roots") {
    const MediumSpec m = rm::anisotropic_constant();
    const TransverseGrid g(8);
    const cplx s(3.0, 1.0);
    const GridOracleResult r = grid_riccati_oracle(m, g, s);
    CHECK(r.count_plus == 64);
    CHECK(r.count_minus == 64);
    CHECK(r.residual_plus < 1e-10);
    CHECK(r.residual_minus < 1e-10);

    const AdmittanceExpansion ep = expand(m, Sign::Plus, 1, 0);
    const AdmittanceExpansion em = expand(m, Sign::Minus, 1, 0);
    CHECK(operator_distance(ep.symbol(), r.Y_plus, g, 0.0, s, 4) < 1e-10);
    CHECK(operator_distance(em.symbol(), r.Y_minus, g, 0.0, s, 4) < 1e-10);
}

TEST_CASE("grid oracle on a laterally varying medium") {
    const MediumSpec m = rm::isotropic_lateral();
    const TransverseGrid g(16);
    const cplx s(20.0, 0.0);
    const GridOracleResult r = grid_riccati_oracle(m, g, s);
    CHECK(r.residual_plus < 1e-8);
    CHECK(r.residual_minus < 1e-8);
    CHECK(r.gap > 1e-6);

    double prev = 1e300;
    for (int n = 0; n <= 2; ++n) {
        const AdmittanceExpansion e = expand(m, Sign::Plus, 1, n);
        const double d = operator_distance(e.symbol(), r.Y_plus, g, 0.0, s, 3);
        INFO("order " << n << " distance " << d);
        CHECK(d < prev);
        prev = d;
    }
    CHECK(prev < 1e-5);

    CHECK_THROWS_AS(grid_riccati_oracle(rm::depth_varying(), g, s), PreconditionError);
    CHECK_THROWS_AS(grid_riccati_oracle(m, g, cplx(-1.0, 0.0)), PreconditionError);
}

TEST_CASE("order claim") {
    const SplitSymbols sp = split_symbols(expand(rm::depth_varying(), Sign::Plus, 1, 2),
                                          expand(rm::depth_varying(), Sign::Minus, 1, 2));
    const auto probes = random_probes(40, 2);
    const OrderClaim c = order_claim_check(sp, probes, default_lambdas());
    REQUIRE(c.d3_ell.has_value());
    CHECK(std::abs(c.p.slope - 1.0) < 0.1);
    CHECK(std::abs(c.d3_ell->slope) < 0.1);
    CHECK(c.dzy_error < 1e-10);

    const SplitSymbols flat = split_symbols(expand(rm::lateral_anisotropic(), Sign::Plus, 1, 1),
                                            expand(rm::lateral_anisotropic(), Sign::Minus, 1, 1));
    const OrderClaim cf = order_claim_check(flat, probes, default_lambdas());
    CHECK_FALSE(cf.d3_ell.has_value());
}

TEST_CASE("smooth probes are band limited and reproducible") {
    const TransverseGrid g(16);
    const auto a = smooth_probes(g, 2, 9), b = smooth_probes(g, 2, 9);
    CHECK((a[0] - b[0]).norm() == 0.0);
    CHECK((a[0] - a[1]).norm() > 0.0);
    const Eigen::VectorXcd hat = fft2(g, a[0]);
    for (int i = 0; i < 16; ++i)
        for (int j = 0; j < 16; ++j)
            if (std::abs(g.signed_index(i)) > 3 || std::abs(g.signed_index(j)) > 3)
                CHECK(std::abs(hat(g.index(i, j))) < 1e-10);
}
