#include <Eigen/Dense>
#include <cmath>

#include "anisosplit/error.hpp"
#include "anisosplit/medium.hpp"
#include "anisosplit/reference_media.hpp"
#include "anisosplit/symbol.hpp"
#include "doctest.h"
#include "random_media.hpp"

using namespace anisosplit;

namespace {

std::array<std::string, 9> identity_text() { return {"1", "0", "0", "0", "1", "0", "0", "0", "1"}; }

MediumInput unit_input() {
    MediumInput in;
    in.kappa = "1";
    in.alpha = identity_text();
    return in;
}

// Closed-form eigenvalues of a symmetric 3x3 matrix (trigonometric solution
// of the characteristic cubic), ascending.
std::array<double, 3> symmetric_eigenvalues(const double a[3][3]) {
    const double p1 = a[0][1] * a[0][1] + a[0][2] * a[0][2] + a[1][2] * a[1][2];
    const double q = (a[0][0] + a[1][1] + a[2][2]) / 3.0;
    const double p2 = (a[0][0] - q) * (a[0][0] - q) + (a[1][1] - q) * (a[1][1] - q) + (a[2][2] - q) * (a[2][2] - q) + 2 * p1;
    const double p = std::sqrt(p2 / 6.0);
    double b[3][3];
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) b[i][j] = (a[i][j] - (i == j ? q : 0.0)) / p;
    const double detb = b[0][0] * (b[1][1] * b[2][2] - b[1][2] * b[2][1]) - b[0][1] * (b[1][0] * b[2][2] - b[1][2] * b[2][0]) +
                        b[0][2] * (b[1][0] * b[2][1] - b[1][1] * b[2][0]);
    const double r = std::clamp(detb / 2.0, -1.0, 1.0);
    const double phi = std::acos(r) / 3.0;
    const double e1 = q + 2 * p * std::cos(phi);
    const double e3 = q + 2 * p * std::cos(phi + 2.0 * M_PI / 3.0);
    return {e3, 3 * q - e1 - e3, e1};
}

// 3x3 inverse by cofactors.
void invert3(const double a[3][3], double out[3][3]) {
    const double det = a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0]) +
                       a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            const int r1 = (j + 1) % 3, r2 = (j + 2) % 3, c1 = (i + 1) % 3, c2 = (i + 2) % 3;
            out[i][j] = (a[r1][c1] * a[r2][c2] - a[r1][c2] * a[r2][c1]) / det;
        }
}

Point spatial_xi(const SpatialPoint& x, double xi1, double xi2) {
    Point p = Point::spatial(x[0], x[1], x[2]);
    p.set(VarId::XI1, xi1).set(VarId::XI2, xi2);
    return p;
}

}  // namespace

TEST_CASE("load the isotropic unit medium") {
    const MediumSpec m = load_medium(unit_input());
    CHECK(m.is_symbolically_constant());
    CHECK(m.source() == AlphaSource::Given);
    const auto pts = lattice_points(m.box(), 3);
    const ValidationReport r = validate(m, pts);
    CHECK(r.passed());
    CHECK(r.samples == 27);
    CHECK(r.alpha33_min == 1.0);
    CHECK(r.kappa_min == 1.0);
    CHECK(r.rho_eig_min == doctest::Approx(1.0));
    CHECK(r.summary().find("status: PASS") != std::string::npos);
}

TEST_CASE("rho is inverted symbolically") {
    MediumInput in;
    in.kappa = "1";
    in.rho = std::array<std::string, 9>{"2", "0", "0", "0", "2", "0", "0", "0", "2"};
    const MediumSpec m = load_medium(in);
    CHECK(m.source() == AlphaSource::InvertedRho);
    for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k) CHECK(eval(m.alpha(j, k), Point()) == cplx(j == k ? 0.5 : 0.0));

    in.rho = std::array<std::string, 9>{"2 + sin(x1)", "0.1", "0", "0.1", "3", "0.2*cos(x2)", "0", "0.2*cos(x2)", "1.5"};
    const MediumSpec h = load_medium(in);
    const SpatialPoint x{0.7, 1.9, 0.3};
    double rho[3][3], inv[3][3];
    for (int k = 0; k < 9; ++k) rho[k / 3][k % 3] = eval(parse((*in.rho)[k]), Point::spatial(x[0], x[1], x[2])).real();
    invert3(rho, inv);
    const MaterialSample s = sample_material(h, x);
    for (int k = 0; k < 9; ++k) CHECK(s.alpha[k] == doctest::Approx(inv[k / 3][k % 3]).epsilon(1e-13));
}

TEST_CASE("load errors") {
    MediumInput in = unit_input();
    in.alpha = std::array<std::string, 9>{"1", "0", "0", "0", "1", "0", "0", "0", "x1"};
    try {
        load_medium(in);
        FAIL("expected validation error");
    } catch (const ValidationError& err) {
        const std::string msg = err.what();
        CHECK(msg.find("alpha33") != std::string::npos);
        CHECK(msg.find("(0, ") != std::string::npos);
    }

    in = unit_input();
    in.kappa = "-1";
    CHECK_THROWS_AS(load_medium(in), ValidationError);

    in = unit_input();
    in.alpha.reset();
    CHECK_THROWS_AS(load_medium(in), ConfigError);
    in.alpha = identity_text();
    in.rho = identity_text();
    CHECK_THROWS_AS(load_medium(in), ConfigError);

    in = unit_input();
    in.alpha.reset();
    in.rho = std::array<std::string, 9>{"1", "0", "0", "0", "1", "0", "0", "0", "sin(x3)"};
    try {
        load_medium(in);
        FAIL("expected singular rho");
    } catch (const ValidationError& err) {
        CHECK(std::string(err.what()).find("singular rho") != std::string::npos);
    }

    in = unit_input();
    in.kappa = "1 + s";
    CHECK_THROWS_AS(load_medium(in), PreconditionError);
    in.kappa = "1 +";
    CHECK_THROWS_AS(load_medium(in), ParseError);
}

TEST_CASE("validation reports bound violations") {
    const MediumSpec m(parse("-1"), {Expr(1.0), Expr(0.0), Expr(0.0), Expr(0.0), Expr(1.0), Expr(0.0), Expr(0.0),
                                     Expr(0.0), Expr(1.0)});
    const auto pts = lattice_points(m.box(), 2);
    const ValidationReport r = validate(m, pts);
    CHECK_FALSE(r.passed());
    REQUIRE(r.violations.size() == pts.size());
    CHECK(r.violations.front().what == "kappa below lower bound");
    CHECK(r.violations.front().value == -1.0);
    CHECK(r.summary().find("FAIL") != std::string::npos);
    CHECK_THROWS_AS(validate(m, std::span<const SpatialPoint>{}), PreconditionError);

    MediumBounds tight;
    tight.rho_max = 0.9;
    const MediumSpec dense(Expr(1.0), reference_media::isotropic_unit().alpha(), AlphaSource::Given, tight);
    const ValidationReport rd = validate(dense, pts);
    CHECK_FALSE(rd.passed());
    CHECK(rd.violations.front().what == "sym(rho) eigenvalue above upper bound");
}

TEST_CASE("constant anisotropic medium: eigenvalue range of sym(rho)") {
    const MediumSpec m = reference_media::anisotropic_constant();
    const std::array<SpatialPoint, 2> pts{SpatialPoint{0, 0, 0}, SpatialPoint{1, 2, 3}};
    const ValidationReport r = validate(m, pts);
    REQUIRE(r.passed());
    const double a[3][3] = {{2, 0.3, 0.2}, {0.3, 1.5, 0.1}, {0.2, 0.1, 1.0}};
    double rho[3][3];
    invert3(a, rho);
    const auto ev = symmetric_eigenvalues(rho);
    CHECK(r.rho_eig_min == doctest::Approx(ev[0]).epsilon(1e-12));
    CHECK(r.rho_eig_max == doctest::Approx(ev[2]).epsilon(1e-12));
    CHECK(r.alpha33_min == 1.0);
}

TEST_CASE("nonsymmetric reference media validate") {
    for (const MediumSpec& m : {reference_media::heterogeneous_anisotropic(), reference_media::lateral_anisotropic(),
                                reference_media::depth_varying(), reference_media::isotropic_heterogeneous(),
                                reference_media::isotropic_lateral()}) {
        const auto pts = lattice_points(m.box(), 6);
        CHECK(validate(m, pts).passed());
        CHECK_FALSE(is_homogeneous(m, pts));
    }
    CHECK_FALSE(reference_media::lateral_anisotropic().depends_on_x3());
    CHECK(reference_media::depth_varying().depends_on_x3());
    const auto pts = lattice_points(SampleBox{}, 3);
    CHECK(is_homogeneous(reference_media::anisotropic_constant(), pts));
}

TEST_CASE("schur complements") {
    const SchurData unit = schur(reference_media::isotropic_unit());
    for (int mu = 0; mu < 2; ++mu)
        for (int nu = 0; nu < 2; ++nu) {
            CHECK(eval(unit.Q(mu, nu), Point()) == cplx(mu == nu ? 1.0 : 0.0));
            CHECK(eval(unit.Qt(mu, nu), Point()) == cplx(mu == nu ? 1.0 : 0.0));
        }

    const MediumSpec m(Expr(1.0), {Expr(2.0), Expr(0.0), Expr(1.0), Expr(0.0), Expr(2.0), Expr(0.0), Expr(1.0),
                                   Expr(0.0), Expr(1.0)});
    const SchurData d = schur(m);
    CHECK(eval(d.Q(0, 0), Point()) == cplx(1.0));
    CHECK(eval(d.Q(0, 1), Point()) == cplx(0.0));
    CHECK(eval(d.Q(1, 0), Point()) == cplx(0.0));
    CHECK(eval(d.Q(1, 1), Point()) == cplx(2.0));

    // Q entries against the Schur formula evaluated numerically.
    const MediumSpec h = reference_media::heterogeneous_anisotropic();
    const SchurData dh = schur(h);
    const SpatialPoint x{0.4, 2.2, 5.1};
    const MaterialSample s = sample_material(h, x);
    auto al = [&](int j, int k) { return s.alpha[3 * j + k]; };
    for (int mu = 0; mu < 2; ++mu)
        for (int nu = 0; nu < 2; ++nu) {
            const Point p = Point::spatial(x[0], x[1], x[2]);
            CHECK(eval(dh.Q(mu, nu), p).real() ==
                  doctest::Approx(al(mu, nu) - al(mu, 2) * al(2, nu) / al(2, 2)).epsilon(1e-14));
            CHECK(eval(dh.Qt(mu, nu), p).real() ==
                  doctest::Approx(al(mu, nu) - 0.25 * (al(mu, 2) + al(2, mu)) * (al(nu, 2) + al(2, nu)) / al(2, 2))
                      .epsilon(1e-14));
        }
}

TEST_CASE("property: Qtilde identity and positivity on random media") {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> ux(0.0, 2 * M_PI), uxi(-3.0, 3.0);
    for (int n = 0; n < 20; ++n) {
        const MediumSpec m = testing::random_medium(1000 + n, n % 2 == 1);
        REQUIRE(validate(m, lattice_points(m.box(), 4)).passed());
        const SchurData d = schur(m);
        const Tape qt(quadratic_form(d.qtilde));
        std::vector<cplx> scratch;
        for (int k = 0; k < 50; ++k) {
            const SpatialPoint x{ux(rng), ux(rng), ux(rng)};
            const double xi1 = uxi(rng), xi2 = uxi(rng);
            const MaterialSample s = sample_material(m, x);
            auto al = [&](int j, int l) { return s.alpha[3 * j + l]; };
            const double zeta[3] = {xi1, xi2, -0.5 / al(2, 2) * ((al(2, 0) + al(0, 2)) * xi1 + (al(2, 1) + al(1, 2)) * xi2)};
            double azz = 0.0;
            for (int j = 0; j < 3; ++j)
                for (int l = 0; l < 3; ++l) azz += al(j, l) * zeta[j] * zeta[l];
            const cplx v = qt.eval1(spatial_xi(x, xi1, xi2), scratch);
            CHECK(std::abs(v - azz) <= 1e-12 * std::abs(azz));
            CHECK(v.real() > 0.0);
        }
    }
}

TEST_CASE("up/down symmetric alpha has Qtilde = Q") {
    const MediumSpec m(parse("1"), {parse("2 + sin(x1)"), parse("0.3*cos(x2)"), Expr(0.0), parse("0.1"),
                                    parse("1.5 + 0.2*sin(x1 + x2)"), Expr(0.0), Expr(0.0), Expr(0.0), parse("1 + 0.5*cos(x1)")});
    const SchurData d = schur(m);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 6.0);
    for (int k = 0; k < 100; ++k) {
        const Point p = Point::spatial(u(rng), u(rng), u(rng));
        for (int e = 0; e < 4; ++e) CHECK(eval(d.q[e], p) == eval(d.qtilde[e], p));
    }
}
