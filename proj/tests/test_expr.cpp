#include <cmath>
#include <cstring>

#include "anisosplit/error.hpp"
#include "anisosplit/expr.hpp"
#include "doctest.h"
#include "random_expr.hpp"

using namespace anisosplit;

namespace {

Point at(std::initializer_list<std::pair<VarId, cplx>> values) {
    Point p;
    for (auto [v, x] : values) p.set(v, x);
    return p;
}

// Fourth-order central difference along the real axis of variable v.
cplx central_difference(const Expr& e, Point p, VarId v, double h) {
    const cplx x0 = p.get(v);
    auto f = [&](double dx) { return eval(e, Point(p).set(v, x0 + dx)); };
    return (-f(2 * h) + 8.0 * f(h) - 8.0 * f(-h) + f(-2 * h)) / (12.0 * h);
}

}  // namespace

TEST_CASE("parse literals and trees") {
    const Expr one = parse("1");
    CHECK(one.is_const());
    CHECK(eval(one, Point()) == cplx(1.0));

    const Expr e = parse("2 + 0.3*sin(x1)");
    REQUIRE(e.op() == Op::Add);
    CHECK(e.node().a->op == Op::Const);
    CHECK(e.node().b->op == Op::Mul);
    CHECK(e.node().b->b->op == Op::Sin);
    CHECK(eval(e, at({{VarId::X1, 0.0}})) == cplx(2.0));

    CHECK(eval(parse("sqrt(s^2 + xi1^2)"), at({{VarId::XI1, 0.0}, {VarId::S, 2.0}})) == cplx(2.0));
    CHECK(eval(parse("1.5e2 - .5"), Point()) == cplx(149.5));
    CHECK(eval(parse("-x1^2"), at({{VarId::X1, 3.0}})) == cplx(-9.0));
    CHECK(eval(parse("x1^-2"), at({{VarId::X1, 2.0}})) == cplx(0.25));
    CHECK(eval(parse("2*i*pi"), Point()).imag() == doctest::Approx(2 * M_PI));
}

TEST_CASE("parse errors carry byte offsets") {
    try {
        parse("1 + (x1 * 2");
        FAIL("expected ParseError");
    } catch (const ParseError& err) {
        CHECK(err.offset() == 11);
        CHECK(std::string(err.what()).find("expected ')'") != std::string::npos);
    }
    try {
        parse("2*foo(x1)");
        FAIL("expected ParseError");
    } catch (const ParseError& err) {
        CHECK(err.offset() == 2);
        CHECK(std::string(err.what()).find("unknown identifier 'foo'") != std::string::npos);
    }
    CHECK_THROWS_AS(parse("x1^1.5"), ParseError);
    CHECK_THROWS_AS(parse(""), ParseError);
    CHECK_THROWS_AS(parse("x1 x2"), ParseError);
}

TEST_CASE("eval") {
    CHECK(eval(parse("x1*x2"), at({{VarId::X1, 2.0}, {VarId::X2, 3.0}})) == cplx(6.0));

    // s = i gives s^2 = -1 exactly: on the cut.
    const Expr root = parse("sqrt(s^2)");
    const Point p = at({{VarId::S, cplx(0.0, 1.0)}});
    CHECK(eval(root, p, BranchPolicy::Principal) == cplx(0.0, 1.0));
    try {
        eval(root, p);
        FAIL("expected branch-cut error");
    } catch (const EvalError& err) {
        CHECK(err.kind() == EvalError::Kind::BranchCut);
    }

    try {
        eval(parse("1/x1"), at({{VarId::X1, 0.0}}));
        FAIL("expected division by zero");
    } catch (const EvalError& err) {
        CHECK(err.kind() == EvalError::Kind::DivisionByZero);
    }
    try {
        eval(parse("x1 + x2"), at({{VarId::X1, 0.0}}));
        FAIL("expected unbound variable");
    } catch (const EvalError& err) {
        CHECK(err.kind() == EvalError::Kind::UnboundVariable);
        CHECK(std::string(err.what()).find("x2") != std::string::npos);
    }
}

TEST_CASE("diff examples") {
    const Expr d1 = diff(parse("x1^2"), VarId::X1);
    CHECK(eval(d1, at({{VarId::X1, 3.0}})) == cplx(6.0));
    CHECK(to_string(d1) == "2*x1");

    // k0 is a parsed constant (here 1).
    const Expr g = parse("sqrt(s^2*1 + xi1^2)");
    const Expr dg = diff(g, VarId::XI1);
    const Point p = at({{VarId::XI1, 1.0}, {VarId::S, 1.0}});
    CHECK(std::abs(eval(dg, p) - 1.0 / std::sqrt(2.0)) < 1e-15);
    CHECK(std::abs(eval(dg, p) - central_difference(g, p, VarId::XI1, 1e-3)) < 1e-10);

    const Expr mixed = diff(diff(parse("sin(x1)*xi2"), VarId::X1), VarId::XI2);
    CHECK(to_string(mixed) == "cos(x1)");
    CHECK(eval(mixed, at({{VarId::X1, 0.0}})) == cplx(1.0));

    CHECK(diff(parse("xi1*xi2"), VarId::X3).is_zero());
    CHECK(diff(Expr(4.0), VarId::S).is_zero());
}

TEST_CASE("simplify examples") {
    CHECK(to_string(simplify(parse("0*x1 + 1*xi1"))) == "xi1");
    CHECK(to_string(simplify(parse("x1 - x1"))) == "0");
    CHECK(to_string(simplify(parse("2*3 + x2^0"))) == "7");
    CHECK(to_string(simplify(parse("x1*x2 + 2*x2*x1"))) == to_string(simplify(parse("3*(x2*x1)"))));
    CHECK(simplify(parse("x1*x1/x1^2")).is_one());
}

TEST_CASE("interning shares identical subtrees") {
    const Expr a = parse("sin(x1) + cos(x2)");
    const Expr b = parse("sin(x1) + cos(x2)");
    CHECK(a.same(b));
    const Expr big = a * a + a;
    CHECK(big.dag_size() < 12);
}

TEST_CASE("property: symbolic derivative agrees with finite differences") {
    testing::RandomExpr gen(20240611);
    int accepted = 0;
    int attempts = 0;
    while (accepted < 1000 && attempts < 20000) {
        ++attempts;
        const Expr e = gen.tree(6);
        const VarId v = gen.var_id();
        Point p = gen.point();
        cplx fd1, fd2, sym;
        try {
            sym = eval(diff(e, v), p);
            fd1 = central_difference(e, p, v, 1e-3);
            fd2 = central_difference(e, p, v, 5e-4);
        } catch (const EvalError&) {
            continue;
        }
        // Skip ill-conditioned points: the two step sizes must agree.
        if (std::abs(fd1 - fd2) > 1e-7 * (1.0 + std::abs(fd1))) continue;
        ++accepted;
        INFO(to_string(e), " d/", var_name(v));
        CHECK(std::abs(sym - fd2) / (1.0 + std::abs(sym)) <= 1e-5);
    }
    CHECK(accepted == 1000);
}

TEST_CASE("property: simplify preserves values; evaluation is pure; print/parse round-trips") {
    testing::RandomExpr gen(777);
    int checked = 0;
    for (int trial = 0; trial < 300; ++trial) {
        const Expr e = gen.tree(5) * gen.tree(3) + gen.tree(4) - gen.tree(2);
        const Expr s = simplify(e);
        const Expr reparsed = parse(to_string(e));
        for (int k = 0; k < 5; ++k) {
            const Point p = gen.point();
            cplx v;
            try {
                v = eval(e, p);
            } catch (const EvalError&) {
                continue;
            }
            ++checked;
            const cplx again = eval(e, p);
            CHECK(std::memcmp(&v, &again, sizeof v) == 0);
            CHECK(std::abs(eval(s, p) - v) <= 1e-12 * (1.0 + std::abs(v)));
            CHECK(std::abs(eval(reparsed, p) - v) <= 1e-12 * (1.0 + std::abs(v)));
        }
    }
    CHECK(checked > 1000);
}

TEST_CASE("substitute") {
    const Expr e = parse("x1*xi1 + s");
    const Expr r = substitute(e, VarId::XI1, Expr(2.0) * Expr::xi1());
    CHECK(eval(r, at({{VarId::X1, 3.0}, {VarId::XI1, 1.0}, {VarId::S, 1.0}})) == cplx(7.0));
}
