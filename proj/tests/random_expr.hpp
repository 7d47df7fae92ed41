#pragma once

// Random expression generator shared by the property tests.

#include <random>

#include "anisosplit/expr.hpp"

namespace anisosplit::testing {

class RandomExpr {
public:
    explicit RandomExpr(std::uint64_t seed) : rng_(seed) {}

    Expr tree(int depth) {
        std::uniform_int_distribution<int> pick(0, depth <= 0 ? 1 : 11);
        const int k = pick(rng_);
        switch (k) {
            case 0: return constant();
            case 1: return variable();
            case 2: return tree(depth - 1) + tree(depth - 1);
            case 3: return tree(depth - 1) - tree(depth - 1);
            case 4:
            case 5: return tree(depth - 1) * tree(depth - 1);
            case 6: return tree(depth - 1) / (Expr(2.5) + sin(tree(depth - 1)));
            case 7: return sqrt(Expr(3.0) + cos(tree(depth - 1)) + pow(variable(), 2));
            case 8: return sin(tree(depth - 1));
            case 9: return cos(tree(depth - 1));
            case 10: return exp(Expr(0.3) * sin(tree(depth - 1)));
            default: {
                std::uniform_int_distribution<int> ex(-2, 3);
                return pow(Expr(2.0) + cos(tree(depth - 1)), ex(rng_));
            }
        }
    }

    Expr constant() {
        std::uniform_real_distribution<double> u(-2.0, 2.0);
        return Expr(u(rng_));
    }

    Expr variable() {
        std::uniform_int_distribution<int> v(0, kNumVars - 1);
        return Expr::var(static_cast<VarId>(v(rng_)));
    }

    VarId var_id() {
        std::uniform_int_distribution<int> v(0, kNumVars - 1);
        return static_cast<VarId>(v(rng_));
    }

    Point point() {
        std::uniform_real_distribution<double> u(-1.5, 1.5);
        Point p;
        for (int v = 0; v < kNumVars; ++v) p.set(static_cast<VarId>(v), u(rng_));
        p.set(VarId::S, cplx(0.5 + std::abs(u(rng_)), u(rng_)));
        return p;
    }

    std::mt19937_64& rng() { return rng_; }

private:
    std::mt19937_64 rng_;
};

}  // namespace anisosplit::testing
