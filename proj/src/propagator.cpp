#include "anisosplit/propagator.hpp"

#include <unsupported/Eigen/MatrixFunctions>
#include <algorithm>
#include <cmath>

#include "anisosplit/error.hpp"
#include "anisosplit/parallel.hpp"

namespace anisosplit {

namespace {

using Vec = Eigen::VectorXcd;

void require_grid(const Wavefield& w, const TransverseGrid& g, const char* what) {
    if (!(w.grid == g) || w.data.size() != g.size())
        throw PreconditionError(std::string(what) + ": wavefield grid does not match");
}

void require_s(cplx s) {
    if (!(s.real() > 0.0)) throw PreconditionError("Re s must be positive");
}

// Tape evaluation of several x-only expressions at every grid point.
std::vector<Vec> sample_all(const Tape& tape, const TransverseGrid& g, double x3, cplx s) {
    const std::size_t roots = tape.num_roots();
    std::vector<Vec> out(roots, Vec(g.size()));
    const int n = g.n();
    std::exception_ptr failure;
#pragma omp parallel num_threads(max_threads())
    {
        std::vector<cplx> scratch, values(roots);
#pragma omp for
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                Point p = Point::spatial(g.x1(i), g.x2(j), x3);
                p.set(VarId::S, s);
                try {
                    tape.eval(p, scratch, values);
                } catch (...) {
#pragma omp critical
                    if (!failure) failure = std::current_exception();
                    continue;
                }
                for (std::size_t r = 0; r < roots; ++r) out[r](g.index(i, j)) = values[r];
            }
        }
    }
    if (failure) std::rethrow_exception(failure);
    return out;
}

Tape coefficient_tape(const MediumSpec& m) {
    const SchurData sd = schur(m);
    const Expr& a33 = m.alpha(2, 2);
    std::vector<Expr> roots{m.alpha(0, 2) / a33, m.alpha(1, 2) / a33, m.alpha(2, 0) / a33, m.alpha(2, 1) / a33};
    for (int k = 0; k < 4; ++k) roots.push_back(sd.q[static_cast<std::size_t>(k)]);
    roots.push_back(m.kappa());
    roots.push_back(recip(a33));
    for (Expr& e : roots) e = simplify(e);
    return Tape(roots);
}

// Depth sub-intervals: record depths inside (a, b), then b.
std::vector<double> output_depths(double a, double b, const std::vector<double>& record) {
    std::vector<double> out;
    for (double r : record) {
        if (!(r > a && r < b)) throw PreconditionError("record depth outside (a, b)");
        out.push_back(r);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    out.push_back(b);
    return out;
}

void check_interval(double a, double b, const StepOptions& o) {
    if (!(b >= a)) throw PreconditionError("propagation interval requires b >= a");
    if (o.steps < 1) throw PreconditionError("steps must be >= 1");
    if (!(o.blowup > 1.0)) throw PreconditionError("blowup factor must exceed 1");
}

// Drives a one-step map over [a, b] with output at the record depths.
// step(x, h, state) advances state from x to x + h.
template <class State, class Step, class Norm>
std::vector<State> integrate(const State& initial, double a, double b, const StepOptions& o, Step&& step, Norm&& norm) {
    std::vector<State> out;
    State state = initial;
    const double start = std::max(norm(initial), 1e-300);
    double x = a;
    for (double target : output_depths(a, b, o.record_depths)) {
        if (target > x) {
            const int n = std::max(1, static_cast<int>(std::ceil(o.steps * (target - x) / (b - a) - 1e-9)));
            const double h = (target - x) / n;
            for (int k = 0; k < n; ++k) {
                const double xk = x + (k + 1) * h;
                step(x + k * h, h, state);
                const double nv = norm(state);
                if (!std::isfinite(nv) || nv > o.blowup * start)
                    throw PreconditionError("step count too small: norm blowup at x3 = " + std::to_string(xk));
            }
        }
        x = target;
        out.push_back(state);
    }
    return out;
}

Eigen::Matrix2cd symbol_matrix_at(const SymbolMatrix22& a, const Point& p) {
    Eigen::Matrix2cd out;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) out(i, j) = a(i, j).empty() ? cplx(0.0) : eval(a(i, j).sum(), p);
    return out;
}

Point mode_point(const TransverseGrid& g, int k1, int k2, double x3, cplx s) {
    Point p = Point::spatial(0.0, 0.0, x3);
    p.set(VarId::XI1, g.symbol_xi1(k1)).set(VarId::XI2, g.symbol_xi2(k2)).set(VarId::S, s);
    return p;
}

}  // namespace

StateField build_rhs(const Wavefield& q, const std::array<Wavefield, 3>& f, const MediumSpec& m,
                     const TransverseGrid& g, cplx s) {
    require_s(s);
    require_grid(q, g, "build_rhs");
    for (const Wavefield& w : f) {
        require_grid(w, g, "build_rhs");
        if (w.x3 != q.x3) throw PreconditionError("build_rhs: source fields at different depths");
    }
    const double x3 = q.x3;
    std::vector<Expr> roots;
    for (int e = 0; e < 9; ++e) roots.push_back(m.alpha()[static_cast<std::size_t>(e)]);
    roots.push_back(recip(m.alpha(2, 2)));
    const std::vector<Vec> al = sample_all(Tape(roots), g, x3, s);
    auto alpha = [&](int j, int k) -> const Vec& { return al[static_cast<std::size_t>(3 * j + k)]; };

    Vec r1 = q.data;
    for (int mu = 0; mu < 2; ++mu) {
        Vec flux = Vec::Zero(g.size());
        for (int k = 0; k < 3; ++k) flux += alpha(mu, k).cwiseProduct(f[static_cast<std::size_t>(k)].data);
        r1 -= spectral_derivative(g, flux, mu) / s;
    }
    Vec r2 = Vec::Zero(g.size());
    for (int k = 0; k < 3; ++k) r2 += alpha(2, k).cwiseProduct(f[static_cast<std::size_t>(k)].data);

    const Vec n2 = r2.cwiseProduct(al[9]);
    Vec n1 = r1;
    for (int mu = 0; mu < 2; ++mu) n1 += spectral_derivative(g, alpha(mu, 2).cwiseProduct(n2), mu);
    return StateField(Wavefield(g, Component::VerticalVelocity, x3, s, n1), Wavefield(g, Component::Pressure, x3, s, n2));
}

SystemsSampler::SystemsSampler(const MediumSpec& m, const TransverseGrid& g, cplx s)
    : grid_(g), s_(s), depends_on_x3_(m.depends_on_x3()), tape_(coefficient_tape(m)) {
    require_s(s);
}

const SystemsSampler::Coefficients& SystemsSampler::at(double x3) {
    if (cached_x3_ && (*cached_x3_ == x3 || !depends_on_x3_)) return cache_;
    const std::vector<Vec> v = sample_all(tape_, grid_, x3, s_);
    cache_.c = {v[0], v[1]};
    cache_.d = {v[2], v[3]};
    cache_.q = {v[4], v[5], v[6], v[7]};
    cache_.kappa = v[8];
    cache_.inv_a33 = v[9];
    cached_x3_ = x3;
    return cache_;
}

std::pair<Vec, Vec> SystemsSampler::apply(double x3, const Vec& v, const Vec& p) {
    const Coefficients& c = at(x3);
    const Vec dp[2] = {spectral_derivative(grid_, p, 0), spectral_derivative(grid_, p, 1)};
    Vec top = s_ * c.kappa.cwiseProduct(p);
    Vec bottom = s_ * c.inv_a33.cwiseProduct(v);
    for (int mu = 0; mu < 2; ++mu) {
        top += spectral_derivative(grid_, c.c[static_cast<std::size_t>(mu)].cwiseProduct(v), mu);
        const Vec flux = c.q[static_cast<std::size_t>(2 * mu)].cwiseProduct(dp[0]) +
                         c.q[static_cast<std::size_t>(2 * mu + 1)].cwiseProduct(dp[1]);
        top -= spectral_derivative(grid_, flux, mu) / s_;
        bottom += c.d[static_cast<std::size_t>(mu)].cwiseProduct(dp[mu]);
    }
    return {top, bottom};
}

StateField modal_full_propagate(const MediumSpec& m, const TransverseGrid& g, cplx s, const StateField& F_a,
                                double a, double b) {
    require_s(s);
    if (!is_homogeneous(m, lattice_points(m.box(), 5)))
        throw PreconditionError("modal propagation requires a homogeneous medium");
    const SymbolMatrix22 sym = systems_symbols(m);
    const Vec vh = fft2(g, F_a.v3.data), ph = fft2(g, F_a.p.data);
    Vec vo(g.size()), po(g.size());
    const int n = g.n();
    for (int k1 = 0; k1 < n; ++k1)
        for (int k2 = 0; k2 < n; ++k2) {
            const Eigen::Matrix2cd A = symbol_matrix_at(sym, mode_point(g, k1, k2, a, s));
            const Eigen::Matrix2cd E = (-(b - a) * A).exp();
            const Eigen::Index idx = g.index(k1, k2);
            const Eigen::Vector2cd out = E * Eigen::Vector2cd(vh(idx), ph(idx));
            vo(idx) = out(0);
            po(idx) = out(1);
        }
    return StateField(Wavefield(g, Component::VerticalVelocity, b, s, ifft2(g, vo)),
                      Wavefield(g, Component::Pressure, b, s, ifft2(g, po)));
}

Trace<StateField> full_solve(const MediumSpec& m, const TransverseGrid& g, cplx s, const StateField& F_a, double a,
                             double b, const StepOptions& options) {
    require_s(s);
    require_grid(F_a.v3, g, "full_solve");
    require_grid(F_a.p, g, "full_solve");
    check_interval(a, b, options);
    Trace<StateField> trace;
    auto norm = [](const StateField& f) { return f.norm(); };

    auto run = [&](const StepOptions& o) -> std::vector<StateField> {
        if (b == a) return {F_a};
        switch (o.method) {
            case Integrator::Modal: {
                std::vector<StateField> out;
                double x = a;
                StateField cur = F_a;
                for (double target : output_depths(a, b, o.record_depths)) {
                    cur = modal_full_propagate(m, g, s, cur, x, target);
                    x = target;
                    out.push_back(cur);
                }
                return out;
            }
            case Integrator::Exponential: {
                if (m.depends_on_x3())
                    throw PreconditionError("dense exponential full solve requires an x3-independent medium");
                SystemsSampler sampler(m, g, s);
                const Eigen::Index N = g.size();
                Eigen::MatrixXcd A(2 * N, 2 * N);
                Vec e = Vec::Zero(2 * N);
                for (Eigen::Index c = 0; c < 2 * N; ++c) {
                    e(c) = 1.0;
                    const auto [t, bt] = sampler.apply(a, e.head(N), e.tail(N));
                    A.col(c) << t, bt;
                    e(c) = 0.0;
                }
                std::vector<StateField> out;
                double x = a;
                Vec cur(2 * N);
                cur << F_a.v3.data, F_a.p.data;
                for (double target : output_depths(a, b, o.record_depths)) {
                    cur = (-(target - x) * A).exp() * cur;
                    x = target;
                    out.emplace_back(Wavefield(g, Component::VerticalVelocity, x, s, cur.head(N)),
                                     Wavefield(g, Component::Pressure, x, s, cur.tail(N)));
                }
                return out;
            }
            case Integrator::RK4:
                break;
        }
        SystemsSampler sampler(m, g, s);
        auto rhs = [&](double x, const Vec& v, const Vec& p) {
            auto [t, bt] = sampler.apply(x, v, p);
            return std::pair<Vec, Vec>(-t, -bt);
        };
        auto step = [&](double x, double h, StateField& f) {
            const auto k1 = rhs(x, f.v3.data, f.p.data);
            const auto k2 = rhs(x + h / 2, f.v3.data + h / 2 * k1.first, f.p.data + h / 2 * k1.second);
            const auto k3 = rhs(x + h / 2, f.v3.data + h / 2 * k2.first, f.p.data + h / 2 * k2.second);
            const auto k4 = rhs(x + h, f.v3.data + h * k3.first, f.p.data + h * k3.second);
            f.v3.data += h / 6 * (k1.first + 2.0 * k2.first + 2.0 * k3.first + k4.first);
            f.p.data += h / 6 * (k1.second + 2.0 * k2.second + 2.0 * k3.second + k4.second);
            f.v3.x3 = f.p.x3 = x + h;
        };
        return integrate(F_a, a, b, o, step, norm);
    };

    trace.samples = run(options);
    if (options.check_convergence && b > a) {
        StepOptions twice = options;
        twice.steps *= 2;
        const StateField fine = run(twice).back();
        const StateField& coarse = trace.final();
        const double diff = std::sqrt((fine.v3.data - coarse.v3.data).squaredNorm() +
                                      (fine.p.data - coarse.p.data).squaredNorm());
        trace.convergence_delta = diff / std::max(fine.norm(), 1e-300);
    }
    return trace;
}

Trace<Wavefield> oneway_solve(const SplitSymbols& split, Sign sign, const TransverseGrid& g, cplx s,
                              const Wavefield& u_a, double a, double b, const StepOptions& options) {
    require_s(s);
    require_grid(u_a, g, "oneway_solve");
    check_interval(a, b, options);
    const PolyhomSymbol& gen = split.g_of(sign);
    const bool depth_free = (gen.var_mask() & var_bit(VarId::X3)) == 0;
    auto norm = [](const Wavefield& w) { return w.data.norm(); };
    const Component tag = sign == Sign::Plus ? Component::ConstituentPlus : Component::ConstituentMinus;

    auto run = [&](const StepOptions& o) -> std::vector<Wavefield> {
        Wavefield start = u_a;
        start.component = tag;
        if (b == a) return {start};
        switch (o.method) {
            case Integrator::Modal: {
                if (gen.var_mask() & (var_bit(VarId::X1) | var_bit(VarId::X2) | var_bit(VarId::X3)))
                    throw PreconditionError("modal one-way propagation requires a homogeneous medium");
                std::vector<Wavefield> out;
                const Expr gs = gen.sum();
                double x = a;
                Vec hat = fft2(g, start.data);
                const int n = g.n();
                for (double target : output_depths(a, b, o.record_depths)) {
                    for (int k1 = 0; k1 < n; ++k1)
                        for (int k2 = 0; k2 < n; ++k2) {
                            const cplx gv = eval(gs, mode_point(g, k1, k2, a, s));
                            hat(g.index(k1, k2)) *= std::exp(-(target - x) * gv);
                        }
                    x = target;
                    out.emplace_back(g, tag, x, s, ifft2(g, hat));
                }
                return out;
            }
            case Integrator::Exponential: {
                std::optional<Eigen::MatrixXcd> frozen, propagator;
                double frozen_h = 0.0;
                auto step = [&](double x, double h, Wavefield& u) {
                    if (!frozen || !depth_free) {
                        frozen = QuantizedOperator(gen, g, x + h / 2, s).dense_matrix();
                        propagator.reset();
                    }
                    if (!propagator || frozen_h != h) {
                        propagator = (-h * *frozen).exp();
                        frozen_h = h;
                    }
                    u.data = *propagator * u.data;
                    u.x3 = x + h;
                };
                return integrate(start, a, b, o, step, norm);
            }
            case Integrator::RK4:
                break;
        }
        std::optional<QuantizedOperator> cached;
        double cached_x = 0.0;
        auto G = [&](double x, const Vec& u) -> Vec {
            if (!cached || (!depth_free && cached_x != x)) {
                cached.emplace(gen, g, x, s);
                cached_x = x;
            }
            return -cached->apply(u);
        };
        auto step = [&](double x, double h, Wavefield& u) {
            const Vec k1 = G(x, u.data);
            const Vec k2 = G(x + h / 2, u.data + h / 2 * k1);
            const Vec k3 = G(x + h / 2, u.data + h / 2 * k2);
            const Vec k4 = G(x + h, u.data + h * k3);
            u.data += h / 6 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            u.x3 = x + h;
        };
        return integrate(start, a, b, o, step, norm);
    };

    Trace<Wavefield> trace;
    trace.samples = run(options);
    if (options.check_convergence && b > a) {
        StepOptions twice = options;
        twice.steps *= 2;
        const Wavefield fine = run(twice).back();
        trace.convergence_delta = (fine.data - trace.final().data).norm() / std::max(fine.data.norm(), 1e-300);
    }
    return trace;
}

StateField recompose(const Constituents& w, const SplitSymbols& split, const TransverseGrid& g, cplx s) {
    require_s(s);
    require_grid(w.plus, g, "recompose");
    require_grid(w.minus, g, "recompose");
    const double x3 = w.plus.x3;
    const Vec v = QuantizedOperator(split.ell(0, 0), g, x3, s).apply(w.plus.data) +
                  QuantizedOperator(split.ell(0, 1), g, x3, s).apply(w.minus.data);
    const Vec p = w.plus.data + w.minus.data;
    return StateField(Wavefield(g, Component::VerticalVelocity, x3, s, v), Wavefield(g, Component::Pressure, x3, s, p));
}

Constituents decompose(const StateField& F, const SplitSymbols& split, const TransverseGrid& g, cplx s) {
    require_s(s);
    require_grid(F.v3, g, "decompose");
    require_grid(F.p, g, "decompose");
    const double x3 = F.x3();
    const QuantizedOperator yp(split.ell(0, 0), g, x3, s), ym(split.ell(0, 1), g, x3, s);
    const std::uint8_t lateral = var_bit(VarId::X1) | var_bit(VarId::X2);
    const bool modal = !(split.ell(0, 0).var_mask() & lateral) && !(split.ell(0, 1).var_mask() & lateral);
    Vec up, um;
    if (modal) {
        // Per mode: [y+ y-; 1 1] (u+, u-) = (v, p).
        const Vec vh = fft2(g, F.v3.data), ph = fft2(g, F.p.data);
        Vec uph(g.size()), umh(g.size());
        const PolyhomSymbol sp = split.ell(0, 0), sm = split.ell(0, 1);
        const Expr ep = sp.sum(), em = sm.sum();
        const int n = g.n();
        for (int k1 = 0; k1 < n; ++k1)
            for (int k2 = 0; k2 < n; ++k2) {
                const Point pt = mode_point(g, k1, k2, x3, s);
                const cplx a = eval(ep, pt), bm = eval(em, pt);
                if (a == bm) throw PreconditionError("decompose: singular mode");
                const Eigen::Index idx = g.index(k1, k2);
                uph(idx) = (vh(idx) - bm * ph(idx)) / (a - bm);
                umh(idx) = ph(idx) - uph(idx);
            }
        up = ifft2(g, uph);
        um = ifft2(g, umh);
    } else {
        const Eigen::Index N = g.size();
        Eigen::MatrixXcd L(2 * N, 2 * N);
        L.topLeftCorner(N, N) = yp.dense_matrix();
        L.topRightCorner(N, N) = ym.dense_matrix();
        L.bottomLeftCorner(N, N) = Eigen::MatrixXcd::Identity(N, N);
        L.bottomRightCorner(N, N) = Eigen::MatrixXcd::Identity(N, N);
        Vec rhs(2 * N);
        rhs << F.v3.data, F.p.data;
        const Vec sol = L.partialPivLu().solve(rhs);
        up = sol.head(N);
        um = sol.tail(N);
    }
    return {Wavefield(g, Component::ConstituentPlus, x3, s, up), Wavefield(g, Component::ConstituentMinus, x3, s, um)};
}

}  // namespace anisosplit
