#include "anisosplit/oracle.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <random>

#include "anisosplit/error.hpp"
#include "anisosplit/parallel.hpp"

namespace anisosplit {

namespace {

double rms(const std::vector<cplx>& v) {
    double s = 0.0;
    for (const cplx& c : v) s += std::norm(c);
    return std::sqrt(s / static_cast<double>(v.size()));
}

// Evaluates each root of `tape` at every point scaled by each lambda.
// Returns values[lambda][point][root].
std::vector<std::vector<std::vector<cplx>>> eval_scaled(const Tape& tape, std::span<const Point> points,
                                                        std::span<const double> lambdas) {
    std::vector<std::vector<std::vector<cplx>>> out(lambdas.size(),
                                                    std::vector<std::vector<cplx>>(points.size()));
    const std::ptrdiff_t total = static_cast<std::ptrdiff_t>(lambdas.size() * points.size());
    std::exception_ptr failure;
#pragma omp parallel num_threads(max_threads())
    {
        std::vector<cplx> scratch;
#pragma omp for schedule(dynamic)
        for (std::ptrdiff_t idx = 0; idx < total; ++idx) {
            const std::size_t l = static_cast<std::size_t>(idx) / points.size();
            const std::size_t p = static_cast<std::size_t>(idx) % points.size();
            std::vector<cplx> v(tape.num_roots());
            try {
                tape.eval(scaled(points[p], lambdas[l]), scratch, v);
            } catch (...) {
#pragma omp critical
                if (!failure) failure = std::current_exception();
            }
            out[l][p] = std::move(v);
        }
    }
    if (failure) std::rethrow_exception(failure);
    return out;
}

double one_norm(const Eigen::MatrixXcd& a) { return a.cwiseAbs().colwise().sum().maxCoeff(); }

double condition_number(const Eigen::MatrixXcd& v) {
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(v);
    const auto& sv = svd.singularValues();
    return sv(0) / sv(sv.size() - 1);
}

}  // namespace

SlopeFit fit_loglog(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw PreconditionError("fit_loglog: size mismatch");
    std::vector<double> lx, ly;
    for (std::size_t k = 0; k < x.size(); ++k) {
        if (x[k] > 0.0 && y[k] > 0.0 && std::isfinite(x[k]) && std::isfinite(y[k])) {
            lx.push_back(std::log(x[k]));
            ly.push_back(std::log(y[k]));
        }
    }
    if (lx.size() < 3) throw PreconditionError("fit_loglog: degenerate fit (fewer than 3 valid points)");
    const double n = static_cast<double>(lx.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t k = 0; k < lx.size(); ++k) {
        mx += lx[k] / n;
        my += ly[k] / n;
    }
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t k = 0; k < lx.size(); ++k) {
        sxx += (lx[k] - mx) * (lx[k] - mx);
        sxy += (lx[k] - mx) * (ly[k] - my);
    }
    if (sxx == 0.0) throw PreconditionError("fit_loglog: degenerate fit (all x equal)");
    SlopeFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    f.points = static_cast<int>(lx.size());
    for (std::size_t k = 0; k < lx.size(); ++k)
        f.max_deviation = std::max(f.max_deviation, std::abs(ly[k] - (f.intercept + f.slope * lx[k])));
    return f;
}

std::vector<double> scaling_rms(const Expr& e, std::span<const Point> points, std::span<const double> lambdas) {
    if (points.empty()) throw PreconditionError("scaling_rms: no points");
    const Tape tape(e);
    std::vector<double> out;
    for (const auto& per_lambda : eval_scaled(tape, points, lambdas)) {
        std::vector<cplx> v;
        for (const auto& r : per_lambda) v.push_back(r[0]);
        out.push_back(rms(v));
    }
    return out;
}

std::vector<double> default_lambdas() { return {4, 8, 16, 32, 64, 128, 256}; }

ResidualReport riccati_residual(const AdmittanceExpansion& exp, std::span<const Point> points,
                                std::span<const double> lambdas, std::vector<int> orders) {
    if (points.empty()) throw PreconditionError("riccati_residual: no points");
    if (lambdas.size() < 4) throw PreconditionError("riccati_residual: lambda grid needs at least 4 points");
    for (std::size_t k = 1; k < lambdas.size(); ++k)
        if (!(lambdas[k] > lambdas[k - 1])) throw PreconditionError("riccati_residual: lambda grid must increase");
    for (const Point& p : points)
        for (double l : lambdas)
            if (!((l * p.get(VarId::S)).real() > 0.0)) throw PreconditionError("riccati_residual: Re(lambda s) <= 0");
    if (orders.empty()) orders.push_back(exp.order());

    const SymbolMatrix22 a = systems_symbols(exp.medium());
    ResidualReport report;
    report.lambdas.assign(lambdas.begin(), lambdas.end());
    for (int n : orders) {
        const PolyhomSymbol e = riccati_lhs(a, exp.symbol(n), exp.eta(), -n - 1);
        ResidualSeries series;
        series.order = n;
        series.residuals = scaling_rms(e.sum(), points, lambdas);
        series.fit = fit_loglog(report.lambdas, series.residuals);
        report.series.push_back(std::move(series));
    }
    return report;
}

std::vector<std::pair<int, double>> riccati_balance(const AdmittanceExpansion& exp, std::span<const Point> points) {
    const SymbolMatrix22 a = systems_symbols(exp.medium());
    const int floor = 1 - exp.order();
    const auto parts = riccati_contributions(a, exp.symbol(), exp.eta(), floor);
    std::vector<std::pair<int, double>> out;
    const std::array<double, 1> unit{1.0};
    for (const auto& [d, list] : parts) {
        if (list.empty()) {
            out.emplace_back(d, 0.0);
            continue;
        }
        const Tape tape(list);
        const auto values = eval_scaled(tape, points, unit);
        double worst = 0.0;
        for (const auto& v : values[0]) {
            cplx sum = 0.0;
            double mag = 0.0;
            for (const cplx& c : v) {
                sum += c;
                mag += std::abs(c);
            }
            if (mag > 0.0) worst = std::max(worst, std::abs(sum) / mag);
        }
        out.emplace_back(d, worst);
    }
    return out;
}

QuadRoots quad_oracle(const MediumSpec& m, double xi1, double xi2, cplx s) {
    if (!(s.real() > 0.0)) throw PreconditionError("quad_oracle: Re s must be positive");
    const auto lattice = lattice_points(m.box(), 5);
    if (!is_homogeneous(m, lattice)) throw PreconditionError("medium not homogeneous");
    const SymbolMatrix22 a = systems_symbols(m);
    Point p = Point::spatial(0.0, 0.0, 0.0);
    p.set(VarId::XI1, xi1).set(VarId::XI2, xi2).set(VarId::S, s);
    const cplx a11 = eval(a(0, 0).sum(), p), a12 = eval(a(0, 1).sum(), p);
    const cplx a21 = eval(a(1, 0).sum(), p), a22 = eval(a(1, 1).sum(), p);
    const cplx b = a22 - a11;
    const cplx disc = b * b + 4.0 * a21 * a12;
    if (std::abs(disc) <= 1e-14 * (std::norm(b) + std::abs(4.0 * a21 * a12)))
        throw PreconditionError("quad_oracle: vanishing discriminant (glancing)");
    const cplx r = std::sqrt(disc);
    const cplx y1 = (-b + r) / (2.0 * a21);
    const cplx y2 = (-b - r) / (2.0 * a21);
    const bool first_plus = (a21 * y1 + a22).real() > (a21 * y2 + a22).real();
    return first_plus ? QuadRoots{y1, y2, disc} : QuadRoots{y2, y1, disc};
}

Eigen::MatrixXcd systems_matrix(const MediumSpec& m, const TransverseGrid& g, cplx s) {
    if (m.depends_on_x3()) throw PreconditionError("grid oracle requires an x3-independent medium");
    const SchurData sd = schur(m);
    const Eigen::Index N = g.size();
    const Eigen::MatrixXcd D[2] = {derivative_matrix(g, 0), derivative_matrix(g, 1)};
    auto diag = [&](const Expr& e) { return sample(simplify(e), g, 0.0, s); };
    const Expr& a33 = m.alpha(2, 2);

    Eigen::MatrixXcd A = Eigen::MatrixXcd::Zero(2 * N, 2 * N);
    for (int mu = 0; mu < 2; ++mu) {
        A.topLeftCorner(N, N) += D[mu] * diag(m.alpha(mu, 2) / a33).asDiagonal();
        A.bottomRightCorner(N, N) += diag(m.alpha(2, mu) / a33).asDiagonal() * D[mu];
        for (int nu = 0; nu < 2; ++nu)
            A.topRightCorner(N, N) -= (D[mu] * diag(sd.Q(mu, nu)).asDiagonal() * D[nu]) / s;
    }
    A.topRightCorner(N, N) += (s * diag(m.kappa())).asDiagonal();
    A.bottomLeftCorner(N, N) = diag(Expr::s() / a33).asDiagonal();
    return A;
}

double matrix_riccati_residual(const Eigen::MatrixXcd& A, const Eigen::MatrixXcd& Y) {
    const Eigen::Index N = Y.rows();
    const auto A11 = A.topLeftCorner(N, N), A12 = A.topRightCorner(N, N);
    const auto A21 = A.bottomLeftCorner(N, N), A22 = A.bottomRightCorner(N, N);
    const Eigen::MatrixXcd t1 = Y * A21 * Y, t2 = Y * A22, t3 = A11 * Y;
    const double scale = t1.norm() + t2.norm() + t3.norm() + A12.norm();
    return (t1 + t2 - t3 - A12).norm() / scale;
}

GridOracleResult grid_riccati_oracle(const MediumSpec& m, const TransverseGrid& g, cplx s,
                                     const GridOracleOptions& options) {
    if (!(s.real() > 0.0)) throw PreconditionError("grid oracle: Re s must be positive");
    GridOracleResult r;
    r.A = systems_matrix(m, g, s);
    const Eigen::Index N = g.size();
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(r.A);
    if (es.info() != Eigen::Success) throw PreconditionError("grid oracle: eigendecomposition failed");
    const Eigen::VectorXcd& lambda = es.eigenvalues();
    const double norm = one_norm(r.A);
    double min_re = std::numeric_limits<double>::infinity();
    std::vector<Eigen::Index> plus, minus;
    for (Eigen::Index k = 0; k < lambda.size(); ++k) {
        min_re = std::min(min_re, std::abs(lambda(k).real()));
        (lambda(k).real() > 0.0 ? plus : minus).push_back(k);
    }
    r.gap = min_re / norm;
    r.count_plus = static_cast<int>(plus.size());
    r.count_minus = static_cast<int>(minus.size());
    if (r.gap <= options.gap_tolerance)
        throw PreconditionError("grid oracle: spectral gap " + std::to_string(r.gap) + " below tolerance");
    if (r.count_plus != N || r.count_minus != N)
        throw PreconditionError("grid oracle: unequal eigenvalue split " + std::to_string(r.count_plus) + "/" +
                                std::to_string(r.count_minus));

    auto admittance = [&](const std::vector<Eigen::Index>& cols, double& cond) {
        Eigen::MatrixXcd W(N, N), V(N, N);
        for (Eigen::Index c = 0; c < N; ++c) {
            const auto v = es.eigenvectors().col(cols[static_cast<std::size_t>(c)]);
            W.col(c) = v.head(N);
            V.col(c) = v.tail(N);
        }
        cond = condition_number(V);
        const Eigen::MatrixXcd Y = V.transpose().partialPivLu().solve(W.transpose()).transpose();
        return Y;
    };
    r.Y_plus = admittance(plus, r.cond_plus);
    r.Y_minus = admittance(minus, r.cond_minus);
    r.residual_plus = matrix_riccati_residual(r.A, r.Y_plus);
    r.residual_minus = matrix_riccati_residual(r.A, r.Y_minus);
    return r;
}

std::vector<Eigen::VectorXcd> smooth_probes(const TransverseGrid& g, int count, std::uint64_t seed, int kmax) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    std::vector<Eigen::VectorXcd> out;
    const int n = g.n();
    kmax = std::min(kmax, n / 2 - 1);
    for (int c = 0; c < count; ++c) {
        Eigen::VectorXcd hat = Eigen::VectorXcd::Zero(g.size());
        for (int k1 = -kmax; k1 <= kmax; ++k1)
            for (int k2 = -kmax; k2 <= kmax; ++k2) {
                const double amp = 1.0 / (1.0 + k1 * k1 + k2 * k2);
                hat(g.index((k1 + n) % n, (k2 + n) % n)) = amp * cplx(nd(rng), nd(rng));
            }
        out.push_back(ifft2(g, hat));
    }
    return out;
}

double operator_distance(const PolyhomSymbol& sym, const Eigen::MatrixXcd& Y, const TransverseGrid& g, double x3,
                         cplx s, int probes, std::uint64_t seed) {
    if (probes < 1) throw PreconditionError("operator_distance: probes must be >= 1");
    const bool zero = sym.empty() || sym.is_structurally_zero();
    std::optional<QuantizedOperator> op;
    if (!zero) op.emplace(sym, g, x3, s);
    double worst = 0.0;
    for (const auto& u : smooth_probes(g, probes, seed)) {
        const Eigen::VectorXcd yu = Y * u;
        const Eigen::VectorXcd qu = zero ? Eigen::VectorXcd::Zero(g.size()) : op->apply(u);
        worst = std::max(worst, (qu - yu).norm() / yu.norm());
    }
    return worst;
}

OrderClaim order_claim_check(const SplitSymbols& split, std::span<const Point> points, std::span<const double> lambdas) {
    OrderClaim out;
    bool d3_zero = true;
    std::vector<Expr> d3_roots, p_roots;
    for (int k = 0; k < 4; ++k) {
        d3_roots.push_back(split.d3_ell.entries[k].sum());
        p_roots.push_back(split.p.entries[k].sum());
        if (!split.d3_ell.entries[k].is_structurally_zero()) d3_zero = false;
    }
    auto magnitudes = [&](const std::vector<Expr>& roots) {
        const Tape tape(roots);
        const auto values = eval_scaled(tape, points, lambdas);
        std::vector<double> mags;
        for (const auto& per_lambda : values) {
            double s = 0.0;
            for (const auto& v : per_lambda)
                for (const cplx& c : v) s += std::norm(c);
            mags.push_back(std::sqrt(s / static_cast<double>(per_lambda.size())));
        }
        return mags;
    };
    out.p_magnitude = magnitudes(p_roots);
    out.p = fit_loglog(lambdas, out.p_magnitude);
    if (!d3_zero) {
        out.d3_ell_magnitude = magnitudes(d3_roots);
        bool any = false;
        for (double v : out.d3_ell_magnitude) any = any || v > 0.0;
        if (any) out.d3_ell = fit_loglog(lambdas, out.d3_ell_magnitude);
    } else {
        out.d3_ell_magnitude.assign(lambdas.size(), 0.0);
    }

    const MediumSpec& m = split.plus.medium();
    const std::vector<Expr> dzy{diff(split.plus.term(0).expr, VarId::X3), d3_leading_term(m, Sign::Plus),
                                diff(split.minus.term(0).expr, VarId::X3), d3_leading_term(m, Sign::Minus)};
    const Tape tape(dzy);
    const std::array<double, 1> unit{1.0};
    const auto values = eval_scaled(tape, points, unit);
    for (const auto& v : values[0]) {
        for (int k = 0; k < 2; ++k) {
            const double scale = std::max(std::abs(v[2 * k + 1]), 1e-300);
            const double err = std::abs(v[2 * k] - v[2 * k + 1]);
            out.dzy_error = std::max(out.dzy_error, v[2 * k + 1] == 0.0 ? err : err / scale);
        }
    }
    return out;
}

}  // namespace anisosplit
