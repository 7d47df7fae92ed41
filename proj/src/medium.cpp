#include "anisosplit/medium.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "anisosplit/error.hpp"
#include "anisosplit/parallel.hpp"

namespace anisosplit {

namespace {

std::string format_point(const SpatialPoint& x) {
    std::ostringstream os;
    os << "(" << x[0] << ", " << x[1] << ", " << x[2] << ")";
    return os.str();
}

Matrix3Expr parse_matrix(const std::array<std::string, 9>& text) {
    Matrix3Expr m;
    for (int k = 0; k < 9; ++k) m[k] = parse(text[k]);
    return m;
}

}  // namespace

MediumSpec::MediumSpec(Expr kappa, Matrix3Expr alpha, AlphaSource source, MediumBounds bounds, SampleBox box)
    : kappa_(std::move(kappa)),
      alpha_(std::move(alpha)),
      source_(source),
      bounds_(bounds),
      box_(box),
      var_mask_(kappa_.var_mask()) {
    for (const Expr& a : alpha_) var_mask_ |= a.var_mask();
    if (var_mask_ & kHomogeneityMask)
        throw PreconditionError("material expressions may only depend on x1, x2, x3");
}

std::string ValidationReport::summary() const {
    std::ostringstream os;
    os << "samples: " << samples << "\n"
       << "kappa range: [" << kappa_min << ", " << kappa_max << "]\n"
       << "sym(rho) eigenvalue range: [" << rho_eig_min << ", " << rho_eig_max << "]\n"
       << "alpha33 min: " << alpha33_min << "\n";
    if (passed()) {
        os << "status: PASS\n";
    } else {
        os << "status: FAIL (" << violations.size() << " violations)\n";
        for (const auto& v : violations) os << "  " << v.what << " at " << format_point(v.point) << ": " << v.value << "\n";
    }
    return os.str();
}

std::vector<SpatialPoint> lattice_points(const SampleBox& box, int n) {
    std::vector<SpatialPoint> pts;
    auto coord = [&](int axis, int k) {
        if (n == 1) return 0.5 * (box.lo[axis] + box.hi[axis]);
        return box.lo[axis] + (box.hi[axis] - box.lo[axis]) * k / (n - 1);
    };
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) pts.push_back({coord(0, i), coord(1, j), coord(2, k)});
    return pts;
}

Matrix3Expr symbolic_inverse(const Matrix3Expr& a) {
    auto at = [&](int j, int k) -> const Expr& { return a[3 * j + k]; };
    auto cof = [&](int j, int k) {
        const int j1 = (j + 1) % 3, j2 = (j + 2) % 3, k1 = (k + 1) % 3, k2 = (k + 2) % 3;
        return at(j1, k1) * at(j2, k2) - at(j1, k2) * at(j2, k1);
    };
    const Expr det = simplify(at(0, 0) * cof(0, 0) + at(0, 1) * cof(0, 1) + at(0, 2) * cof(0, 2));
    Matrix3Expr inv;
    // inverse = adj / det, adj(j, k) = cofactor(k, j)
    for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k) inv[3 * j + k] = simplify(cof(k, j) / det);
    return inv;
}

MaterialSample sample_material(const MediumSpec& m, const SpatialPoint& x) {
    const Point p = Point::spatial(x[0], x[1], x[2]);
    MaterialSample s{};
    s.kappa = eval(m.kappa(), p).real();
    for (int k = 0; k < 9; ++k) s.alpha[k] = eval(m.alpha()[k], p).real();
    return s;
}

ValidationReport validate(const MediumSpec& m, std::span<const SpatialPoint> samples) {
    if (samples.empty()) throw PreconditionError("validate: sample list is empty");

    std::vector<Expr> roots{m.kappa()};
    roots.insert(roots.end(), m.alpha().begin(), m.alpha().end());
    const Tape tape(roots);

    struct PointResult {
        double kappa = 0.0;
        double eig_min = 0.0;
        double eig_max = 0.0;
        double alpha33 = 0.0;
        std::vector<Violation> violations;
    };
    std::vector<PointResult> results(samples.size());
    const MediumBounds& b = m.bounds();

#pragma omp parallel num_threads(max_threads())
    {
        std::vector<cplx> scratch;
        std::array<cplx, 10> v;
#pragma omp for schedule(static)
        for (std::ptrdiff_t n = 0; n < static_cast<std::ptrdiff_t>(samples.size()); ++n) {
            const SpatialPoint& x = samples[n];
            PointResult& r = results[n];
            try {
                tape.eval(Point::spatial(x[0], x[1], x[2]), scratch, v);
            } catch (const EvalError& err) {
                r.violations.push_back({std::string("material evaluation failed: ") + err.what(), x, 0.0});
                continue;
            }
            for (const cplx& c : v) {
                if (std::abs(c.imag()) > 1e-12 * (1.0 + std::abs(c.real()))) {
                    r.violations.push_back({"material value is not real", x, c.imag()});
                    break;
                }
            }
            r.kappa = v[0].real();
            if (!(r.kappa >= b.kappa_min)) r.violations.push_back({"kappa below lower bound", x, r.kappa});
            if (!(r.kappa <= b.kappa_max)) r.violations.push_back({"kappa above upper bound", x, r.kappa});
            Eigen::Matrix3d alpha;
            for (int j = 0; j < 3; ++j)
                for (int k = 0; k < 3; ++k) alpha(j, k) = v[1 + 3 * j + k].real();
            r.alpha33 = alpha(2, 2);
            if (!(r.alpha33 > 0.0)) r.violations.push_back({"alpha33 not positive", x, r.alpha33});
            Eigen::FullPivLU<Eigen::Matrix3d> lu(alpha);
            if (!lu.isInvertible()) {
                r.violations.push_back({"alpha is singular", x, 0.0});
                continue;
            }
            const Eigen::Matrix3d rho = lu.inverse();
            const Eigen::Matrix3d sym = 0.5 * (rho + rho.transpose());
            Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(sym, Eigen::EigenvaluesOnly);
            r.eig_min = es.eigenvalues()(0);
            r.eig_max = es.eigenvalues()(2);
            if (!(r.eig_min >= b.rho_min)) r.violations.push_back({"sym(rho) eigenvalue below lower bound", x, r.eig_min});
            if (!(r.eig_max <= b.rho_max)) r.violations.push_back({"sym(rho) eigenvalue above upper bound", x, r.eig_max});
        }
    }

    ValidationReport report;
    report.samples = samples.size();
    report.kappa_min = report.rho_eig_min = report.alpha33_min = std::numeric_limits<double>::infinity();
    report.kappa_max = report.rho_eig_max = -std::numeric_limits<double>::infinity();
    for (const auto& r : results) {
        report.kappa_min = std::min(report.kappa_min, r.kappa);
        report.kappa_max = std::max(report.kappa_max, r.kappa);
        report.rho_eig_min = std::min(report.rho_eig_min, r.eig_min);
        report.rho_eig_max = std::max(report.rho_eig_max, r.eig_max);
        report.alpha33_min = std::min(report.alpha33_min, r.alpha33);
        report.violations.insert(report.violations.end(), r.violations.begin(), r.violations.end());
    }
    return report;
}

MediumSpec load_medium(const MediumInput& input) {
    if (input.alpha.has_value() == input.rho.has_value())
        throw ConfigError("medium: exactly one of alpha or rho must be given");
    const Expr kappa = parse(input.kappa);
    const auto lattice = lattice_points(input.box, input.lattice);

    Matrix3Expr alpha;
    AlphaSource source = AlphaSource::Given;
    if (input.rho) {
        const Matrix3Expr rho = parse_matrix(*input.rho);
        // Singular rho anywhere on the lattice is fatal.
        const Expr det = simplify(rho[0] * (rho[4] * rho[8] - rho[5] * rho[7]) -
                                  rho[1] * (rho[3] * rho[8] - rho[5] * rho[6]) +
                                  rho[2] * (rho[3] * rho[7] - rho[4] * rho[6]));
        const Tape tape(det);
        std::vector<cplx> scratch;
        for (const auto& x : lattice) {
            const cplx d = tape.eval1(Point::spatial(x[0], x[1], x[2]), scratch);
            double scale = 1.0;
            for (const Expr& r : rho) scale = std::max(scale, std::abs(eval(r, Point::spatial(x[0], x[1], x[2]))));
            if (std::abs(d) <= 1e-14 * scale * scale * scale)
                throw ValidationError("singular rho at " + format_point(x));
        }
        alpha = symbolic_inverse(rho);
        source = AlphaSource::InvertedRho;
    } else {
        alpha = parse_matrix(*input.alpha);
    }

    MediumSpec m(kappa, alpha, source, input.bounds, input.box);
    const ValidationReport report = validate(m, lattice);
    if (!report.passed()) {
        const Violation& v = report.violations.front();
        throw ValidationError("medium validation failed: " + v.what + " at " + format_point(v.point) +
                              " (value " + std::to_string(v.value) + ")");
    }
    return m;
}

SchurData schur(const MediumSpec& m) {
    SchurData d;
    const Expr& a33 = m.alpha(2, 2);
    for (int mu = 0; mu < 2; ++mu) {
        for (int nu = 0; nu < 2; ++nu) {
            d.q[2 * mu + nu] = simplify(m.alpha(mu, nu) - m.alpha(mu, 2) * m.alpha(2, nu) / a33);
            const Expr bm = m.alpha(mu, 2) + m.alpha(2, mu);
            const Expr bn = m.alpha(nu, 2) + m.alpha(2, nu);
            d.qtilde[2 * mu + nu] = simplify(m.alpha(mu, nu) - Expr(0.25) * bm * bn / a33);
        }
    }
    return d;
}

Expr quadratic_form(const Matrix2Expr& q) {
    const Expr xi[2] = {Expr::xi1(), Expr::xi2()};
    Expr r(0.0);
    for (int mu = 0; mu < 2; ++mu)
        for (int nu = 0; nu < 2; ++nu) r = r + q[2 * mu + nu] * xi[mu] * xi[nu];
    return r;
}

bool is_homogeneous(const MediumSpec& m, std::span<const SpatialPoint> samples, double tol) {
    if (m.is_symbolically_constant()) return true;
    if (samples.empty()) return true;
    const MaterialSample ref = sample_material(m, samples.front());
    auto close = [tol](double a, double b) { return std::abs(a - b) <= tol * std::max(1.0, std::abs(b)); };
    for (const auto& x : samples) {
        const MaterialSample v = sample_material(m, x);
        if (!close(v.kappa, ref.kappa)) return false;
        for (int k = 0; k < 9; ++k)
            if (!close(v.alpha[k], ref.alpha[k])) return false;
    }
    return true;
}

}  // namespace anisosplit
