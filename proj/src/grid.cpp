#include "anisosplit/grid.hpp"

#include <fftw3.h>

#include <cstdio>
#include <istream>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>

#include "anisosplit/error.hpp"
#include "anisosplit/parallel.hpp"

namespace anisosplit {

namespace {

// FFTW planning is not thread-safe; execution with new-array plans is.
class PlanCache {
public:
    fftw_plan get(int n, int sign) {
        std::lock_guard lock(mutex_);
        auto it = plans_.find({n, sign});
        if (it != plans_.end()) return it->second;
        fftw_complex* buf = fftw_alloc_complex(static_cast<std::size_t>(n) * n);
        fftw_plan p = fftw_plan_dft_2d(n, n, buf, buf, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
        fftw_free(buf);
        plans_.emplace(std::make_pair(n, sign), p);
        return p;
    }

private:
    std::mutex mutex_;
    std::map<std::pair<int, int>, fftw_plan> plans_;
};

PlanCache& plans() {
    static PlanCache c;
    return c;
}

Eigen::VectorXcd transform(const TransverseGrid& g, const Eigen::VectorXcd& u, int sign) {
    if (u.size() != g.size()) throw PreconditionError("field size does not match the grid");
    Eigen::VectorXcd in = u;
    Eigen::VectorXcd out(g.size());
    fftw_execute_dft(plans().get(g.n(), sign), reinterpret_cast<fftw_complex*>(in.data()),
                     reinterpret_cast<fftw_complex*>(out.data()));
    return out;
}

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

}  // namespace

TransverseGrid::TransverseGrid(int n, double L1, double L2) : n_(n), L1_(L1), L2_(L2) {
    if (n < 4 || !is_power_of_two(n)) throw PreconditionError("grid size must be a power of two >= 4");
    if (!(L1 > 0.0) || !(L2 > 0.0)) throw PreconditionError("grid periods must be positive");
}

std::string component_name(Component c) {
    switch (c) {
        case Component::Pressure: return "p";
        case Component::VerticalVelocity: return "v3";
        case Component::ConstituentPlus: return "u+";
        case Component::ConstituentMinus: return "u-";
        case Component::Scalar: return "scalar";
    }
    return "?";
}

Wavefield::Wavefield(const TransverseGrid& g, Component c, double depth, cplx s_value, Eigen::VectorXcd values)
    : grid(g), component(c), x3(depth), s(s_value), data(std::move(values)) {
    if (data.size() != g.size()) throw PreconditionError("field size does not match the grid");
}

void write_csv(std::ostream& os, const Wavefield& w) {
    os << "i,j,re,im\n";
    char buf[96];
    const int n = w.grid.n();
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const cplx v = w.data(w.grid.index(i, j));
            std::snprintf(buf, sizeof buf, "%d,%d,%.16e,%.16e\n", i, j, v.real(), v.imag());
            os << buf;
        }
    }
}

Wavefield read_csv(std::istream& is, const TransverseGrid& grid, Component c, double x3, cplx s) {
    Wavefield w(grid, c, x3, s);
    std::string line;
    if (!std::getline(is, line) || line.rfind("i,j,re,im", 0) != 0) throw ConfigError("wavefield CSV: missing header");
    std::vector<bool> seen(static_cast<std::size_t>(grid.size()), false);
    int lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream row(line);
        int i = -1, j = -1;
        double re = 0.0, im = 0.0;
        char c1 = 0, c2 = 0, c3 = 0;
        if (!(row >> i >> c1 >> j >> c2 >> re >> c3 >> im) || c1 != ',' || c2 != ',' || c3 != ',' || i < 0 ||
            j < 0 || i >= grid.n() || j >= grid.n())
            throw ConfigError("wavefield CSV: malformed row at line " + std::to_string(lineno));
        w.data(grid.index(i, j)) = cplx(re, im);
        seen[static_cast<std::size_t>(grid.index(i, j))] = true;
    }
    for (bool b : seen)
        if (!b) throw ConfigError("wavefield CSV: missing grid points");
    return w;
}

Eigen::VectorXcd fft2(const TransverseGrid& g, const Eigen::VectorXcd& u) { return transform(g, u, FFTW_FORWARD); }

Eigen::VectorXcd ifft2(const TransverseGrid& g, const Eigen::VectorXcd& u_hat) {
    return transform(g, u_hat, FFTW_BACKWARD) / static_cast<double>(g.size());
}

Eigen::VectorXcd spectral_derivative(const TransverseGrid& g, const Eigen::VectorXcd& u, int axis) {
    Eigen::VectorXcd h = fft2(g, u);
    const int n = g.n();
    for (int k1 = 0; k1 < n; ++k1) {
        for (int k2 = 0; k2 < n; ++k2) {
            h(g.index(k1, k2)) *= cplx(0.0, axis == 0 ? g.symbol_xi1(k1) : g.symbol_xi2(k2));
        }
    }
    return ifft2(g, h);
}

Eigen::MatrixXcd derivative_matrix(const TransverseGrid& g, int axis) {
    Eigen::MatrixXcd d(g.size(), g.size());
    Eigen::VectorXcd e = Eigen::VectorXcd::Zero(g.size());
    for (Eigen::Index c = 0; c < g.size(); ++c) {
        e(c) = 1.0;
        d.col(c) = spectral_derivative(g, e, axis);
        e(c) = 0.0;
    }
    return d;
}

Eigen::VectorXcd sample(const Expr& e, const TransverseGrid& g, double x3, cplx s) {
    if (e.var_mask() & kWavenumberMask) throw PreconditionError("sample: expression depends on xi");
    const Tape tape(e);
    Eigen::VectorXcd out(g.size());
    std::vector<cplx> scratch;
    for (int i = 0; i < g.n(); ++i) {
        for (int j = 0; j < g.n(); ++j) {
            Point p = Point::spatial(g.x1(i), g.x2(j), x3);
            p.set(VarId::S, s);
            out(g.index(i, j)) = tape.eval1(p, scratch);
        }
    }
    return out;
}

QuantizedOperator::QuantizedOperator(const PolyhomSymbol& symbol, const TransverseGrid& g, double x3, cplx s,
                                     BranchPolicy policy)
    : QuantizedOperator(symbol.sum(), g, x3, s, policy) {}

QuantizedOperator::QuantizedOperator(const Expr& symbol, const TransverseGrid& g, double x3, cplx s,
                                     BranchPolicy policy)
    : grid_(g) {
    const std::uint8_t mask = symbol.var_mask();
    const bool has_xi = (mask & kWavenumberMask) != 0;
    const bool has_x = (mask & kTransverseMask) != 0;
    kind_ = !has_xi ? Kind::Multiplier : (!has_x ? Kind::FourierMultiplier : Kind::General);

    const Tape tape(symbol);
    const int n = g.n();
    auto base_point = [&] {
        Point p = Point::spatial(0.0, 0.0, x3);
        p.set(VarId::XI1, 0.0).set(VarId::XI2, 0.0).set(VarId::S, s);
        return p;
    };

    if (kind_ == Kind::Multiplier) {
        diag_.resize(g.size());
        std::vector<cplx> scratch;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                Point p = base_point();
                p.set(VarId::X1, g.x1(i)).set(VarId::X2, g.x2(j));
                diag_(g.index(i, j)) = tape.eval1(p, scratch, policy);
            }
        return;
    }
    if (kind_ == Kind::FourierMultiplier) {
        diag_.resize(g.size());
        std::vector<cplx> scratch;
        for (int k1 = 0; k1 < n; ++k1)
            for (int k2 = 0; k2 < n; ++k2) {
                Point p = base_point();
                p.set(VarId::XI1, g.symbol_xi1(k1)).set(VarId::XI2, g.symbol_xi2(k2));
                diag_(g.index(k1, k2)) = tape.eval1(p, scratch, policy);
            }
        return;
    }

    table_.resize(g.size(), g.size());
    const double norm = 1.0 / static_cast<double>(g.size());
    std::exception_ptr failure;
#pragma omp parallel num_threads(max_threads())
    {
        std::vector<cplx> scratch;
#pragma omp for schedule(static)
        for (int i = 0; i < n; ++i) {
            try {
                for (int j = 0; j < n; ++j) {
                    Point p = base_point();
                    p.set(VarId::X1, g.x1(i)).set(VarId::X2, g.x2(j));
                    const Eigen::Index row = g.index(i, j);
                    for (int k1 = 0; k1 < n; ++k1)
                        for (int k2 = 0; k2 < n; ++k2) {
                            const Eigen::Index col = g.index(k1, k2);
                            p.set(VarId::XI1, g.symbol_xi1(k1)).set(VarId::XI2, g.symbol_xi2(k2));
                            const double phase = g.x1(i) * g.xi1(k1) + g.x2(j) * g.xi2(k2);
                            table_(row, col) = tape.eval1(p, scratch, policy) * std::polar(norm, phase);
                        }
                }
            } catch (...) {
#pragma omp critical
                if (!failure) failure = std::current_exception();
            }
        }
    }
    if (failure) std::rethrow_exception(failure);
}

Eigen::VectorXcd QuantizedOperator::apply(const Eigen::VectorXcd& u) const {
    if (u.size() != grid_.size()) throw PreconditionError("field size does not match the grid");
    switch (kind_) {
        case Kind::Multiplier: return diag_.cwiseProduct(u);
        case Kind::FourierMultiplier: return ifft2(grid_, diag_.cwiseProduct(fft2(grid_, u)));
        case Kind::General: return table_ * fft2(grid_, u);
    }
    return {};
}

Eigen::MatrixXcd QuantizedOperator::dense_matrix() const {
    if (kind_ == Kind::Multiplier) return diag_.asDiagonal();
    Eigen::MatrixXcd m(grid_.size(), grid_.size());
    Eigen::VectorXcd e = Eigen::VectorXcd::Zero(grid_.size());
    for (Eigen::Index c = 0; c < grid_.size(); ++c) {
        e(c) = 1.0;
        m.col(c) = apply(e);
        e(c) = 0.0;
    }
    return m;
}

Wavefield quantize_apply(const PolyhomSymbol& symbol, const Wavefield& field, const TransverseGrid& grid, double x3,
                         cplx s) {
    if (!(field.grid == grid)) throw PreconditionError("quantize_apply: field grid does not match");
    const QuantizedOperator op(symbol, grid, x3, s);
    return Wavefield(grid, field.component, x3, s, op.apply(field.data));
}

}  // namespace anisosplit
