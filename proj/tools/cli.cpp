#include "cli.hpp"

#include <openssl/evp.h>

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <json.hpp>
#include <sstream>

#include "anisosplit/error.hpp"
#include "anisosplit/normalization.hpp"
#include "anisosplit/oracle.hpp"
#include "anisosplit/propagator.hpp"
#include "anisosplit/reference_media.hpp"
#include "config.hpp"

namespace anisosplit::cli {

namespace {

namespace fs = std::filesystem;

constexpr const char* kVersion = "0.1.0";

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.16e", v);
    return buf;
}

std::string sha256_hex(const std::string& data) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr);
    std::ostringstream ss;
    for (unsigned int k = 0; k < len; ++k) ss << std::hex << std::setw(2) << std::setfill('0') << int(md[k]);
    return ss.str();
}

// Rows of a CSV file, numbers in fixed 17-digit scientific format.
class Csv {
public:
    explicit Csv(std::initializer_list<std::string> header) {
        bool first = true;
        for (const auto& h : header) {
            text_ += (first ? "" : ",") + h;
            first = false;
        }
        text_ += "\n";
    }
    Csv& cell(const std::string& s) {
        text_ += (row_started_ ? "," : "") + s;
        row_started_ = true;
        return *this;
    }
    Csv& cell(double v) { return cell(num(v)); }
    Csv& cell(int v) { return cell(std::to_string(v)); }
    Csv& cell(cplx v) { return cell(v.real()).cell(v.imag()); }
    void end() {
        text_ += "\n";
        row_started_ = false;
    }
    const std::string& text() const { return text_; }

private:
    std::string text_;
    bool row_started_ = false;
};

struct Run {
    Config cfg;
    fs::path out_dir;
    std::uint64_t seed = 1;
    std::string subcommand;
    std::vector<std::string> args;
    std::ostream& out;
    std::vector<std::pair<std::string, std::string>> files;  // name, sha256

    void write(const std::string& name, const std::string& content) {
        fs::create_directories(out_dir);
        std::ofstream f(out_dir / name, std::ios::binary);
        if (!f) throw ConfigError("cannot write '" + (out_dir / name).string() + "'");
        f << content;
        files.emplace_back(name, sha256_hex(content));
        out << "wrote " << (out_dir / name).string() << "\n";
    }

    void write_manifest() {
        nlohmann::ordered_json j;
        j["tool"] = "anisosplit";
        j["version"] = kVersion;
        j["subcommand"] = subcommand;
        j["arguments"] = args;
        j["seed"] = seed;
        j["config_source"] = cfg.source();
        j["config"] = cfg.text();
        j["files"] = nlohmann::ordered_json::array();
        for (const auto& [name, hash] : files) j["files"].push_back({{"name", name}, {"sha256", hash}});
        fs::create_directories(out_dir);
        std::ofstream f(out_dir / "manifest.json");
        f << j.dump(2) << "\n";
    }
};

cplx parse_complex(const Config& cfg, const std::string& section, const std::string& key, cplx fallback) {
    const auto e = cfg.find(section, key);
    if (!e) return fallback;
    try {
        const Expr x = parse(e->value);
        if (x.var_mask() != 0) cfg.fail(section, key, "expected a constant");
        return eval(x, Point());
    } catch (const ParseError& err) {
        cfg.fail(section, key, err.what());
    }
}

MediumSpec load_medium_section(const Config& cfg) {
    cfg.require_section("medium");
    if (const auto ref = cfg.find("medium", "reference")) {
        const auto m = reference_media::by_name(ref->value);
        if (!m) {
            std::string known;
            for (auto n : reference_media::names()) known += (known.empty() ? "" : ", ") + std::string(n);
            cfg.fail("medium", "reference", "unknown reference medium (known: " + known + ")");
        }
        return *m;
    }
    MediumInput in;
    auto checked = [&](const std::string& key) {
        const auto& e = cfg.get("medium", key);
        try {
            (void)parse(e.value);
        } catch (const ParseError& err) {
            cfg.fail("medium", key, err.what());
        }
        return e.value;
    };
    in.kappa = checked("kappa");
    for (const char* name : {"alpha", "rho"}) {
        bool any = false;
        std::array<std::string, 9> entries;
        for (int j = 0; j < 3; ++j)
            for (int k = 0; k < 3; ++k) {
                const std::string key = name + std::to_string(j + 1) + std::to_string(k + 1);
                if (cfg.find("medium", key)) {
                    entries[static_cast<std::size_t>(3 * j + k)] = checked(key);
                    any = true;
                } else if (j == k) {
                    entries[static_cast<std::size_t>(3 * j + k)] = "";
                } else {
                    entries[static_cast<std::size_t>(3 * j + k)] = "0";
                }
            }
        if (!any) continue;
        for (int j = 0; j < 3; ++j)
            if (entries[static_cast<std::size_t>(4 * j)].empty())
                throw ConfigError(cfg.source() + ": [medium] is missing diagonal entry " + name +
                                  std::to_string(j + 1) + std::to_string(j + 1));
        (std::string(name) == "alpha" ? in.alpha : in.rho) = entries;
    }
    in.bounds.kappa_min = cfg.get_double("medium", "kappa_min", in.bounds.kappa_min);
    in.bounds.kappa_max = cfg.get_double("medium", "kappa_max", in.bounds.kappa_max);
    in.bounds.rho_min = cfg.get_double("medium", "rho_min", in.bounds.rho_min);
    in.bounds.rho_max = cfg.get_double("medium", "rho_max", in.bounds.rho_max);
    const auto lo = cfg.get_list("medium", "box_lo", {in.box.lo[0], in.box.lo[1], in.box.lo[2]});
    const auto hi = cfg.get_list("medium", "box_hi", {in.box.hi[0], in.box.hi[1], in.box.hi[2]});
    if (lo.size() != 3) cfg.fail("medium", "box_lo", "expected 3 values");
    if (hi.size() != 3) cfg.fail("medium", "box_hi", "expected 3 values");
    in.box = SampleBox{{lo[0], lo[1], lo[2]}, {hi[0], hi[1], hi[2]}};
    in.lattice = cfg.get_int("medium", "lattice", in.lattice);
    return load_medium(in);
}

ProbeRegion probe_region(const Config& cfg, const MediumSpec& m, const std::string& section) {
    ProbeRegion r;
    r.box = m.box();
    r.xi_max = cfg.get_double(section, "xi_max", r.xi_max);
    r.s_re_min = cfg.get_double(section, "s_re_min", r.s_re_min);
    r.s_re_max = cfg.get_double(section, "s_re_max", r.s_re_max);
    r.s_im_max = cfg.get_double(section, "s_im_max", r.s_im_max);
    return r;
}

std::vector<Sign> signs(const Config& cfg, const std::string& section) {
    const std::string s = cfg.get_string(section, "sign", "both");
    if (s == "+" || s == "plus") return {Sign::Plus};
    if (s == "-" || s == "minus") return {Sign::Minus};
    if (s == "both") return {Sign::Plus, Sign::Minus};
    cfg.fail(section, "sign", "expected +, - or both");
}

Sign single_sign(const Config& cfg, const std::string& section) {
    const auto all = signs(cfg, section);
    if (all.size() != 1) cfg.fail(section, "sign", "expected + or -");
    return all[0];
}

ExpansionOptions expansion_options(const Config& cfg, std::uint64_t seed) {
    ExpansionOptions o;
    o.seed = seed;
    o.max_nodes = static_cast<std::size_t>(cfg.get_int("expansion", "max_nodes", static_cast<int>(o.max_nodes)));
    const std::string method = cfg.get_string("expansion", "method", "collector");
    if (method == "collector")
        o.method = ExpansionMethod::Collector;
    else if (method == "closed-form")
        o.method = ExpansionMethod::ClosedForm;
    else
        cfg.fail("expansion", "method", "expected collector or closed-form");
    return o;
}

int eta_of(const Config& cfg, const std::string& section) {
    const int eta = cfg.get_int(section, "eta", 1);
    if (eta != 0 && eta != 1) cfg.fail(section, "eta", "expected 0 or 1");
    return eta;
}

SplitSymbols split_from(const MediumSpec& m, int eta, int order, const ExpansionOptions& o) {
    return split_symbols(expand(m, Sign::Plus, eta, order, o), expand(m, Sign::Minus, eta, order, o));
}

TransverseGrid grid_of(const Config& cfg) {
    const int n = cfg.get_int("grid", "n", 16);
    try {
        return TransverseGrid(n, cfg.get_double("grid", "L1", 2.0 * M_PI), cfg.get_double("grid", "L2", 2.0 * M_PI));
    } catch (const PreconditionError& e) {
        cfg.fail("grid", "n", e.what());
    }
}

// --- subcommands ---------------------------------------------------------

int medium_check(Run& r) {
    const MediumSpec m = load_medium_section(r.cfg);
    const int lattice = r.cfg.get_int("medium", "lattice", 5);
    const ValidationReport rep = validate(m, lattice_points(m.box(), lattice));
    r.out << rep.summary() << "\n";
    r.out << "homogeneous: " << (is_homogeneous(m, lattice_points(m.box(), lattice)) ? "yes" : "no")
          << ", x3-dependent: " << (m.depends_on_x3() ? "yes" : "no") << "\n";
    Csv csv({"quantity", "value"});
    csv.cell("samples").cell(static_cast<int>(rep.samples)).end();
    csv.cell("kappa_min").cell(rep.kappa_min).end();
    csv.cell("kappa_max").cell(rep.kappa_max).end();
    csv.cell("rho_eig_min").cell(rep.rho_eig_min).end();
    csv.cell("rho_eig_max").cell(rep.rho_eig_max).end();
    csv.cell("alpha33_min").cell(rep.alpha33_min).end();
    csv.cell("violations").cell(static_cast<int>(rep.violations.size())).end();
    r.write("medium_check.csv", csv.text());
    return rep.passed() ? 0 : 1;
}

int expand_cmd(Run& r) {
    const MediumSpec m = load_medium_section(r.cfg);
    const int order = r.cfg.get_int("expansion", "order", 2);
    const int eta = eta_of(r.cfg, "expansion");
    const ExpansionOptions opts = expansion_options(r.cfg, r.seed);
    const auto probes = random_probes(r.cfg.get_int("expansion", "probes", 20), r.seed,
                                      probe_region(r.cfg, m, "expansion"));
    Csv terms({"sign", "n", "degree", "dag_size", "homogeneity_error"});
    Csv values({"sign", "n", "probe", "x1", "x2", "x3", "xi1", "xi2", "s_re", "s_im", "re", "im"});
    for (Sign sg : signs(r.cfg, "expansion")) {
        const AdmittanceExpansion e = expand(m, sg, eta, order, opts);
        for (int n = 0; n <= order; ++n) {
            const SymbolTerm& t = e.term(n);
            const double herr = e.homogeneity()[static_cast<std::size_t>(n)].max_error;
            terms.cell(sign_name(sg)).cell(n).cell(t.degree).cell(static_cast<int>(t.expr.dag_size())).cell(herr).end();
            r.out << "y" << sign_name(sg) << "_" << -n << ": " << t.expr.dag_size() << " nodes, homogeneity error "
                  << herr << "\n";
            const Tape tape(t.expr);
            std::vector<cplx> scratch;
            for (std::size_t k = 0; k < probes.size(); ++k) {
                const Point& p = probes[k];
                values.cell(sign_name(sg)).cell(n).cell(static_cast<int>(k));
                for (VarId v : {VarId::X1, VarId::X2, VarId::X3, VarId::XI1, VarId::XI2}) values.cell(p.get(v).real());
                values.cell(p.get(VarId::S)).cell(tape.eval1(p, scratch)).end();
            }
        }
    }
    r.write("expansion.csv", terms.text());
    r.write("expansion_values.csv", values.text());
    return 0;
}

int residual_cmd(Run& r) {
    const MediumSpec m = load_medium_section(r.cfg);
    const int order = r.cfg.get_int("expansion", "order", 3);
    const int eta = eta_of(r.cfg, "expansion");
    const ExpansionOptions opts = expansion_options(r.cfg, r.seed);
    const auto lambdas = r.cfg.get_list("residual", "lambdas", default_lambdas());
    const auto probes = random_probes(r.cfg.get_int("residual", "points", 200), r.seed,
                                      probe_region(r.cfg, m, "residual"));
    std::vector<int> orders;
    for (int n = 1; n <= order; ++n) orders.push_back(n);
    Csv csv({"sign", "eta", "order", "lambda", "residual", "slope", "max_deviation"});
    for (Sign sg : signs(r.cfg, "expansion")) {
        const AdmittanceExpansion e = expand(m, sg, eta, order, opts);
        const ResidualReport rep = riccati_residual(e, probes, lambdas, orders);
        for (const ResidualSeries& s : rep.series) {
            r.out << "sign " << sign_name(sg) << " order " << s.order << ": slope " << s.fit.slope << " (expected "
                  << -s.order << ")\n";
            for (std::size_t k = 0; k < lambdas.size(); ++k)
                csv.cell(sign_name(sg)).cell(eta).cell(s.order).cell(lambdas[k]).cell(s.residuals[k])
                    .cell(s.fit.slope).cell(s.fit.max_deviation).end();
        }
    }
    r.write("residual.csv", csv.text());
    return 0;
}

int oracle_quad(Run& r) {
    const MediumSpec m = load_medium_section(r.cfg);
    const auto probes = random_probes(r.cfg.get_int("oracle", "probes", 100), r.seed, probe_region(r.cfg, m, "oracle"));
    const Tape yp(leading_term(m, Sign::Plus).expr), ym(leading_term(m, Sign::Minus).expr);
    std::vector<cplx> scratch;
    Csv csv({"probe", "xi1", "xi2", "s_re", "s_im", "plus_re", "plus_im", "minus_re", "minus_im", "y0_plus_relerr",
             "y0_minus_relerr"});
    double worst = 0.0;
    for (std::size_t k = 0; k < probes.size(); ++k) {
        const Point& p = probes[k];
        const QuadRoots q = quad_oracle(m, p.get(VarId::XI1).real(), p.get(VarId::XI2).real(), p.get(VarId::S));
        const double ep = std::abs(yp.eval1(p, scratch) - q.plus) / std::abs(q.plus);
        const double em = std::abs(ym.eval1(p, scratch) - q.minus) / std::abs(q.minus);
        worst = std::max({worst, ep, em});
        csv.cell(static_cast<int>(k)).cell(p.get(VarId::XI1).real()).cell(p.get(VarId::XI2).real())
            .cell(p.get(VarId::S)).cell(q.plus).cell(q.minus).cell(ep).cell(em).end();
    }
    r.out << "max relative deviation of y0 from the quadratic roots: " << worst << "\n";
    r.write("oracle_quad.csv", csv.text());
    return worst <= r.cfg.get_double("oracle", "tolerance", 1e-12) ? 0 : 1;
}

int oracle_grid(Run& r) {
    const MediumSpec m = load_medium_section(r.cfg);
    const TransverseGrid g = grid_of(r.cfg);
    const cplx s = parse_complex(r.cfg, "oracle", "s", 40.0);
    GridOracleOptions go;
    go.gap_tolerance = r.cfg.get_double("oracle", "gap_tolerance", go.gap_tolerance);
    const int order = r.cfg.get_int("expansion", "order", 2);
    const int probes = r.cfg.get_int("oracle", "probes", 4);
    const ExpansionOptions opts = expansion_options(r.cfg, r.seed);
    const GridOracleResult res = grid_riccati_oracle(m, g, s, go);
    r.out << "eigenvalue split " << res.count_plus << "/" << res.count_minus << ", gap " << res.gap
          << ", Riccati residual " << res.residual_plus << " / " << res.residual_minus << "\n";
    Csv csv({"order", "distance_plus", "distance_minus"});
    for (int n = 0; n <= order; ++n) {
        const double dp = operator_distance(expand(m, Sign::Plus, 1, n, opts).symbol(), res.Y_plus, g, 0.0, s, probes, r.seed);
        const double dm = operator_distance(expand(m, Sign::Minus, 1, n, opts).symbol(), res.Y_minus, g, 0.0, s, probes, r.seed);
        r.out << "order " << n << ": distance " << dp << " / " << dm << "\n";
        csv.cell(n).cell(dp).cell(dm).end();
    }
    Csv summary({"quantity", "value"});
    summary.cell("count_plus").cell(res.count_plus).end();
    summary.cell("count_minus").cell(res.count_minus).end();
    summary.cell("gap").cell(res.gap).end();
    summary.cell("cond_plus").cell(res.cond_plus).end();
    summary.cell("cond_minus").cell(res.cond_minus).end();
    summary.cell("residual_plus").cell(res.residual_plus).end();
    summary.cell("residual_minus").cell(res.residual_minus).end();
    r.write("oracle_grid.csv", csv.text());
    r.write("oracle_grid_summary.csv", summary.text());
    return 0;
}

int order_claim(Run& r) {
    const MediumSpec m = load_medium_section(r.cfg);
    const int order = r.cfg.get_int("expansion", "order", 2);
    const int eta = eta_of(r.cfg, "expansion");
    const SplitSymbols sp = split_from(m, eta, order, expansion_options(r.cfg, r.seed));
    const auto lambdas = r.cfg.get_list("residual", "lambdas", default_lambdas());
    const auto probes = random_probes(r.cfg.get_int("residual", "points", 100), r.seed,
                                      probe_region(r.cfg, m, "residual"));
    const OrderClaim c = order_claim_check(sp, probes, lambdas);
    Csv csv({"quantity", "lambda", "magnitude"});
    for (std::size_t k = 0; k < lambdas.size(); ++k) {
        csv.cell("d3_ell").cell(lambdas[k]).cell(c.d3_ell_magnitude[k]).end();
        csv.cell("p").cell(lambdas[k]).cell(c.p_magnitude[k]).end();
    }
    r.out << "slope p: " << c.p.slope << "\n";
    if (c.d3_ell)
        r.out << "slope d3 ell: " << c.d3_ell->slope << "\n";
    else
        r.out << "d3 ell vanishes identically (x3-independent medium)\n";
    r.out << "d3 y0 vs closed formula, max relative error: " << c.dzy_error << "\n";
    Csv summary({"quantity", "value"});
    summary.cell("slope_p").cell(c.p.slope).end();
    if (c.d3_ell) summary.cell("slope_d3_ell").cell(c.d3_ell->slope).end();
    summary.cell("dzy_error").cell(c.dzy_error).end();
    r.write("order_claim.csv", csv.text());
    r.write("order_claim_summary.csv", summary.text());
    return 0;
}

NormalizationSpec parse_kind(const std::string& kind) {
    if (kind == "impedance") return NormalizationSpec::impedance();
    if (kind.rfind("constant:", 0) == 0) {
        const std::string rest = kind.substr(9);
        const auto comma = rest.find(',');
        if (comma == std::string::npos) throw CLI::ValidationError("--kind", "expected constant:m,m'");
        try {
            const cplx a = eval(parse(rest.substr(0, comma)), Point());
            const cplx b = eval(parse(rest.substr(comma + 1)), Point());
            return NormalizationSpec::constant(a, b);
        } catch (const Error& e) {
            throw CLI::ValidationError("--kind", e.what());
        }
    }
    throw CLI::ValidationError("--kind", "expected constant:m,m' or impedance");
}

int normalize_cmd(Run& r, const std::string& kind) {
    const NormalizationSpec spec = parse_kind(kind);
    const MediumSpec m = load_medium_section(r.cfg);
    const int order = r.cfg.get_int("expansion", "order", 2);
    const int eta = eta_of(r.cfg, "expansion");
    const SplitSymbols sp = split_from(m, eta, order, expansion_options(r.cfg, r.seed));
    const SplitSymbols nn = apply_normalization(sp, spec);
    const auto probes = random_probes(r.cfg.get_int("expansion", "probes", 20), r.seed,
                                      probe_region(r.cfg, m, "expansion"));
    const double off = offdiagonal_ratio(nn.g, probes);
    r.out << "off-diagonal ratio of normalized G: " << off << "\n";
    Csv csv({"entry", "degree", "probe", "re", "im"});
    const std::pair<const char*, const PolyhomSymbol*> entries[] = {
        {"g_plus", &nn.g_plus}, {"g_minus", &nn.g_minus}, {"l11", &nn.ell(0, 0)},
        {"l12", &nn.ell(0, 1)}, {"l21", &nn.ell(1, 0)},   {"l22", &nn.ell(1, 1)}};
    for (const auto& [name, sym] : entries) {
        if (sym->empty()) continue;
        for (const SymbolTerm& t : sym->terms()) {
            const Tape tape(t.expr);
            std::vector<cplx> scratch;
            for (std::size_t k = 0; k < probes.size(); ++k)
                csv.cell(name).cell(t.degree).cell(static_cast<int>(k)).cell(tape.eval1(probes[k], scratch)).end();
        }
    }
    r.write("normalize.csv", csv.text());
    return off <= 1e-10 ? 0 : 1;
}

Integrator integrator_of(const Config& cfg) {
    const std::string m = cfg.get_string("propagation", "method", "rk4");
    if (m == "rk4") return Integrator::RK4;
    if (m == "modal") return Integrator::Modal;
    if (m == "exponential") return Integrator::Exponential;
    cfg.fail("propagation", "method", "expected rk4, modal or exponential");
}

int propagate_cmd(Run& r) {
    const MediumSpec m = load_medium_section(r.cfg);
    const TransverseGrid g = grid_of(r.cfg);
    r.cfg.require_section("propagation");
    const double a = r.cfg.get_double("propagation", "a", 0.0);
    const double b = r.cfg.get_double("propagation", "b");
    if (!(b > a)) r.cfg.fail("propagation", "b", "expected b > a");
    StepOptions so;
    so.steps = r.cfg.get_int("propagation", "steps", 100);
    if (so.steps < 1) r.cfg.fail("propagation", "steps", "expected a positive integer");
    so.method = integrator_of(r.cfg);
    so.record_depths = r.cfg.get_list("propagation", "record_depths", {});
    so.check_convergence = r.cfg.get_string("propagation", "check_convergence", "false") == "true";
    const int order = r.cfg.get_int("propagation", "order", 1);
    const int eta = eta_of(r.cfg, "propagation");
    const Sign sign = single_sign(r.cfg, "propagation");
    const cplx s = parse_complex(r.cfg, "propagation", "s", 10.0);
    const SplitSymbols sp = split_from(m, eta, order, expansion_options(r.cfg, r.seed));

    const int kmax = r.cfg.get_int("propagation", "initial_kmax", 3);
    Wavefield u0(g, sign == Sign::Plus ? Component::ConstituentPlus : Component::ConstituentMinus, a, s,
                 smooth_probes(g, 1, r.seed, kmax)[0]);
    const Trace<Wavefield> tr = oneway_solve(sp, sign, g, s, u0, a, b, so);
    Csv index({"sample", "x3", "file", "norm"});
    for (std::size_t k = 0; k < tr.samples.size(); ++k) {
        std::ostringstream os;
        write_csv(os, tr.samples[k]);
        const std::string name = "trace_" + std::to_string(k) + ".csv";
        r.write(name, os.str());
        index.cell(static_cast<int>(k)).cell(tr.samples[k].x3).cell(name).cell(tr.samples[k].data.norm()).end();
    }
    if (tr.convergence_delta) r.out << "step doubling changes the result by " << *tr.convergence_delta << "\n";

    if (r.cfg.get_string("propagation", "compare_full", "false") == "true") {
        const Wavefield zero(g, sign == Sign::Plus ? Component::ConstituentMinus : Component::ConstituentPlus, a, s);
        const Constituents w0 = sign == Sign::Plus ? Constituents{u0, zero} : Constituents{zero, u0};
        StepOptions fo = so;
        if (fo.method == Integrator::Modal && !is_homogeneous(m, lattice_points(m.box(), 5)))
            fo.method = Integrator::RK4;
        const Trace<StateField> full = full_solve(m, g, s, recompose(w0, sp, g, s), a, b, fo);
        Csv cmp({"x3", "relative_error"});
        for (std::size_t k = 0; k < tr.samples.size(); ++k) {
            Wavefield other = zero;
            other.x3 = tr.samples[k].x3;
            const Constituents wk = sign == Sign::Plus ? Constituents{tr.samples[k], other} : Constituents{other, tr.samples[k]};
            const StateField one = recompose(wk, sp, g, s);
            const StateField& ref = full.samples[k];
            const double err = std::sqrt((one.v3.data - ref.v3.data).squaredNorm() + (one.p.data - ref.p.data).squaredNorm()) /
                               ref.norm();
            r.out << "x3 = " << tr.samples[k].x3 << ": one-way vs full relative error " << err << "\n";
            cmp.cell(tr.samples[k].x3).cell(err).end();
        }
        r.write("compare_full.csv", cmp.text());
    }
    r.write("traces.csv", index.text());
    return 0;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"symbol-level wave splitting for anisotropic acoustic media", "anisosplit"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    std::string config_path, out_dir = "out", kind, oracle_kind;
    std::optional<std::uint64_t> seed;
    auto common = [&](CLI::App* sub) {
        sub->add_option("config", config_path, "config file")->required();
        sub->add_option("--out", out_dir, "output directory")->capture_default_str();
        sub->add_option("--seed", seed, "seed for random probes (overrides [run] seed)");
    };
    CLI::App* medium = app.add_subcommand("medium-check", "validate a medium");
    CLI::App* expand_sub = app.add_subcommand("expand", "admittance symbol expansion");
    CLI::App* residual = app.add_subcommand("residual", "Riccati residual scaling");
    CLI::App* oracle = app.add_subcommand("oracle", "exact oracles (quad or grid)");
    oracle->add_option("kind", oracle_kind, "quad or grid")->required()->check(CLI::IsMember({"quad", "grid"}));
    CLI::App* claim = app.add_subcommand("order-claim", "scaling of d3 L and L G");
    CLI::App* normalize = app.add_subcommand("normalize", "normalization of the splitting");
    normalize->add_option("--kind", kind, "constant:m,m' or impedance")->required();
    CLI::App* propagate = app.add_subcommand("propagate", "one-way propagation demo");
    for (CLI::App* sub : {medium, expand_sub, residual, oracle, claim, normalize, propagate}) common(sub);

    std::vector<std::string> args(argv + 1, argv + argc);
    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForVersion&) {
        out << kVersion << "\n";
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << "\n" << app.help();
        return 2;
    }

    try {
        CLI::App* sub = app.get_subcommands().front();
        Run r{Config::load(config_path), out_dir, 1, sub->get_name(), args, out, {}};
        r.seed = seed ? *seed : static_cast<std::uint64_t>(r.cfg.get_int("run", "seed", 1));
        int code = 0;
        if (sub == medium) code = medium_check(r);
        else if (sub == expand_sub) code = expand_cmd(r);
        else if (sub == residual) code = residual_cmd(r);
        else if (sub == oracle) code = oracle_kind == "quad" ? oracle_quad(r) : oracle_grid(r);
        else if (sub == claim) code = order_claim(r);
        else if (sub == normalize) code = normalize_cmd(r, kind);
        else code = propagate_cmd(r);
        r.write_manifest();
        return code;
    } catch (const CLI::ValidationError& e) {
        err << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return 2;
    } catch (const ParseError& e) {
        err << "config error: " << e.what() << "\n";
        return 2;
    } catch (const SizeLimitError& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace anisosplit::cli
