#include "anisosplit/reference_media.hpp"

namespace anisosplit::reference_media {

namespace {

MediumSpec from_text(const char* kappa, const std::array<const char*, 9>& alpha) {
    Matrix3Expr a;
    for (int k = 0; k < 9; ++k) a[k] = parse(alpha[k]);
    return MediumSpec(parse(kappa), a);
}

}  // namespace

MediumSpec isotropic_unit() { return from_text("1", {"1", "0", "0", "0", "1", "0", "0", "0", "1"}); }

MediumSpec anisotropic_constant() {
    return from_text("1", {"2", "0.3", "0.2", "0.3", "1.5", "0.1", "0.2", "0.1", "1.0"});
}

MediumSpec heterogeneous_anisotropic() {
    return from_text("1 + 0.2*cos(x1)*sin(x2) + 0.1*sin(x3)",
                     {"2 + 0.2*sin(x1)*cos(x2)", "0.3 + 0.1*cos(x1 + x3)", "0.2 + 0.1*sin(x2)",
                      "0.3 + 0.1*cos(x1 + x3)", "1.5 + 0.2*cos(x2)*sin(x3)", "0.1 + 0.05*sin(x1)",
                      "0.25 + 0.1*cos(x1)", "0.05 + 0.05*cos(x2 + x3)", "1 + 0.2*sin(x1)*cos(x2) + 0.1*cos(x3)"});
}

MediumSpec lateral_anisotropic() {
    return from_text("1 + 0.2*cos(x1)*sin(x2)",
                     {"2 + 0.2*sin(x1)*cos(x2)", "0.3 + 0.1*cos(x1)", "0.2 + 0.1*sin(x2)",
                      "0.3 + 0.1*cos(x1)", "1.5 + 0.2*cos(x2)", "0.1 + 0.05*sin(x1)",
                      "0.25 + 0.1*cos(x1)", "0.05 + 0.05*cos(x2)", "1 + 0.2*sin(x1)*cos(x2)"});
}

MediumSpec depth_varying() {
    return from_text("1 + 0.3*sin(x3) + 0.1*cos(x1)",
                     {"2 + 0.3*cos(x3) + 0.1*sin(x2)", "0.2*sin(x3)", "0.2 + 0.1*sin(x3)",
                      "0.2*sin(x3)", "1.5 + 0.2*sin(2*x3)", "0.1*cos(x3)",
                      "0.1 + 0.1*cos(x1 + x3)", "0.05", "1"});
}

MediumSpec isotropic_heterogeneous() {
    const char* a = "1 + 0.2*sin(x1)*cos(x2) + 0.1*sin(x3)";
    return from_text("1 + 0.1*cos(x1 + x2)", {a, "0", "0", "0", a, "0", "0", "0", a});
}

MediumSpec isotropic_lateral() {
    const char* a = "1 + 0.2*sin(x1)*cos(x2)";
    return from_text("1 + 0.1*cos(x1 + x2)", {a, "0", "0", "0", a, "0", "0", "0", a});
}

namespace {

struct Entry {
    std::string_view name;
    MediumSpec (*make)();
};

constexpr Entry kEntries[] = {
    {"isotropic_unit", isotropic_unit},
    {"anisotropic_constant", anisotropic_constant},
    {"heterogeneous_anisotropic", heterogeneous_anisotropic},
    {"lateral_anisotropic", lateral_anisotropic},
    {"depth_varying", depth_varying},
    {"isotropic_heterogeneous", isotropic_heterogeneous},
    {"isotropic_lateral", isotropic_lateral},
};

}  // namespace

std::optional<MediumSpec> by_name(std::string_view name) {
    for (const Entry& e : kEntries)
        if (e.name == name) return e.make();
    return std::nullopt;
}

std::vector<std::string_view> names() {
    std::vector<std::string_view> out;
    for (const Entry& e : kEntries) out.push_back(e.name);
    return out;
}

}  // namespace anisosplit::reference_media
