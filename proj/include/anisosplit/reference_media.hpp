#pragma once

// Documented media used by the examples, the CLI sample configs and the
// acceptance suite. All are smooth, 2*pi periodic in x1 and x2, and satisfy
// the positivity bounds with a comfortable margin.

#include <optional>
#include <string_view>
#include <vector>

#include "anisosplit/medium.hpp"

namespace anisosplit::reference_media {

/// kappa = 1, alpha = I.
MediumSpec isotropic_unit();

/// kappa = 1, alpha = [[2, 0.3, 0.2], [0.3, 1.5, 0.1], [0.2, 0.1, 1.0]].
MediumSpec anisotropic_constant();

/// Nonsymmetric alpha varying in x1, x2 and x3:
///   kappa = 1 + 0.2 cos(x1) sin(x2) + 0.1 sin(x3)
///   alpha = [[2 + 0.2 sin(x1) cos(x2),  0.3 + 0.1 cos(x1 + x3),   0.2 + 0.1 sin(x2)],
///            [0.3 + 0.1 cos(x1 + x3),    1.5 + 0.2 cos(x2) sin(x3), 0.1 + 0.05 sin(x1)],
///            [0.25 + 0.1 cos(x1),        0.05 + 0.05 cos(x2 + x3), 1 + 0.2 sin(x1) cos(x2) + 0.1 cos(x3)]]
MediumSpec heterogeneous_anisotropic();

/// heterogeneous_anisotropic() with every x3 term removed (x3-independent).
MediumSpec lateral_anisotropic();

/// x3-dependent nonsymmetric medium with alpha33 = 1:
///   kappa = 1 + 0.3 sin(x3) + 0.1 cos(x1)
///   alpha = [[2 + 0.3 cos(x3) + 0.1 sin(x2), 0.2 sin(x3),              0.2 + 0.1 sin(x3)],
///            [0.2 sin(x3),                   1.5 + 0.2 sin(2 x3),      0.1 cos(x3)],
///            [0.1 + 0.1 cos(x1 + x3),        0.05,                     1]]
MediumSpec depth_varying();

/// Isotropic alpha = a(x) I with a = 1 + 0.2 sin(x1) cos(x2) + 0.1 sin(x3),
/// kappa = 1 + 0.1 cos(x1 + x2).
MediumSpec isotropic_heterogeneous();

/// Isotropic, x3-independent: a = 1 + 0.2 sin(x1) cos(x2), kappa = 1 + 0.1 cos(x1 + x2).
MediumSpec isotropic_lateral();

/// Lookup by function name, e.g. "depth_varying".
std::optional<MediumSpec> by_name(std::string_view name);
std::vector<std::string_view> names();

}  // namespace anisosplit::reference_media
