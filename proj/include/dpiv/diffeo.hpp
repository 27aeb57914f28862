#pragma once

// Exponential of a stationary velocity field by scaling and squaring.
//
// The field is halved N times until every vector is shorter than
// ExpConfig::step_threshold, treated as a one-step displacement, and then
// composed with itself N times:
//
//     d_0(x)     = v(x) / 2^N
//     d_{k+1}(x) = d_k(x) + d_k(x + d_k(x))
//
// d_N approximates phi_v(x) = psi(1)(x) - x, the end point of the streamline
// through x after one frame interval. Maps are stored as displacements from
// the identity; composition samples them bilinearly with clamp-to-edge.

#include <algorithm>
#include <cmath>

#include "grid.hpp"

namespace dpiv {

/// psi(t)(x) - x. psi(0) is the all-zero map.
using PositionMap = DeformationField;

struct ExpConfig {
    double step_threshold = 0.125; ///< px; largest displacement allowed before squaring
    int max_squarings = 12;
};

inline void validate(const ExpConfig& cfg) {
    if (!(cfg.step_threshold > 0.0))
        throw Error("ExpConfig: step_threshold must be positive");
    if (cfg.max_squarings < 0)
        throw Error("ExpConfig: max_squarings must be non-negative");
}

inline int choose_squarings(const VectorField& v, const ExpConfig& cfg = {}) {
    validate(cfg);
    double scaled = max_magnitude(v);
    int n = 0;
    while (scaled > cfg.step_threshold && n < cfg.max_squarings) {
        scaled *= 0.5;
        ++n;
    }
    return n;
}

/// (outer o inner)(x) as a displacement: inner(x) + outer(x + inner(x)).
inline PositionMap compose(const PositionMap& outer, const PositionMap& inner) {
    require_same_shape(outer, inner, "compose");
    PositionMap out(inner.width(), inner.height());
    for (int y = 0; y < inner.height(); ++y)
        for (int x = 0; x < inner.width(); ++x) {
            const Vec2 d = inner(x, y);
            out.set(x, y, d + sample_bilinear(outer, x + d.x, y + d.y));
        }
    return out;
}

inline DeformationField exponentiate(const VectorField& v, const ExpConfig& cfg = {}) {
    if (!all_finite(v))
        throw Error("exponentiate: velocity field contains non-finite values");
    const int n = choose_squarings(v, cfg);
    PositionMap d = as_deformation(scale_field(v, std::ldexp(1.0, -n)));
    for (int k = 0; k < n; ++k)
        d = compose(d, d);
    return d;
}

/// Largest |exp(v + dv) - exp(v) - dv| over pixels at least `margin` from
/// every edge.
inline double variation_residual(const VectorField& v, const VectorField& dv, const ExpConfig& cfg = {},
                                 int margin = 16) {
    require_same_shape(v, dv, "variation_residual");
    const DeformationField base = exponentiate(v, cfg);
    const DeformationField perturbed = exponentiate(add_fields(v, dv), cfg);
    double worst = 0.0;
    for (int y = margin; y < v.height() - margin; ++y)
        for (int x = margin; x < v.width() - margin; ++x) {
            // base + dv rounds like v + dv, so constant fields give exactly 0.
            const Vec2 r = perturbed(x, y) - (base(x, y) + dv(x, y));
            worst = std::max(worst, r.norm());
        }
    return worst;
}

} // namespace dpiv
