#pragma once

// Accuracy metrics against a reference field. Pixels closer than
// `border_margin` to any edge are excluded from every reduction.

#include <cmath>
#include <utility>

#include "grid.hpp"

namespace dpiv {

struct EvalReport {
    double rmse = 0.0;
    double mean_error = 0.0;
    double max_error = 0.0;
    long n_evaluated = 0;
    int border_margin = 0;
};

inline EvalReport rmse(const VectorField& estimate, const VectorField& truth, int border_margin = 16) {
    require_same_shape(estimate, truth, "rmse");
    if (border_margin < 0)
        throw Error("rmse: border margin must be non-negative");
    EvalReport r;
    r.border_margin = border_margin;
    double sq = 0.0, abs = 0.0;
    for (int y = border_margin; y < truth.height() - border_margin; ++y)
        for (int x = border_margin; x < truth.width() - border_margin; ++x) {
            const double e = (estimate(x, y) - truth(x, y)).norm();
            sq += e * e;
            abs += e;
            r.max_error = std::max(r.max_error, e);
            ++r.n_evaluated;
        }
    if (r.n_evaluated == 0)
        throw Error("rmse: border margin leaves no pixels to evaluate");
    r.rmse = std::sqrt(sq / r.n_evaluated);
    r.mean_error = abs / r.n_evaluated;
    return r;
}

/// Per-pixel |estimate - truth|, zero inside the border band.
inline Raster<double> error_map(const VectorField& estimate, const VectorField& truth, int border_margin = 16) {
    require_same_shape(estimate, truth, "error_map");
    Raster<double> map(truth.width(), truth.height());
    for (int y = border_margin; y < truth.height() - border_margin; ++y)
        for (int x = border_margin; x < truth.width() - border_margin; ++x)
            map(x, y) = (estimate(x, y) - truth(x, y)).norm();
    return map;
}

/// a - b per pixel and the mean |a - b| over the interior.
inline std::pair<VectorField, double> difference_field(const VectorField& a, const VectorField& b,
                                                       int border_margin = 16) {
    require_same_shape(a, b, "difference_field");
    VectorField diff = add_fields(a, scale_field(b, -1.0));
    double sum = 0.0;
    long n = 0;
    for (int y = border_margin; y < a.height() - border_margin; ++y)
        for (int x = border_margin; x < a.width() - border_margin; ++x) {
            sum += diff(x, y).norm();
            ++n;
        }
    return {std::move(diff), n > 0 ? sum / n : 0.0};
}

} // namespace dpiv
