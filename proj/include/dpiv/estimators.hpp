#pragma once

// One-pass displacement estimators. Every estimator answers the same
// question: given images A and B, find d(x) such that A(x) ~ B(x + d(x)).
//
//  * CC: cyclic correlation of mean-subtracted interrogation windows on a
//    regular lattice, three-point Gaussian peak fit, normalised median
//    validation and bilinear densification.
//  * OF: coarse-to-fine Horn-Schunck with image warping at every level,
//    quadratic smoothness and red-black SOR sweeps.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "grid.hpp"

namespace dpiv {

enum class EstimatorKind { CC, OF };
enum class Validation { Off, NormalizedMedian };

struct EstimatorConfig {
    EstimatorKind kind = EstimatorKind::CC;
    // cross-correlation
    int window = 32;
    int step = 8;
    // optical flow
    double alpha = 25.0;
    int pyramid_levels = 4;
    int inner_iterations = 100;
    int warps = 3; ///< re-linearisations per pyramid level
    // outlier validation (sparse CC vectors only)
    Validation validation = Validation::NormalizedMedian;
    double median_threshold = 2.0;
    /// Interpolant for the image warps inside the OF pyramid.
    Interpolation interpolation = Interpolation::cubic_bspline;
};

inline EstimatorConfig cc_config() { return {}; }

inline EstimatorConfig of_config() {
    EstimatorConfig cfg;
    cfg.kind = EstimatorKind::OF;
    cfg.validation = Validation::Off;
    return cfg;
}

inline void validate(const EstimatorConfig& cfg) {
    if (cfg.window < 16)
        throw Error("EstimatorConfig: window must be at least 16");
    if (cfg.step < 1 || cfg.window % cfg.step != 0)
        throw Error("EstimatorConfig: window must be a positive multiple of step");
    if (cfg.pyramid_levels < 1)
        throw Error("EstimatorConfig: pyramid_levels must be >= 1");
    if (cfg.inner_iterations < 1)
        throw Error("EstimatorConfig: inner_iterations must be >= 1");
    if (cfg.warps < 1)
        throw Error("EstimatorConfig: warps must be >= 1");
    if (!(cfg.alpha > 0.0))
        throw Error("EstimatorConfig: alpha must be positive");
    if (!(cfg.median_threshold > 0.0))
        throw Error("EstimatorConfig: median threshold must be positive");
}

inline std::string to_string(EstimatorKind k) { return k == EstimatorKind::CC ? "cc" : "of"; }

/// Vectors on a regular lattice of window centres,
/// position(i, j) = (origin_x + i*step, origin_y + j*step).
struct SparseField {
    double origin_x = 0.0;
    double origin_y = 0.0;
    double step = 1.0;
    int nx = 0;
    int ny = 0;
    std::vector<Vec2> vectors;

    SparseField() = default;
    SparseField(double ox, double oy, double s, int nx_, int ny_)
        : origin_x(ox), origin_y(oy), step(s), nx(nx_), ny(ny_), vectors(static_cast<std::size_t>(nx_) * ny_) {}

    Vec2& at(int i, int j) { return vectors[static_cast<std::size_t>(j) * nx + i]; }
    const Vec2& at(int i, int j) const { return vectors[static_cast<std::size_t>(j) * nx + i]; }
    Vec2 position(int i, int j) const { return {origin_x + i * step, origin_y + j * step}; }
};

// --------------------------------------------------------------------------
// sub-pixel peak location

/// Offset of the peak from the centre sample of three equally spaced
/// correlation values. Three-point Gaussian when all are positive, parabolic
/// otherwise. Returns 0 for a degenerate (flat) triple.
inline double subpixel_offset(double minus, double centre, double plus) {
    if (minus > 0.0 && centre > 0.0 && plus > 0.0) {
        const double lm = std::log(minus);
        const double lc = std::log(centre);
        const double lp = std::log(plus);
        const double denom = 2.0 * lm - 4.0 * lc + 2.0 * lp;
        if (denom < 0.0)
            return std::clamp((lm - lp) / denom, -0.5, 0.5);
    }
    const double denom = 2.0 * minus - 4.0 * centre + 2.0 * plus;
    if (denom < 0.0)
        return std::clamp((minus - plus) / denom, -0.5, 0.5);
    return 0.0;
}

// --------------------------------------------------------------------------
// cross-correlation

/// Displacement of the window of side `window` centred at (cx, cy). Both
/// windows are mean-subtracted and correlated cyclically, so identical
/// windows give a symmetric plane. Each plane value is normalised by the
/// fraction of non-wrapped products. Search range +-window/4. Pixels outside
/// the images are read clamped.
inline Vec2 correlate_window(const ScalarImage& a, const ScalarImage& b, double cx, double cy, int window) {
    require_same_shape(a, b, "correlate_window");
    if (window < 4)
        throw Error("correlate_window: window too small");
    const int x0 = static_cast<int>(std::lround(cx - 0.5 * (window - 1)));
    const int y0 = static_cast<int>(std::lround(cy - 0.5 * (window - 1)));
    const int range = window / 4;

    auto extract = [&](const ScalarImage& img) {
        std::vector<double> w(static_cast<std::size_t>(window) * window);
        double mean = 0.0;
        for (int y = 0; y < window; ++y)
            for (int x = 0; x < window; ++x)
                mean += w[y * window + x] = img.at_clamped(x0 + x, y0 + y);
        mean /= static_cast<double>(w.size());
        for (auto& p : w)
            p -= mean;
        return w;
    };
    const std::vector<double> wa = extract(a);
    const std::vector<double> wb = extract(b);

    const int side = 2 * range + 1;
    std::vector<double> plane(static_cast<std::size_t>(side) * side);
    for (int sy = -range; sy <= range; ++sy)
        for (int sx = -range; sx <= range; ++sx) {
            double acc = 0.0;
            for (int y = 0; y < window; ++y) {
                const double* ra = &wa[y * window];
                const double* rb = &wb[((y + sy + window) % window) * window];
                int xb = (sx + window) % window;
                for (int x = 0; x < window; ++x) {
                    acc += ra[x] * rb[xb];
                    if (++xb == window)
                        xb = 0;
                }
            }
            // Only (W - |sx|)(W - |sy|) of the W^2 products pair matching
            // content; dividing by that fraction removes the pull toward zero.
            const double overlap = (1.0 - std::abs(sx) / double(window)) * (1.0 - std::abs(sy) / double(window));
            plane[(sy + range) * side + sx + range] = acc / overlap;
        }

    const auto best = std::max_element(plane.begin(), plane.end()) - plane.begin();
    const int px = static_cast<int>(best % side);
    const int py = static_cast<int>(best / side);
    auto c = [&](int x, int y) { return plane[y * side + x]; };
    double dx = px - range;
    double dy = py - range;
    if (px > 0 && px < side - 1)
        dx += subpixel_offset(c(px - 1, py), c(px, py), c(px + 1, py));
    if (py > 0 && py < side - 1)
        dy += subpixel_offset(c(px, py - 1), c(px, py), c(px, py + 1));
    return {dx, dy};
}

/// Correlation on the lattice of fully contained windows.
inline SparseField cross_correlate(const ScalarImage& a, const ScalarImage& b, int window, int step) {
    require_same_shape(a, b, "cross_correlate");
    const int nx = (a.width() - window) / step + 1;
    const int ny = (a.height() - window) / step + 1;
    if (a.width() < window || a.height() < window || nx < 2 || ny < 2)
        throw Error("cross_correlate: image too small for a 2x2 lattice of " + std::to_string(window) +
                    " px windows");
    const double origin = 0.5 * (window - 1);
    SparseField out(origin, origin, step, nx, ny);
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            const Vec2 p = out.position(i, j);
            out.at(i, j) = correlate_window(a, b, p.x, p.y, window);
        }
    return out;
}

/// Single-pass normalised median test over the 8-neighbourhood. Flagged
/// vectors are replaced by the neighbourhood median.
inline SparseField validate_median(const SparseField& s, double threshold, double noise_floor = 0.1) {
    if (!(threshold > 0.0))
        throw Error("validate_median: threshold must be positive");
    auto median = [](std::vector<double> v) {
        const auto mid = v.size() / 2;
        std::nth_element(v.begin(), v.begin() + mid, v.end());
        double m = v[mid];
        if (v.size() % 2 == 0)
            m = 0.5 * (m + *std::max_element(v.begin(), v.begin() + mid));
        return m;
    };
    SparseField out = s;
    std::vector<double> nu, nv, ru, rv;
    for (int j = 0; j < s.ny; ++j)
        for (int i = 0; i < s.nx; ++i) {
            nu.clear();
            nv.clear();
            for (int dj = -1; dj <= 1; ++dj)
                for (int di = -1; di <= 1; ++di) {
                    if ((di == 0 && dj == 0) || i + di < 0 || j + dj < 0 || i + di >= s.nx || j + dj >= s.ny)
                        continue;
                    nu.push_back(s.at(i + di, j + dj).x);
                    nv.push_back(s.at(i + di, j + dj).y);
                }
            if (nu.empty())
                continue;
            const double mu = median(nu);
            const double mv = median(nv);
            ru.clear();
            rv.clear();
            for (std::size_t k = 0; k < nu.size(); ++k) {
                ru.push_back(std::abs(nu[k] - mu));
                rv.push_back(std::abs(nv[k] - mv));
            }
            const Vec2 c = s.at(i, j);
            const double eu = std::abs(c.x - mu) / (median(ru) + noise_floor);
            const double ev = std::abs(c.y - mv) / (median(rv) + noise_floor);
            if (std::hypot(eu, ev) > threshold)
                out.at(i, j) = {mu, mv};
        }
    return out;
}

/// Bilinear interpolation between lattice nodes, constant beyond the
/// outermost nodes.
inline VectorField densify(const SparseField& s, int width, int height) {
    if (s.nx < 2 || s.ny < 2)
        throw Error("densify: need at least a 2x2 lattice");
    VectorField out(width, height);
    for (int y = 0; y < height; ++y) {
        const double gy = std::clamp((y - s.origin_y) / s.step, 0.0, s.ny - 1.0);
        const int j = std::min(static_cast<int>(gy), s.ny - 2);
        const double fy = gy - j;
        for (int x = 0; x < width; ++x) {
            const double gx = std::clamp((x - s.origin_x) / s.step, 0.0, s.nx - 1.0);
            const int i = std::min(static_cast<int>(gx), s.nx - 2);
            const double fx = gx - i;
            const Vec2 top = (1.0 - fx) * s.at(i, j) + fx * s.at(i + 1, j);
            const Vec2 bottom = (1.0 - fx) * s.at(i, j + 1) + fx * s.at(i + 1, j + 1);
            out.set(x, y, (1.0 - fy) * top + fy * bottom);
        }
    }
    return out;
}

// --------------------------------------------------------------------------
// optical flow

struct OpticalFlowDiagnostics {
    /// Mean |B(x + d(x)) - A(x)| at full resolution after each pyramid
    /// level, coarsest first.
    std::vector<double> level_residuals;
};

namespace detail {

inline ScalarImage downsample2(const ScalarImage& img) {
    // [1 4 6 4 1]/16 binomial prefilter then decimation; pixel i of the coarse
    // level sits on pixel 2i of the fine one.
    static constexpr double k[5] = {1.0 / 16, 4.0 / 16, 6.0 / 16, 4.0 / 16, 1.0 / 16};
    const int w = (img.width() + 1) / 2;
    const int h = (img.height() + 1) / 2;
    ScalarImage rows(w, img.height());
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int i = -2; i <= 2; ++i)
                acc += k[i + 2] * img.at_clamped(2 * x + i, y);
            rows(x, y) = acc;
        }
    ScalarImage out(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int i = -2; i <= 2; ++i)
                acc += k[i + 2] * rows.at_clamped(x, 2 * y + i);
            out(x, y) = acc;
        }
    return out;
}

inline VectorField upsample2(const VectorField& f, int width, int height) {
    VectorField out(width, height);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x)
            out.set(x, y, 2.0 * sample_bilinear(f, 0.5 * x, 0.5 * y));
    return out;
}

inline double mean_abs_residual(const ScalarImage& a, const ScalarImage& b, const VectorField& d,
                                Interpolation interp) {
    const ScalarImage bw = warp_image(b, d, interp);
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        acc += std::abs(bw.data()[i] - a.data()[i]);
    return acc / static_cast<double>(a.size());
}

// Refines `flow` in place on one pyramid level: data term linearised around
// the incoming flow, smoothness on the total flow. The data term at x is
// scaled by weight(x) and dropped where x + flow(x) leaves the raster.
inline void horn_schunck_level(const ScalarImage& a, const ScalarImage& b, const ScalarImage& weight,
                               VectorField& flow, double alpha, int sweeps, Interpolation interp) {
    const int w = a.width();
    const int h = a.height();
    const ScalarImage bw = warp_image(b, flow, interp);
    Raster<double> gx(w, h), gy(w, h), rho(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double ax = 0.5 * (a.at_clamped(x + 1, y) - a.at_clamped(x - 1, y));
            const double ay = 0.5 * (a.at_clamped(x, y + 1) - a.at_clamped(x, y - 1));
            const double bx = 0.5 * (bw.at_clamped(x + 1, y) - bw.at_clamped(x - 1, y));
            const double by = 0.5 * (bw.at_clamped(x, y + 1) - bw.at_clamped(x, y - 1));
            gx(x, y) = 0.5 * (ax + bx);
            gy(x, y) = 0.5 * (ay + by);
            // Residual at the linearisation point, expressed so the unknown is
            // the total flow: rho + gx*u + gy*v = 0.
            rho(x, y) = bw(x, y) - a(x, y) - gx(x, y) * flow.u()(x, y) - gy(x, y) * flow.v()(x, y);

            const double sx = x + flow.u()(x, y);
            const double sy = y + flow.v()(x, y);
            const bool inside = sx >= 0.0 && sy >= 0.0 && sx <= w - 1 && sy <= h - 1;
            const double root = inside ? std::sqrt(std::max(weight(x, y), 0.0)) : 0.0;
            gx(x, y) *= root;
            gy(x, y) *= root;
            rho(x, y) *= root;
        }

    const double lambda = alpha * alpha;
    constexpr double omega = 1.8;
    auto& u = flow.u();
    auto& v = flow.v();
    for (int sweep = 0; sweep < sweeps; ++sweep)
        for (int colour = 0; colour < 2; ++colour)
            for (int y = 0; y < h; ++y)
                for (int x = (y + colour) % 2; x < w; x += 2) {
                    double su = 0.0, sv = 0.0;
                    int n = 0;
                    if (x > 0) { su += u(x - 1, y); sv += v(x - 1, y); ++n; }
                    if (x + 1 < w) { su += u(x + 1, y); sv += v(x + 1, y); ++n; }
                    if (y > 0) { su += u(x, y - 1); sv += v(x, y - 1); ++n; }
                    if (y + 1 < h) { su += u(x, y + 1); sv += v(x, y + 1); ++n; }
                    const double ix = gx(x, y);
                    const double iy = gy(x, y);
                    const double r = rho(x, y);
                    // 2x2 block Gauss-Seidel solve, then over-relaxation.
                    const double a11 = ix * ix + lambda * n;
                    const double a22 = iy * iy + lambda * n;
                    const double a12 = ix * iy;
                    const double b1 = lambda * su - ix * r;
                    const double b2 = lambda * sv - iy * r;
                    const double det = a11 * a22 - a12 * a12;
                    const double gu = (a22 * b1 - a12 * b2) / det;
                    const double gv = (a11 * b2 - a12 * b1) / det;
                    u(x, y) += omega * (gu - u(x, y));
                    v(x, y) += omega * (gv - v(x, y));
                }
}

} // namespace detail

/// `weight`, when given, scales the data term per pixel (0 excludes a pixel,
/// 1 is full trust); smoothness then fills excluded regions from their
/// neighbours.
inline VectorField optical_flow(const ScalarImage& a, const ScalarImage& b, const EstimatorConfig& cfg,
                                OpticalFlowDiagnostics* diagnostics = nullptr, const ScalarImage* weight = nullptr) {
    require_same_shape(a, b, "optical_flow");
    if (weight)
        require_same_shape(a, *weight, "optical_flow weight");
    validate(cfg);
    std::vector<ScalarImage> pa{a}, pb{b};
    std::vector<ScalarImage> pw{weight ? *weight : ScalarImage(a.width(), a.height(), 1.0)};
    while (static_cast<int>(pa.size()) < cfg.pyramid_levels && pa.back().width() >= 16 && pa.back().height() >= 16) {
        pa.push_back(detail::downsample2(pa.back()));
        pb.push_back(detail::downsample2(pb.back()));
        pw.push_back(detail::downsample2(pw.back()));
    }

    VectorField flow(pa.back().width(), pa.back().height());
    for (int level = static_cast<int>(pa.size()) - 1; level >= 0; --level) {
        if (!same_shape(flow, pa[level]))
            flow = detail::upsample2(flow, pa[level].width(), pa[level].height());
        for (int k = 0; k < cfg.warps; ++k)
            detail::horn_schunck_level(pa[level], pb[level], pw[level], flow, cfg.alpha, cfg.inner_iterations,
                                       cfg.interpolation);
        if (diagnostics) {
            VectorField full = flow;
            for (int l = level; l > 0; --l)
                full = detail::upsample2(full, pa[l - 1].width(), pa[l - 1].height());
            diagnostics->level_residuals.push_back(detail::mean_abs_residual(a, b, full, cfg.interpolation));
        }
    }
    return flow;
}

// --------------------------------------------------------------------------

/// `weight` marks trustworthy pixels of the pair for OF; CC ignores it and
/// relies on median validation instead.
inline VectorField estimate(const EstimatorConfig& cfg, const ScalarImage& a, const ScalarImage& b,
                            const ScalarImage* weight = nullptr) {
    require_same_shape(a, b, "estimate");
    validate(cfg);
    if (cfg.kind == EstimatorKind::OF)
        return optical_flow(a, b, cfg, nullptr, weight);
    SparseField sparse = cross_correlate(a, b, cfg.window, cfg.step);
    if (cfg.validation == Validation::NormalizedMedian)
        sparse = validate_median(sparse, cfg.median_threshold);
    return densify(sparse, a.width(), a.height());
}

} // namespace dpiv
