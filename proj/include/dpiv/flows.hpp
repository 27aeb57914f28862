#pragma once

// Analytic steady flows and a fourth-order Runge-Kutta streamline integrator
// that works on the analytic field directly (no rasterisation).

#include <cmath>
#include <numbers>
#include <string>
#include <type_traits>
#include <variant>

#include "grid.hpp"

namespace dpiv {

/// Axisymmetric vortex, tangential speed gamma/(2 pi r) * (1 - exp(-r^2/rc^2)).
struct LambOseen {
    double gamma = 2000.0; ///< circulation, px^2 per frame
    double rc = 40.0;      ///< core radius, px
    double cx = 128.0;
    double cy = 128.0;
};

/// Constant-speed flow whose streamlines are sinusoids y = a sin(2 pi x / b) + const.
struct SineFlow {
    double a = 6.0;   ///< streamline amplitude, px
    double b = 128.0; ///< streamline period, px
    double c = 5.0;   ///< speed, px per frame
};

struct UniformFlow {
    double u = 0.0;
    double v = 0.0;
};

struct SolidRotation {
    double omega = 0.1; ///< rad per frame, counter-clockwise in (x, y)
    double cx = 0.0;
    double cy = 0.0;
};

using FlowSpec = std::variant<LambOseen, SineFlow, UniformFlow, SolidRotation>;

/// Lamb-Oseen vortex centred on pixel (width/2, height/2).
inline LambOseen lamb_oseen_centered(double gamma, double rc, int width, int height) {
    return {gamma, rc, static_cast<double>(width / 2), static_cast<double>(height / 2)};
}

inline SolidRotation rotation_centered(double omega, int width, int height) {
    return {omega, static_cast<double>(width / 2), static_cast<double>(height / 2)};
}

inline void validate(const FlowSpec& spec) {
    if (const auto* lo = std::get_if<LambOseen>(&spec); lo && !(lo->rc > 0.0))
        throw Error("Lamb-Oseen core radius must be positive");
    if (const auto* s = std::get_if<SineFlow>(&spec); s && !(s->b > 0.0))
        throw Error("sine flow period must be positive");
}

inline Vec2 eval_velocity(const LambOseen& f, double x, double y) {
    const double dx = x - f.cx;
    const double dy = y - f.cy;
    const double r2 = dx * dx + dy * dy;
    const double rc2 = f.rc * f.rc;
    // v_theta / r, which tends to gamma / (2 pi rc^2) at the centre.
    const double angular = f.gamma / (2.0 * std::numbers::pi) * (r2 > 0.0 ? -std::expm1(-r2 / rc2) / r2 : 1.0 / rc2);
    return {-angular * dy, angular * dx};
}

inline Vec2 eval_velocity(const SineFlow& f, double x, double /*y*/) {
    const double k = 2.0 * std::numbers::pi * f.a / f.b;
    const double slope = k * std::cos(2.0 * std::numbers::pi * x / f.b);
    const double norm = std::sqrt(1.0 + slope * slope);
    return {f.c / norm, f.c * slope / norm};
}

inline Vec2 eval_velocity(const UniformFlow& f, double, double) { return {f.u, f.v}; }

inline Vec2 eval_velocity(const SolidRotation& f, double x, double y) {
    return {-f.omega * (y - f.cy), f.omega * (x - f.cx)};
}

inline Vec2 eval_velocity(const FlowSpec& spec, double x, double y) {
    return std::visit([&](const auto& f) { return eval_velocity(f, x, y); }, spec);
}

inline VectorField rasterize(const FlowSpec& spec, int width, int height) {
    if (width < 8 || height < 8)
        throw Error("rasterize: width and height must be at least 8");
    VectorField out(width, height);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x)
            out.set(x, y, eval_velocity(spec, x, y));
    return out;
}

/// Position psi(t) of the particle starting at (x0, y0), by classical RK4.
inline Vec2 advect_rk4(const FlowSpec& spec, double x0, double y0, double t, int substeps = 64) {
    if (substeps < 1)
        throw Error("advect_rk4: substeps must be >= 1");
    return std::visit(
        [&](const auto& f) {
            const double h = t / substeps;
            Vec2 p{x0, y0};
            for (int i = 0; i < substeps; ++i) {
                const Vec2 k1 = eval_velocity(f, p.x, p.y);
                const Vec2 k2 = eval_velocity(f, p.x + 0.5 * h * k1.x, p.y + 0.5 * h * k1.y);
                const Vec2 k3 = eval_velocity(f, p.x + 0.5 * h * k2.x, p.y + 0.5 * h * k2.y);
                const Vec2 k4 = eval_velocity(f, p.x + h * k3.x, p.y + h * k3.y);
                p.x += h / 6.0 * (k1.x + 2.0 * k2.x + 2.0 * k3.x + k4.x);
                p.y += h / 6.0 * (k1.y + 2.0 * k2.y + 2.0 * k3.y + k4.y);
            }
            return p;
        },
        spec);
}

/// Ground-truth deformation: psi(1)(x) - x at every pixel.
inline DeformationField truth_deformation(const FlowSpec& spec, int width, int height, int substeps = 64) {
    if (width < 8 || height < 8)
        throw Error("truth_deformation: width and height must be at least 8");
    DeformationField out(width, height);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) {
            const Vec2 p = advect_rk4(spec, x, y, 1.0, substeps);
            out.set(x, y, {p.x - x, p.y - y});
        }
    return out;
}

inline std::string flow_name(const FlowSpec& spec) {
    return std::visit(
        [](const auto& f) -> std::string {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, LambOseen>)
                return "lamb-oseen";
            else if constexpr (std::is_same_v<T, SineFlow>)
                return "sine";
            else if constexpr (std::is_same_v<T, UniformFlow>)
                return "uniform";
            else
                return "rotation";
        },
        spec);
}

} // namespace dpiv
