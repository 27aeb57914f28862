#pragma once

// Iterative interrogation. Each iteration warps the recordings according to
// the scheme, estimates a corrector between the warped pair and adds it to
// the velocity field:
//
//   scheme  first frame               second frame
//   FDI     I1(x)                     I2(x + v)
//   CDI     I1(x - v/2)               I2(x + v/2)
//   CDDI    I1(x + phi_{-v/2}(x))     I2(x + phi_{v/2}(x))
//   FDDI    I1(x)                     I2(x + phi_v(x))
//
// phi_v is the deformation obtained by exponentiating v. The diffeomorphic
// schemes therefore move image content along the streamlines of v rather
// than along straight lines.

#include <chrono>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "diffeo.hpp"
#include "estimators.hpp"
#include "grid.hpp"

namespace dpiv {

enum class Scheme { FDI, CDI, CDDI, FDDI };

inline constexpr Scheme all_schemes[] = {Scheme::FDI, Scheme::CDI, Scheme::CDDI, Scheme::FDDI};

inline std::string to_string(Scheme s) {
    switch (s) {
    case Scheme::FDI: return "fdi";
    case Scheme::CDI: return "cdi";
    case Scheme::CDDI: return "cddi";
    case Scheme::FDDI: return "fddi";
    }
    return "?";
}

inline std::optional<Scheme> parse_scheme(const std::string& name) {
    for (Scheme s : all_schemes)
        if (to_string(s) == name)
            return s;
    return std::nullopt;
}

struct RunConfig {
    Scheme scheme = Scheme::FDDI;
    EstimatorConfig estimator = cc_config();
    int max_iterations = 10;
    ExpConfig exp;
    Interpolation interpolation = Interpolation::quintic_bspline;
    /// Gaussian sigma (px) applied to every corrector; 0 disables.
    double corrector_sigma = 0.0;
    /// Gaussian sigma (px) applied to the velocity after every update; 0
    /// disables. Damps the high-wavenumber error that iterative deformation
    /// otherwise amplifies.
    double predictor_sigma = 4.0;
    /// Stop once the largest corrector falls below this (px).
    double stop_threshold = 0.005;
    bool record_history = false;
    /// Log |exp(v + dv) - exp(v) - dv| per FDDI iteration (two extra
    /// exponentials per iteration).
    bool track_additivity = false;
};

/// Per-estimator defaults: predictor sigma 4 px for CC, 3 px for OF.
inline RunConfig default_run_config(Scheme scheme, EstimatorKind kind) {
    RunConfig cfg;
    cfg.scheme = scheme;
    cfg.estimator = kind == EstimatorKind::CC ? cc_config() : of_config();
    cfg.predictor_sigma = kind == EstimatorKind::CC ? 4.0 : 3.0;
    return cfg;
}

inline void validate(const RunConfig& cfg) {
    if (cfg.max_iterations < 1)
        throw Error("RunConfig: max_iterations must be >= 1");
    if (cfg.corrector_sigma < 0.0 || cfg.predictor_sigma < 0.0)
        throw Error("RunConfig: smoothing sigmas must be non-negative");
    if (cfg.stop_threshold < 0.0)
        throw Error("RunConfig: stop_threshold must be non-negative");
    validate(cfg.estimator);
    validate(cfg.exp);
}

struct IterationLog {
    int iteration = 0;
    double max_correction = 0.0;
    double seconds = 0.0;
    double additivity = -1.0; ///< negative when not tracked
};

struct RunResult {
    VectorField velocity;
    std::vector<VectorField> history; ///< v after each iteration, when recorded
    std::vector<IterationLog> log;
    int iterations_run = 0;
};

/// Displacements at which the first and second recordings are sampled.
inline std::pair<DeformationField, DeformationField> sampling_maps(Scheme scheme, const VectorField& v,
                                                                   const ExpConfig& exp = {}) {
    const DeformationField zero(v.width(), v.height());
    switch (scheme) {
    case Scheme::FDI:
        return {zero, as_deformation(v)};
    case Scheme::CDI:
        return {as_deformation(scale_field(v, -0.5)), as_deformation(scale_field(v, 0.5))};
    case Scheme::CDDI:
        return {exponentiate(scale_field(v, -0.5), exp), exponentiate(scale_field(v, 0.5), exp)};
    case Scheme::FDDI:
        return {zero, exponentiate(v, exp)};
    }
    throw Error("sampling_maps: unknown scheme");
}

inline std::pair<ScalarImage, ScalarImage> warp_pair(Scheme scheme, const ScalarImage& first,
                                                     const ScalarImage& second, const VectorField& v,
                                                     const ExpConfig& exp = {},
                                                     Interpolation interp = Interpolation::quintic_bspline) {
    require_same_shape(first, second, "warp_pair");
    require_same_shape(first, v, "warp_pair");
    const auto [m1, m2] = sampling_maps(scheme, v, exp);
    return {warp_image(first, m1, interp), warp_image(second, m2, interp)};
}

/// 1 where both maps sample inside the raster, 0 elsewhere.
inline ScalarImage in_domain_mask(const DeformationField& m1, const DeformationField& m2) {
    require_same_shape(m1, m2, "in_domain_mask");
    const double xmax = m1.width() - 1;
    const double ymax = m1.height() - 1;
    auto inside = [&](const DeformationField& m, int x, int y) {
        const double sx = x + m.u()(x, y);
        const double sy = y + m.v()(x, y);
        return sx >= 0.0 && sy >= 0.0 && sx <= xmax && sy <= ymax;
    };
    ScalarImage mask(m1.width(), m1.height());
    for (int y = 0; y < mask.height(); ++y)
        for (int x = 0; x < mask.width(); ++x)
            mask(x, y) = inside(m1, x, y) && inside(m2, x, y) ? 1.0 : 0.0;
    return mask;
}

/// |exp(v + dv) - exp(v) - dv|, maximum over the interior: how far an FDDI
/// update is from being additive in the deformation.
inline double corrector_additivity(const VectorField& v, const VectorField& dv, const ExpConfig& exp = {},
                                   int margin = 16) {
    return variation_residual(v, dv, exp, margin);
}

inline RunResult run(const ScalarImage& first, const ScalarImage& second, const RunConfig& cfg) {
    require_same_shape(first, second, "run");
    validate(cfg);

    RunResult result;
    result.velocity = VectorField(first.width(), first.height());
    for (int k = 0; k < cfg.max_iterations; ++k) {
        const auto start = std::chrono::steady_clock::now();
        const auto [m1, m2] = sampling_maps(cfg.scheme, result.velocity, cfg.exp);
        const ScalarImage wa = warp_image(first, m1, cfg.interpolation);
        const ScalarImage wb = warp_image(second, m2, cfg.interpolation);
        // Clamped samples carry no motion information.
        const ScalarImage trusted = in_domain_mask(m1, m2);
        VectorField correction = estimate(cfg.estimator, wa, wb, &trusted);
        if (cfg.corrector_sigma > 0.0)
            correction = gaussian_blur(correction, cfg.corrector_sigma);

        IterationLog entry;
        entry.iteration = k + 1;
        entry.max_correction = max_magnitude(correction);
        if (cfg.track_additivity && cfg.scheme == Scheme::FDDI)
            entry.additivity = corrector_additivity(result.velocity, correction, cfg.exp);

        result.velocity = add_fields(result.velocity, correction);
        if (cfg.predictor_sigma > 0.0)
            result.velocity = gaussian_blur(result.velocity, cfg.predictor_sigma);
        if (!all_finite(result.velocity))
            throw Error("run: velocity field became non-finite at iteration " + std::to_string(k + 1));
        entry.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        result.log.push_back(entry);
        if (cfg.record_history)
            result.history.push_back(result.velocity);
        result.iterations_run = k + 1;
        if (entry.max_correction < cfg.stop_threshold)
            break;
    }
    return result;
}

} // namespace dpiv
