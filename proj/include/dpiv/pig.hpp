#pragma once

// Synthetic particle image pairs. Gaussian particles are seeded over a
// margin-extended domain, rendered into the first frame, advected along the
// analytic streamlines for one frame interval and rendered again.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "flows.hpp"
#include "grid.hpp"

namespace dpiv {

struct PigConfig {
    int width = 256;
    int height = 256;
    double diameter = 2.5;        ///< e^-2 particle image diameter, px
    double density = 0.06;        ///< particles per pixel
    double peak_intensity = 255.0;
    std::uint64_t seed = 1;
    double margin = 12.0;         ///< seeding margin around the image, px
    int substeps = 64;            ///< RK4 substeps for particle advection and truth
};

inline void validate(const PigConfig& cfg) {
    if (cfg.width < 8 || cfg.height < 8)
        throw Error("PigConfig: width and height must be at least 8");
    if (!(cfg.diameter > 0.0))
        throw Error("PigConfig: diameter must be positive");
    if (!(cfg.density > 0.0 && cfg.density < 1.0))
        throw Error("PigConfig: density must lie in (0, 1)");
    if (!(cfg.peak_intensity > 0.0 && cfg.peak_intensity <= 255.0))
        throw Error("PigConfig: peak intensity must lie in (0, 255]");
    if (cfg.margin < 0.0)
        throw Error("PigConfig: margin must be non-negative");
}

struct ParticlePair {
    ScalarImage first;
    ScalarImage second;
    DeformationField truth;
};

/// Unquantised rendering of equal-intensity Gaussian particles,
/// peak * exp(-8 r^2 / d^2), truncated at radius 3d.
inline ScalarImage render_particles(const std::vector<Vec2>& centers, int width, int height, double diameter,
                                    double peak) {
    ScalarImage img(width, height);
    const double cutoff = 3.0 * diameter;
    const double k = -8.0 / (diameter * diameter);
    for (const Vec2& c : centers) {
        const int x0 = std::max(0, static_cast<int>(std::ceil(c.x - cutoff)));
        const int x1 = std::min(width - 1, static_cast<int>(std::floor(c.x + cutoff)));
        const int y0 = std::max(0, static_cast<int>(std::ceil(c.y - cutoff)));
        const int y1 = std::min(height - 1, static_cast<int>(std::floor(c.y + cutoff)));
        for (int y = y0; y <= y1; ++y)
            for (int x = x0; x <= x1; ++x) {
                const double r2 = (x - c.x) * (x - c.x) + (y - c.y) * (y - c.y);
                if (r2 <= cutoff * cutoff)
                    img(x, y) += peak * std::exp(k * r2);
            }
    }
    return img;
}

/// Round to the nearest integer and clamp to [0, 255].
inline ScalarImage quantize8(ScalarImage img) {
    for (auto& p : img.data())
        p = std::clamp(std::round(p), 0.0, 255.0);
    return img;
}

inline std::vector<Vec2> seed_particles(const PigConfig& cfg) {
    const double ext_w = cfg.width + 2.0 * cfg.margin;
    const double ext_h = cfg.height + 2.0 * cfg.margin;
    const auto count = static_cast<std::size_t>(std::ceil(cfg.density * ext_w * ext_h));
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> ux(-cfg.margin, cfg.width + cfg.margin);
    std::uniform_real_distribution<double> uy(-cfg.margin, cfg.height + cfg.margin);
    std::vector<Vec2> centers(count);
    for (auto& c : centers) {
        c.x = ux(rng);
        c.y = uy(rng);
    }
    return centers;
}

inline ParticlePair generate_pair(const FlowSpec& spec, const PigConfig& cfg) {
    validate(spec);
    validate(cfg);
    const std::vector<Vec2> start = seed_particles(cfg);
    std::vector<Vec2> end(start.size());
    for (std::size_t i = 0; i < start.size(); ++i)
        end[i] = advect_rk4(spec, start[i].x, start[i].y, 1.0, cfg.substeps);

    return {quantize8(render_particles(start, cfg.width, cfg.height, cfg.diameter, cfg.peak_intensity)),
            quantize8(render_particles(end, cfg.width, cfg.height, cfg.diameter, cfg.peak_intensity)),
            truth_deformation(spec, cfg.width, cfg.height, cfg.substeps)};
}

/// Additive zero-mean Gaussian noise followed by 8-bit re-quantisation.
inline ScalarImage add_noise(const ScalarImage& img, double sigma, std::uint64_t seed) {
    if (sigma < 0.0)
        throw Error("add_noise: sigma must be non-negative");
    if (sigma == 0.0)
        return img;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, sigma);
    ScalarImage out = img;
    for (auto& p : out.data())
        p += noise(rng);
    return quantize8(std::move(out));
}

} // namespace dpiv
