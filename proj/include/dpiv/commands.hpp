#pragma once

// The five command-line operations as library calls. Each reads and writes
// files, prints its report to `out` and throws dpiv::Error on failure; flag
// parsing and exit codes live in the executable.

#include <cstdio>
#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "driver.hpp"
#include "eval.hpp"
#include "flows.hpp"
#include "io.hpp"
#include "pig.hpp"

namespace dpiv {

namespace detail {

inline std::string join(const std::string& dir, const char* name) {
    return (std::filesystem::path(dir) / name).string();
}

inline void ensure_dir(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir))
        throw Error("cannot create output directory '" + dir + "'");
}

inline std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", x);
    return buf;
}

} // namespace detail

// --------------------------------------------------------------------------

struct GenerateOptions {
    FlowSpec flow = LambOseen{};
    PigConfig pig;
    double noise = 0.0; ///< Gaussian noise sigma added to both frames, intensity levels
    std::string out_dir = ".";
};

/// Resolved parameters as `key = value` lines under a [generate] section.
/// Keys match the generate flags, so the file can be fed back through --config.
inline std::string case_config_text(const GenerateOptions& o) {
    using detail::fmt;
    std::string s = "[generate]\nflow = " + flow_name(o.flow) + "\n";
    std::visit(
        [&](const auto& f) {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, LambOseen>)
                s += "gamma = " + fmt(f.gamma) + "\nrc = " + fmt(f.rc) + "\ncx = " + fmt(f.cx) + "\ncy = " + fmt(f.cy) +
                     "\n";
            else if constexpr (std::is_same_v<T, SineFlow>)
                s += "a = " + fmt(f.a) + "\nb = " + fmt(f.b) + "\nc = " + fmt(f.c) + "\n";
            else if constexpr (std::is_same_v<T, UniformFlow>)
                s += "u = " + fmt(f.u) + "\nv = " + fmt(f.v) + "\n";
            else
                s += "omega = " + fmt(f.omega) + "\ncx = " + fmt(f.cx) + "\ncy = " + fmt(f.cy) + "\n";
        },
        o.flow);
    s += "size = " + std::to_string(o.pig.width) + "\n";
    s += "diameter = " + fmt(o.pig.diameter) + "\n";
    s += "density = " + fmt(o.pig.density) + "\n";
    s += "peak = " + fmt(o.pig.peak_intensity) + "\n";
    s += "seed = " + std::to_string(o.pig.seed) + "\n";
    s += "margin = " + fmt(o.pig.margin) + "\n";
    s += "substeps = " + std::to_string(o.pig.substeps) + "\n";
    s += "noise = " + fmt(o.noise) + "\n";
    return s;
}

/// Writes a.pgm, b.pgm, truth.field (velocity raster) and case.cfg.
inline void cmd_generate(const GenerateOptions& o, std::ostream& out) {
    if (o.noise < 0.0)
        throw Error("generate: noise must be non-negative");
    const ParticlePair pair = generate_pair(o.flow, o.pig);
    detail::ensure_dir(o.out_dir);
    // Distinct noise streams per frame, both derived from the case seed.
    save_pgm(detail::join(o.out_dir, "a.pgm"), add_noise(pair.first, o.noise, 2 * o.pig.seed));
    save_pgm(detail::join(o.out_dir, "b.pgm"), add_noise(pair.second, o.noise, 2 * o.pig.seed + 1));
    save_field(detail::join(o.out_dir, "truth.field"),
               to_field_data(rasterize(o.flow, o.pig.width, o.pig.height)));
    const std::string cfg_path = detail::join(o.out_dir, "case.cfg");
    auto cfg = detail::open_out(cfg_path);
    cfg << case_config_text(o);
    detail::finish(cfg, cfg_path);
    out << "wrote " << o.out_dir << ": a.pgm b.pgm truth.field case.cfg\n";
}

// --------------------------------------------------------------------------

struct RunOptions {
    std::string first;
    std::string second;
    RunConfig config;
    std::string out_dir = ".";
};

/// Writes result.field and iterations.csv (iteration,max_correction,seconds).
inline RunResult cmd_run(const RunOptions& o, std::ostream& out) {
    const ScalarImage a = load_pgm(o.first);
    const ScalarImage b = load_pgm(o.second);
    if (!same_shape(a, b))
        throw Error("run: image sizes differ: " + o.first + " is " + std::to_string(a.width()) + "x" +
                    std::to_string(a.height()) + ", " + o.second + " is " + std::to_string(b.width()) + "x" +
                    std::to_string(b.height()));
    RunResult r = run(a, b, o.config);
    detail::ensure_dir(o.out_dir);
    save_field(detail::join(o.out_dir, "result.field"), to_field_data(r.velocity));
    const std::string log_path = detail::join(o.out_dir, "iterations.csv");
    auto log = detail::open_out(log_path);
    log << "iteration,max_correction,seconds\n";
    char buf[96];
    for (const auto& e : r.log) {
        std::snprintf(buf, sizeof buf, "%d,%.6e,%.4f\n", e.iteration, e.max_correction, e.seconds);
        log << buf;
    }
    detail::finish(log, log_path);
    out << to_string(o.config.scheme) << '/' << to_string(o.config.estimator.kind) << ": " << r.iterations_run
        << " iterations, final max correction " << detail::fmt(r.log.back().max_correction) << " px\n";
    return r;
}

// --------------------------------------------------------------------------

struct EvalOptions {
    std::string estimate;
    std::string truth;
    int border = 16;
    std::string out_dir = ".";
};

/// Prints `rmse,mean,max,n` and one value row; writes error.map.
inline EvalReport cmd_eval(const EvalOptions& o, std::ostream& out) {
    const VectorField est = to_vector_field(load_field(o.estimate));
    const VectorField truth = to_vector_field(load_field(o.truth));
    const EvalReport r = rmse(est, truth, o.border);
    detail::ensure_dir(o.out_dir);
    save_field(detail::join(o.out_dir, "error.map"), to_field_data(error_map(est, truth, o.border)));
    char buf[128];
    std::snprintf(buf, sizeof buf, "%.6f,%.6f,%.6f,%ld\n", r.rmse, r.mean_error, r.max_error, r.n_evaluated);
    out << "rmse,mean,max,n\n" << buf;
    return r;
}

// --------------------------------------------------------------------------

struct SweepOptions {
    std::string case_dir;
    std::vector<Scheme> schemes{std::begin(all_schemes), std::end(all_schemes)};
    std::vector<EstimatorKind> estimators{EstimatorKind::CC, EstimatorKind::OF};
    int iterations = 10;
    int border = 16;
};

/// RMSE after every iteration for each scheme x estimator of a generated
/// case. Early stopping is disabled so every curve has `iterations` rows.
inline void cmd_sweep(const SweepOptions& o, std::ostream& out) {
    if (o.iterations < 1)
        throw Error("sweep: iterations must be >= 1");
    const ScalarImage a = load_pgm(detail::join(o.case_dir, "a.pgm"));
    const ScalarImage b = load_pgm(detail::join(o.case_dir, "b.pgm"));
    const VectorField truth = to_vector_field(load_field(detail::join(o.case_dir, "truth.field")));
    out << "scheme,estimator,iteration,rmse\n";
    char buf[96];
    for (Scheme s : o.schemes)
        for (EstimatorKind k : o.estimators) {
            RunConfig cfg = default_run_config(s, k);
            cfg.max_iterations = o.iterations;
            cfg.stop_threshold = 0.0;
            cfg.record_history = true;
            const RunResult r = run(a, b, cfg);
            for (std::size_t i = 0; i < r.history.size(); ++i) {
                std::snprintf(buf, sizeof buf, "%s,%s,%zu,%.6f\n", to_string(s).c_str(), to_string(k).c_str(), i + 1,
                              rmse(r.history[i], truth, o.border).rmse);
                out << buf;
            }
        }
}

// --------------------------------------------------------------------------

struct DiffOptions {
    std::string first;
    std::string second;
    int border = 16;
    std::string out_dir = ".";
};

/// Writes diff.field (first - second) and prints the mean amplitude.
inline double cmd_diff(const DiffOptions& o, std::ostream& out) {
    const VectorField a = to_vector_field(load_field(o.first));
    const VectorField b = to_vector_field(load_field(o.second));
    auto [diff, amplitude] = difference_field(a, b, o.border);
    detail::ensure_dir(o.out_dir);
    save_field(detail::join(o.out_dir, "diff.field"), to_field_data(diff));
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f\n", amplitude);
    out << "amplitude," << buf;
    return amplitude;
}

} // namespace dpiv
