// dpiv: generate synthetic cases, run interrogation schemes, evaluate,
// sweep convergence and diff results.
//
// Exit codes: 0 success, 1 runtime error, 2 usage error.

#include <CLI11.hpp>

#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <dpiv/commands.hpp>

namespace {

const std::map<std::string, dpiv::Scheme> scheme_names{
    {"fdi", dpiv::Scheme::FDI}, {"cdi", dpiv::Scheme::CDI}, {"cddi", dpiv::Scheme::CDDI}, {"fddi", dpiv::Scheme::FDDI}};
const std::map<std::string, dpiv::EstimatorKind> estimator_names{{"cc", dpiv::EstimatorKind::CC},
                                                                 {"of", dpiv::EstimatorKind::OF}};

std::vector<std::string> scheme_keys() { return {"fdi", "cdi", "cddi", "fddi"}; }
std::vector<std::string> estimator_keys() { return {"cc", "of"}; }

struct GenerateFlags {
    std::string flow = "lamb-oseen";
    double gamma = 2000.0, rc = 40.0;
    std::optional<double> cx, cy;
    double a = 6.0, b = 128.0, c = 5.0;
    double u = 0.0, v = 0.0;
    double omega = 0.1;
    int size = 256;
    dpiv::GenerateOptions opts;
};

dpiv::FlowSpec make_flow(const GenerateFlags& f) {
    const int n = f.size;
    if (f.flow == "lamb-oseen") {
        auto lo = dpiv::lamb_oseen_centered(f.gamma, f.rc, n, n);
        lo.cx = f.cx.value_or(lo.cx);
        lo.cy = f.cy.value_or(lo.cy);
        return lo;
    }
    if (f.flow == "sine")
        return dpiv::SineFlow{f.a, f.b, f.c};
    if (f.flow == "uniform")
        return dpiv::UniformFlow{f.u, f.v};
    auto rot = dpiv::rotation_centered(f.omega, n, n);
    rot.cx = f.cx.value_or(rot.cx);
    rot.cy = f.cy.value_or(rot.cy);
    return rot;
}

struct RunFlags {
    dpiv::RunOptions opts;
    std::string scheme = "fddi";
    std::string estimator = "cc";
    int iterations = 10;
    std::optional<int> window, step, levels, inner, warps;
    std::optional<double> alpha, smooth, predictor, exp_threshold;
    bool no_validation = false;
    std::string interp = "quintic";
};

dpiv::RunConfig make_run_config(const RunFlags& f) {
    dpiv::RunConfig cfg = dpiv::default_run_config(scheme_names.at(f.scheme), estimator_names.at(f.estimator));
    cfg.max_iterations = f.iterations;
    auto& e = cfg.estimator;
    e.window = f.window.value_or(e.window);
    e.step = f.step.value_or(e.step);
    e.pyramid_levels = f.levels.value_or(e.pyramid_levels);
    e.inner_iterations = f.inner.value_or(e.inner_iterations);
    e.warps = f.warps.value_or(e.warps);
    e.alpha = f.alpha.value_or(e.alpha);
    if (f.no_validation)
        e.validation = dpiv::Validation::Off;
    cfg.corrector_sigma = f.smooth.value_or(cfg.corrector_sigma);
    cfg.predictor_sigma = f.predictor.value_or(cfg.predictor_sigma);
    cfg.exp.step_threshold = f.exp_threshold.value_or(cfg.exp.step_threshold);
    cfg.interpolation = f.interp == "catmull-rom" ? dpiv::Interpolation::catmull_rom
                        : f.interp == "bspline"   ? dpiv::Interpolation::cubic_bspline
                                                  : dpiv::Interpolation::quintic_bspline;
    return cfg;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Iterative PIV with straight-line and diffeomorphic image deformation"};
    app.require_subcommand(1);
    // --config belongs to the top level so CLI11 reads it; fallthrough lets it
    // follow the subcommand name. Keys live under a [generate] section.
    app.fallthrough();
    app.set_config("--config", "", "Read generate defaults from a case.cfg; flags override it");

    // generate
    GenerateFlags gen;
    auto* g = app.add_subcommand("generate", "Synthesise a particle image pair and its truth field");
    g->add_option("--flow", gen.flow, "Flow type")
        ->check(CLI::IsMember({"lamb-oseen", "sine", "uniform", "rotation"}))
        ->capture_default_str();
    g->add_option("--gamma", gen.gamma, "Lamb-Oseen circulation (px^2/frame)")->capture_default_str();
    g->add_option("--rc", gen.rc, "Lamb-Oseen core radius (px)")->capture_default_str();
    g->add_option("--cx", gen.cx, "Vortex or rotation centre x (default: size/2)");
    g->add_option("--cy", gen.cy, "Vortex or rotation centre y (default: size/2)");
    g->add_option("--a", gen.a, "Sine streamline amplitude (px)")->capture_default_str();
    g->add_option("--b", gen.b, "Sine streamline period (px)")->capture_default_str();
    g->add_option("--c", gen.c, "Sine flow speed (px/frame)")->capture_default_str();
    g->add_option("--u", gen.u, "Uniform flow x component")->capture_default_str();
    g->add_option("--v", gen.v, "Uniform flow y component")->capture_default_str();
    g->add_option("--omega", gen.omega, "Rotation rate (rad/frame)")->capture_default_str();
    g->add_option("--size", gen.size, "Image side length (px)")->check(CLI::Range(8, 8192))->capture_default_str();
    g->add_option("--diameter", gen.opts.pig.diameter, "Particle image diameter (px)")->capture_default_str();
    g->add_option("--density", gen.opts.pig.density, "Particles per pixel")->capture_default_str();
    g->add_option("--peak", gen.opts.pig.peak_intensity, "Particle peak intensity")->capture_default_str();
    g->add_option("--seed", gen.opts.pig.seed, "Random seed")->capture_default_str();
    g->add_option("--margin", gen.opts.pig.margin, "Seeding margin (px)")->capture_default_str();
    g->add_option("--substeps", gen.opts.pig.substeps, "RK4 substeps per frame")->capture_default_str();
    g->add_option("--noise", gen.opts.noise, "Gaussian noise sigma (grey levels)")->capture_default_str();
    g->add_option("--out", gen.opts.out_dir, "Output directory")->capture_default_str();

    // run
    RunFlags rf;
    auto* r = app.add_subcommand("run", "Estimate the velocity field of an image pair");
    r->add_option("first", rf.opts.first, "First frame (PGM)")->required();
    r->add_option("second", rf.opts.second, "Second frame (PGM)")->required();
    r->add_option("--scheme", rf.scheme, "Deformation scheme")
        ->check(CLI::IsMember(scheme_keys()))
        ->capture_default_str();
    r->add_option("--estimator", rf.estimator, "Corrector estimator")
        ->check(CLI::IsMember(estimator_keys()))
        ->capture_default_str();
    r->add_option("--iterations", rf.iterations, "Maximum iterations")->check(CLI::PositiveNumber)->capture_default_str();
    r->add_option("--window", rf.window, "CC window side (px)");
    r->add_option("--step", rf.step, "CC lattice step (px)");
    r->add_option("--alpha", rf.alpha, "OF smoothness weight");
    r->add_option("--levels", rf.levels, "OF pyramid levels");
    r->add_option("--inner", rf.inner, "OF SOR sweeps per level");
    r->add_option("--warps", rf.warps, "OF re-linearisations per level");
    r->add_flag("--no-validation", rf.no_validation, "Disable median validation of CC vectors");
    r->add_option("--smooth", rf.smooth, "Corrector smoothing sigma (px)");
    r->add_option("--predictor", rf.predictor, "Velocity smoothing sigma after each update (px)");
    r->add_option("--exp-threshold", rf.exp_threshold, "Largest step before squaring (px)");
    r->add_option("--interp", rf.interp, "Interpolant for the driver warps")
        ->check(CLI::IsMember({"quintic", "bspline", "catmull-rom"}))
        ->capture_default_str();
    r->add_option("--out", rf.opts.out_dir, "Output directory")->capture_default_str();

    // eval
    dpiv::EvalOptions ev;
    auto* e = app.add_subcommand("eval", "Compare an estimated field against the truth");
    e->add_option("estimate", ev.estimate, "Estimated field")->required();
    e->add_option("truth", ev.truth, "Truth field")->required();
    e->add_option("--border", ev.border, "Excluded border width (px)")->check(CLI::NonNegativeNumber)->capture_default_str();
    e->add_option("--out", ev.out_dir, "Directory for error.map")->capture_default_str();

    // sweep
    dpiv::SweepOptions sw;
    std::vector<std::string> sweep_schemes{"fdi", "cdi", "cddi", "fddi"}, sweep_estimators{"cc", "of"};
    std::string sweep_out;
    auto* s = app.add_subcommand("sweep", "RMSE per iteration for every scheme and estimator");
    s->add_option("case", sw.case_dir, "Directory written by generate")->required();
    s->add_option("--schemes", sweep_schemes, "Comma-separated schemes")
        ->check(CLI::IsMember(scheme_keys()))
        ->delimiter(',');
    s->add_option("--estimators", sweep_estimators, "Comma-separated estimators")
        ->check(CLI::IsMember(estimator_keys()))
        ->delimiter(',');
    s->add_option("--iterations", sw.iterations, "Iterations per run")->check(CLI::Range(1, 100))->capture_default_str();
    s->add_option("--border", sw.border, "Excluded border width (px)")->check(CLI::NonNegativeNumber)->capture_default_str();
    s->add_option("--out", sweep_out, "CSV file (default: stdout)");

    // diff
    dpiv::DiffOptions df;
    auto* d = app.add_subcommand("diff", "Difference of two fields and its mean amplitude");
    d->add_option("first", df.first, "Minuend field")->required();
    d->add_option("second", df.second, "Subtrahend field")->required();
    d->add_option("--border", df.border, "Excluded border width (px)")->check(CLI::NonNegativeNumber)->capture_default_str();
    d->add_option("--out", df.out_dir, "Directory for diff.field")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& err) {
        return app.exit(err);
    } catch (const CLI::ParseError& err) {
        std::cerr << "error: " << err.what() << "\n\n";
        const CLI::App* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
        std::cerr << sub->help();
        return 2;
    }

    try {
        if (*g) {
            gen.opts.pig.width = gen.opts.pig.height = gen.size;
            gen.opts.flow = make_flow(gen);
            dpiv::cmd_generate(gen.opts, std::cout);
        } else if (*r) {
            rf.opts.config = make_run_config(rf);
            dpiv::cmd_run(rf.opts, std::cout);
        } else if (*e) {
            dpiv::cmd_eval(ev, std::cout);
        } else if (*s) {
            sw.schemes.clear();
            for (const auto& name : sweep_schemes)
                sw.schemes.push_back(scheme_names.at(name));
            sw.estimators.clear();
            for (const auto& name : sweep_estimators)
                sw.estimators.push_back(estimator_names.at(name));
            if (sweep_out.empty()) {
                dpiv::cmd_sweep(sw, std::cout);
            } else {
                auto out = dpiv::detail::open_out(sweep_out);
                dpiv::cmd_sweep(sw, out);
                dpiv::detail::finish(out, sweep_out);
            }
        } else if (*d) {
            dpiv::cmd_diff(df, std::cout);
        }
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << '\n';
        return 1;
    }
    return 0;
}
