// Acceptance criteria 1-8. Prints one PASS/FAIL line per criterion followed
// by the measured values; exits non-zero if any criterion fails.

#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <dpiv/diffeo.hpp>
#include <dpiv/driver.hpp>
#include <dpiv/eval.hpp>
#include <dpiv/flows.hpp>
#include <dpiv/io.hpp>
#include <dpiv/pig.hpp>

using namespace dpiv;
namespace fs = std::filesystem;

namespace {

constexpr int N = 256;
constexpr int kBorder = 16;

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, x);
    return buf;
}

struct Verdict {
    bool pass = true;
    std::string detail;

    void check(bool ok, const std::string& what) {
        if (!ok)
            pass = false;
        detail += (detail.empty() ? "" : "; ") + what + (ok ? "" : " [x]");
    }
};

int failures = 0;

void report(int id, const char* title, const Verdict& v) {
    std::printf("%s criterion %d: %s\n    %s\n", v.pass ? "PASS" : "FAIL", id, title, v.detail.c_str());
    std::fflush(stdout);
    failures += !v.pass;
}

// ------------------------------------------------------------------ runs

struct Curve {
    std::vector<double> rmse; // after each iteration
    double final() const { return rmse.back(); }
};

// Fixed ten iterations with no early stop, RMSE against the velocity raster
// after every iteration.
Curve run_curve(const ParticlePair& p, const VectorField& truth, Scheme s, EstimatorKind k) {
    RunConfig cfg = default_run_config(s, k);
    cfg.max_iterations = 10;
    cfg.stop_threshold = 0.0;
    cfg.record_history = true;
    const RunResult r = run(p.first, p.second, cfg);
    Curve c;
    for (const auto& v : r.history)
        c.rmse.push_back(rmse(v, truth, kBorder).rmse);
    return c;
}

struct Case {
    std::string name;
    FlowSpec flow;
    ParticlePair pair;
    VectorField truth;
    std::map<std::pair<Scheme, EstimatorKind>, Curve> curves;

    Case(std::string n, FlowSpec f)
        : name(std::move(n)), flow(f), pair(generate_pair(f, PigConfig{})), truth(rasterize(f, N, N)) {}

    const Curve& curve(Scheme s, EstimatorKind k) {
        auto it = curves.find({s, k});
        if (it == curves.end())
            it = curves.emplace(std::pair{s, k}, run_curve(pair, truth, s, k)).first;
        return it->second;
    }
};

// ------------------------------------------------------------------ 1

void criterion1() {
    Verdict v;
    const std::pair<std::string, FlowSpec> flows[] = {
        {"lamb-oseen 1000", lamb_oseen_centered(1000.0, 40.0, N, N)},
        {"lamb-oseen 2000", lamb_oseen_centered(2000.0, 40.0, N, N)},
        {"lamb-oseen 3000", lamb_oseen_centered(3000.0, 40.0, N, N)},
        {"sine 2.5", SineFlow{6.0, 128.0, 2.5}},
        {"sine 5", SineFlow{6.0, 128.0, 5.0}},
        {"sine 7.5", SineFlow{6.0, 128.0, 7.5}},
        {"rotation 0.1", rotation_centered(0.1, N, N)},
    };
    for (const auto& [name, f] : flows) {
        const VectorField vel = rasterize(f, N, N);
        const auto t0 = std::chrono::steady_clock::now();
        const DeformationField phi = exponentiate(vel);
        const double secs = seconds_since(t0);
        double worst = 0.0;
        for (int y = kBorder; y < N - kBorder; ++y)
            for (int x = kBorder; x < N - kBorder; ++x) {
                const Vec2 p = advect_rk4(f, x, y, 1.0, 64);
                worst = std::max(worst, (phi(x, y) - Vec2{p.x - x, p.y - y}).norm());
            }
        v.check(worst < 0.02, name + " max " + fmt("%.4f", worst) + " px");
        v.check(secs < 2.0, name + " " + fmt("%.3f", secs) + " s");
        if (const auto* rot = std::get_if<SolidRotation>(&f)) {
            const double c = std::cos(rot->omega), s = std::sin(rot->omega);
            double closed = 0.0;
            for (int y = kBorder; y < N - kBorder; ++y)
                for (int x = kBorder; x < N - kBorder; ++x) {
                    const double rx = x - rot->cx, ry = y - rot->cy;
                    const Vec2 d{(c - 1.0) * rx - s * ry, s * rx + (c - 1.0) * ry};
                    closed = std::max(closed, (phi(x, y) - d).norm());
                }
            v.check(closed < 0.01, "rotation vs closed form " + fmt("%.4f", closed) + " px");
        }
    }
    report(1, "exponentiation matches the streamline oracle (< 0.02 px, rotation < 0.01 px, < 2 s)", v);
}

// ------------------------------------------------------------------ 2-4

void criterion2(Case& lo, Case& sine) {
    Verdict v;
    using enum Scheme;
    for (Case* c : {&lo, &sine}) {
        for (EstimatorKind k : {EstimatorKind::CC, EstimatorKind::OF}) {
            const double fdi = c->curve(FDI, k).final(), cdi = c->curve(CDI, k).final(),
                         cddi = c->curve(CDDI, k).final(), fddi = c->curve(FDDI, k).final();
            const std::string tag = c->name + " " + to_string(k) + ": ";
            std::string values = tag + "fdi " + fmt("%.4f", fdi) + " cdi " + fmt("%.4f", cdi) + " cddi " +
                                 fmt("%.4f", cddi) + " fddi " + fmt("%.4f", fddi);
            v.detail += (v.detail.empty() ? "" : "\n    ") + values;
            if (k == EstimatorKind::CC) {
                v.check(fddi <= cddi, tag + "fddi <= cddi");
                v.check(cddi <= cdi, tag + "cddi <= cdi");
            }
            v.check(fddi <= cdi - 0.005, tag + "cdi - fddi = " + fmt("%.4f", cdi - fddi) + " >= 0.005");
            v.check(cdi <= fdi - 0.03, tag + "fdi - cdi = " + fmt("%.4f", fdi - cdi) + " >= 0.03");
        }
    }
    report(2, "scheme ordering FDDI <= CDDI <= CDI < FDI (CC), FDDI < CDI < FDI (OF), separations 0.005 / 0.03 px",
           v);
}

void criterion3(Case& lo, std::vector<Case>& sines) {
    Verdict v;
    for (EstimatorKind k : {EstimatorKind::CC, EstimatorKind::OF}) {
        const double e = lo.curve(Scheme::FDI, k).final();
        v.check(e >= 0.10 && e <= 0.25, lo.name + " fdi " + to_string(k) + " " + fmt("%.4f", e) + " in [0.10, 0.25]");
    }
    for (EstimatorKind k : {EstimatorKind::CC, EstimatorKind::OF}) {
        std::vector<double> e;
        std::string values;
        for (Case& c : sines) {
            e.push_back(c.curve(Scheme::FDI, k).final());
            values += (values.empty() ? "" : " < ") + fmt("%.4f", e.back());
        }
        v.check(e[0] < e[1] && e[1] < e[2], "sine c=2.5/5/7.5 fdi " + to_string(k) + " " + values);
    }
    report(3, "curvature bias: FDI vortex RMSE in [0.10, 0.25] px, sine FDI RMSE rising with speed", v);
}

void criterion4(Case& sine) {
    Verdict v;
    for (EstimatorKind k : {EstimatorKind::CC, EstimatorKind::OF})
        for (Scheme s : {Scheme::CDI, Scheme::CDDI}) {
            const Curve& c = sine.curve(s, k);
            double worst = 0.0;
            for (std::size_t i = 2; i < c.rmse.size(); ++i)
                worst = std::max(worst, std::abs(c.rmse[i] - c.final()));
            v.check(worst < 0.01, to_string(s) + " " + to_string(k) + " max |rmse(k>=3) - rmse(10)| " +
                                      fmt("%.4f", worst));
        }
    const Curve& f = sine.curve(Scheme::FDDI, EstimatorKind::OF);
    double worst = 0.0;
    for (std::size_t i = 6; i < f.rmse.size(); ++i)
        worst = std::max(worst, std::abs(f.rmse[i] - f.final()));
    v.check(worst < 0.01, "fddi of max |rmse(k>=7) - rmse(10)| " + fmt("%.4f", worst));
    report(4, "convergence on sine c=5 (CDI/CDDI from iteration 3, FDDI-OF by iteration 7, 0.01 px)", v);
}

// ------------------------------------------------------------------ 5

VectorField scaled_to(const VectorField& f, double m) { return scale_field(f, m / max_magnitude(f)); }

VectorField smooth_noise(unsigned seed, double sigma, double m) {
    std::mt19937 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    VectorField f(N, N);
    for (auto& p : f.u().data())
        p = g(rng);
    for (auto& p : f.v().data())
        p = g(rng);
    return scaled_to(gaussian_blur(f, sigma), m);
}

void criterion5() {
    Verdict v;
    const std::pair<std::string, VectorField> vs[] = {
        {"zero", VectorField(N, N)},
        {"vortex", scaled_to(rasterize(lamb_oseen_centered(2000.0, 40.0, N, N), N, N), 5.0)},
        {"sine", rasterize(SineFlow{6.0, 128.0, 5.0}, N, N)},
        {"rotation", scaled_to(rasterize(rotation_centered(0.1, N, N), N, N), 5.0)},
        {"noise", smooth_noise(1, 12.0, 5.0)},
    };
    double worst_ratio = 0.0;
    std::string worst_case;
    for (double m : {0.05, 0.1, 0.5}) {
        const std::pair<std::string, VectorField> dvs[] = {
            {"noise-dv", smooth_noise(2, 10.0, m)},
            {"sine-dv", scaled_to(rasterize(SineFlow{4.0, 64.0, 1.0}, N, N), m)},
            {"vortex-dv", scaled_to(rasterize(lamb_oseen_centered(500.0, 20.0, N, N), N, N), m)},
        };
        for (const auto& [vn, vf] : vs)
            for (const auto& [dn, dv] : dvs) {
                const double r = variation_residual(vf, dv);
                if (r / m > worst_ratio) {
                    worst_ratio = r / m;
                    worst_case = vn + "/" + dn + " |dv|=" + fmt("%.2f", m);
                }
            }
    }
    v.check(worst_ratio <= 0.25, "worst residual / max|dv| = " + fmt("%.4f", worst_ratio) + " (" + worst_case + ")");
    const double constant = variation_residual(VectorField(N, N, {2.0, -3.0}), VectorField(N, N, {0.4, 0.1}));
    v.check(constant == 0.0, "constant v, dv residual " + fmt("%.3g", constant));
    report(5, "variation residual <= 0.25 max|dv| on smooth fields, exactly 0 for constants", v);
}

// ------------------------------------------------------------------ 6

void criterion6() {
    Verdict v;
    for (double speed : {0.5, 3.5, 7.0}) {
        const double a = std::numbers::pi / 6.0;
        const FlowSpec f = UniformFlow{speed * std::cos(a), speed * std::sin(a)};
        const ParticlePair p = generate_pair(f, PigConfig{});
        const VectorField truth = rasterize(f, N, N);
        for (EstimatorKind k : {EstimatorKind::CC, EstimatorKind::OF}) {
            std::vector<VectorField> out;
            double worst_truth = 0.0, worst_pair = 0.0;
            for (Scheme s : all_schemes) {
                out.push_back(run(p.first, p.second, default_run_config(s, k)).velocity);
                worst_truth = std::max(worst_truth, rmse(out.back(), truth, kBorder).rmse);
            }
            for (std::size_t i = 0; i < out.size(); ++i)
                for (std::size_t j = i + 1; j < out.size(); ++j)
                    worst_pair = std::max(worst_pair, rmse(out[i], out[j], kBorder).rmse);
            const std::string tag = "|v|=" + fmt("%.1f", speed) + " " + to_string(k);
            v.check(worst_pair < 0.02, tag + " schemes " + fmt("%.4f", worst_pair));
            v.check(worst_truth < 0.05, tag + " truth " + fmt("%.4f", worst_truth));
        }
    }
    report(6, "uniform flows: schemes agree within 0.02 px RMS and match truth within 0.05 px", v);
}

// ------------------------------------------------------------------ 7

ScalarImage shifted(const ScalarImage& a, int sx, int sy) {
    ScalarImage b(a.width(), a.height());
    for (int y = 0; y < a.height(); ++y)
        for (int x = 0; x < a.width(); ++x)
            b(x, y) = a.at_clamped(x - sx, y - sy);
    return b;
}

void criterion7() {
    Verdict v;
    const ScalarImage a = generate_pair(UniformFlow{}, PigConfig{}).first;
    const ScalarImage b = shifted(a, 2, 1);
    for (EstimatorKind k : {EstimatorKind::CC, EstimatorKind::OF}) {
        const EstimatorConfig cfg = k == EstimatorKind::CC ? cc_config() : of_config();
        // "within 0.05 px" is counted per vector, at >= 95% of interior pixels
        const VectorField f = estimate(cfg, a, b);
        long within = 0, total = 0;
        double worst = 0.0;
        for (int y = kBorder; y < N - kBorder; ++y)
            for (int x = kBorder; x < N - kBorder; ++x) {
                const double e = (f(x, y) - Vec2{2.0, 1.0}).norm();
                within += e < 0.05;
                ++total;
                worst = std::max(worst, e);
            }
        const double frac = static_cast<double>(within) / static_cast<double>(total);
        v.check(frac >= 0.95, "shift (2,1) " + to_string(k) + " within 0.05 at " + fmt("%.3f", frac) +
                                  " of interior (max " + fmt("%.4f", worst) + ")");
        const double zero = max_magnitude(estimate(cfg, a, a));
        v.check(zero < 0.05, "zero motion " + to_string(k) + " max " + fmt("%.4f", zero));
    }
    PigConfig c;
    c.diameter = 3.0;
    c.seed = 3;
    const ScalarImage smooth = generate_pair(UniformFlow{}, c).first;
    const ScalarImage half = warp_image(smooth, DeformationField(N, N, {-0.5, 0.0}));
    double worst = 0.0;
    std::string each;
    for (double cy : {63.5, 127.5, 191.5})
        for (double cx : {63.5, 127.5, 191.5}) {
            const double e = (correlate_window(smooth, half, cx, cy, 32) - Vec2{0.5, 0.0}).norm();
            worst = std::max(worst, e);
            each += (each.empty() ? "" : " ") + fmt("%.4f", e);
        }
    v.check(worst < 0.03, "0.5 px sub-pixel shift worst of 9 windows " + fmt("%.4f", worst) + " (" + each + ")");
    report(7, "estimator oracles: integer shift 0.05, half-pixel 0.03, zero motion 0.05 px", v);
}

// ------------------------------------------------------------------ 8

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

int shell(const std::string& args, const fs::path& log) {
    const std::string cmd = std::string(DPIV_EXE) + " " + args + " >" + log.string() + " 2>&1";
    const int raw = std::system(cmd.c_str());
    return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

void criterion8() {
    Verdict v;
    const fs::path root = fs::temp_directory_path() / ("dpiv_acceptance_" + std::to_string(::getpid()));
    fs::remove_all(root);
    std::vector<std::string> outputs;
    for (int rep = 0; rep < 2; ++rep) {
        const fs::path d = root / std::to_string(rep);
        fs::create_directories(d);
        const auto t0 = std::chrono::steady_clock::now();
        const bool ok = shell("generate --flow lamb-oseen --gamma 2000 --rc 40 --out " + d.string(), d / "g.log") == 0 &&
                        shell("run " + (d / "a.pgm").string() + " " + (d / "b.pgm").string() + " --out " + d.string(),
                              d / "r.log") == 0 &&
                        shell("eval " + (d / "result.field").string() + " " + (d / "truth.field").string() +
                                  " --out " + d.string(),
                              d / "e.log") == 0;
        const double secs = seconds_since(t0);
        v.check(ok, "run " + std::to_string(rep + 1) + " exit status");
        v.check(secs < 60.0, "run " + std::to_string(rep + 1) + " " + fmt("%.1f", secs) + " s");
        std::string bytes;
        for (const char* f : {"a.pgm", "b.pgm", "truth.field", "result.field", "error.map", "e.log"})
            bytes += slurp(d / f);
        outputs.push_back(bytes);
    }
    v.check(outputs[0] == outputs[1], "repeat outputs bit-identical");
    fs::remove_all(root);
    report(8, "generate + run + eval under 60 s and bit-identical on repeat", v);
}

} // namespace

int main() {
    const auto t0 = std::chrono::steady_clock::now();
    criterion1();

    Case lo("lamb-oseen 2000", lamb_oseen_centered(2000.0, 40.0, N, N));
    std::vector<Case> sines;
    for (double c : {2.5, 5.0, 7.5})
        sines.emplace_back("sine c=" + fmt("%.1f", c), SineFlow{6.0, 128.0, c});
    criterion2(lo, sines[1]);
    criterion3(lo, sines);
    criterion4(sines[1]);
    criterion5();
    criterion6();
    criterion7();
    criterion8();

    std::printf("%d of 8 criteria failed (%.0f s)\n", failures, seconds_since(t0));
    return failures == 0 ? 0 : 1;
}
