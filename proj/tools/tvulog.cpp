// Command-line driver: demo pipelines, solver benchmarking, and single-stage
// commands operating on persisted artifacts.
#include <CLI11.hpp>
#include <Eigen/Core>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "tvulog/tvulog.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace tvulog;

namespace {

struct Config {
    int dim = 1;
    std::size_t n1 = 200, n2 = 1;
    double h1 = 1.0, h2 = 1.0;
    double kernel_std = 4.0;
    double gamma = 0.03;
    double tau = 1.0;
    double eps = 0.01;
    std::uint64_t seed = 1234;
    std::size_t samples = 10000;
    double alpha = 0.05;
    double t_min = 1.0, t_max = 4900.0;
    std::size_t scales = 30;
    std::string solver = "socp";
    double mu = 0.0;
    double tol = 0.0;
    std::size_t max_iters = 0;
    double r = 0.5;
    // Ground truth: either a list of Gaussian bumps or a sinusoid.
    // 1-D bump entry: [center, s, amplitude]; 2-D: [c1, c2, s, amplitude].
    std::vector<std::vector<double>> bumps;
    double sine_amplitude = 0.0;  // > 0 switches to sinusoidal ground truth
    double sine_periods = 3.0;
    // bench runs: list of {solver, mu, tol, max_iters}
    struct Run {
        std::string solver;
        double mu = 0.0, tol = 0.0;
        std::size_t max_iters = 0;
    };
    std::vector<Run> runs;
};

Config default_config_1d() {
    Config c;
    c.dim = 1;
    c.n1 = 200;
    c.n2 = 1;
    c.bumps = {{60.0, 30.0, 1.0}, {100.0, 12.0, 0.8}, {150.0, 50.0, 0.9}};
    return c;
}

Config default_config_2d() {
    Config c;
    c.dim = 2;
    c.n1 = 50;
    c.n2 = 50;
    c.samples = 2000;
    c.t_min = 1.0;
    c.t_max = 900.0;
    c.scales = 16;
    c.bumps = {{17.0, 17.0, 16.0, 1.0}, {33.0, 34.0, 36.0, 0.8}};
    return c;
}

Config default_config_bench() {
    Config c;
    c.dim = 1;
    c.n1 = 100;
    c.n2 = 1;
    c.samples = 500;
    c.kernel_std = 3.0;
    c.t_min = 1.0;
    c.t_max = 25.0;
    c.scales = 10;
    c.bumps = {{30.0, 16.0, 1.0}, {70.0, 9.0, 0.8}};
    c.runs = {{"socp", 0.0, 0.0, 0},
              {"dual-smoothing", 0.0, 0.0, 0},
              {"primal-smoothing", 0.0, 0.0, 0}};
    return c;
}

void apply_json(Config& c, const json& j) {
    if (j.contains("n")) c.n1 = j.at("n").get<std::size_t>();
    if (j.contains("n1")) c.n1 = j.at("n1").get<std::size_t>();
    if (j.contains("n2")) c.n2 = j.at("n2").get<std::size_t>();
    if (j.contains("h1")) c.h1 = j.at("h1").get<double>();
    if (j.contains("h2")) c.h2 = j.at("h2").get<double>();
    if (j.contains("kernel_std")) c.kernel_std = j.at("kernel_std").get<double>();
    if (j.contains("gamma")) c.gamma = j.at("gamma").get<double>();
    if (j.contains("tau")) c.tau = j.at("tau").get<double>();
    if (j.contains("eps")) c.eps = j.at("eps").get<double>();
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("samples")) c.samples = j.at("samples").get<std::size_t>();
    if (j.contains("alpha")) c.alpha = j.at("alpha").get<double>();
    if (j.contains("t_min")) c.t_min = j.at("t_min").get<double>();
    if (j.contains("t_max")) c.t_max = j.at("t_max").get<double>();
    if (j.contains("scales")) c.scales = j.at("scales").get<std::size_t>();
    if (j.contains("solver")) c.solver = j.at("solver").get<std::string>();
    if (j.contains("mu")) c.mu = j.at("mu").get<double>();
    if (j.contains("tol")) c.tol = j.at("tol").get<double>();
    if (j.contains("max_iters")) c.max_iters = j.at("max_iters").get<std::size_t>();
    if (j.contains("r")) c.r = j.at("r").get<double>();
    if (j.contains("bumps")) c.bumps = j.at("bumps").get<std::vector<std::vector<double>>>();
    if (j.contains("sine_amplitude")) c.sine_amplitude = j.at("sine_amplitude").get<double>();
    if (j.contains("sine_periods")) c.sine_periods = j.at("sine_periods").get<double>();
    if (j.contains("runs")) {
        c.runs.clear();
        for (const auto& rj : j.at("runs")) {
            Config::Run run;
            run.solver = rj.at("solver").get<std::string>();
            if (rj.contains("mu")) run.mu = rj.at("mu").get<double>();
            if (rj.contains("tol")) run.tol = rj.at("tol").get<double>();
            if (rj.contains("max_iters")) run.max_iters = rj.at("max_iters").get<std::size_t>();
            c.runs.push_back(run);
        }
    }
}

json config_to_json(const Config& c) {
    json j;
    j["dim"] = c.dim;
    j["n1"] = c.n1;
    j["n2"] = c.n2;
    j["h1"] = c.h1;
    j["h2"] = c.h2;
    j["kernel_std"] = c.kernel_std;
    j["gamma"] = c.gamma;
    j["tau"] = c.tau;
    j["eps"] = c.eps;
    j["seed"] = c.seed;
    j["samples"] = c.samples;
    j["alpha"] = c.alpha;
    j["t_min"] = c.t_min;
    j["t_max"] = c.t_max;
    j["scales"] = c.scales;
    j["solver"] = c.solver;
    j["mu"] = c.mu;
    j["tol"] = c.tol;
    j["max_iters"] = c.max_iters;
    j["r"] = c.r;
    j["bumps"] = c.bumps;
    if (c.sine_amplitude > 0.0) {
        j["sine_amplitude"] = c.sine_amplitude;
        j["sine_periods"] = c.sine_periods;
    }
    if (!c.runs.empty()) {
        json arr = json::array();
        for (const auto& run : c.runs) {
            json rj;
            rj["solver"] = run.solver;
            rj["mu"] = run.mu;
            rj["tol"] = run.tol;
            rj["max_iters"] = run.max_iters;
            arr.push_back(rj);
        }
        j["runs"] = arr;
    }
    return j;
}

// Flag values that override config entries when given on the command line.
struct Overrides {
    std::string config_path, solver, out = "out";
    double mu = -1.0, tol = -1.0, alpha = -1.0, r = -1.0;
    long long max_iters = -1, seed = -1;
};

Config load_config(const Config& defaults, const Overrides& ov) {
    Config c = defaults;
    if (!ov.config_path.empty()) {
        std::ifstream is(ov.config_path);
        if (!is) throw std::invalid_argument("cannot open config: " + ov.config_path);
        json j = json::parse(is);
        apply_json(c, j);
    }
    if (!ov.solver.empty()) c.solver = ov.solver;
    if (ov.mu >= 0.0) c.mu = ov.mu;
    if (ov.tol >= 0.0) c.tol = ov.tol;
    if (ov.alpha >= 0.0) c.alpha = ov.alpha;
    if (ov.r >= 0.0) c.r = ov.r;
    if (ov.max_iters >= 0) c.max_iters = std::size_t(ov.max_iters);
    if (ov.seed >= 0) c.seed = std::uint64_t(ov.seed);
    if (!(c.r > 0.0 && c.r < 1.0)) throw std::invalid_argument("r must lie in (0,1)");
    if (!(c.alpha > 0.0 && c.alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0,1)");
    if (c.solver != "socp" && c.solver != "dual-smoothing" && c.solver != "primal-smoothing" &&
        c.solver != "ulog")
        throw std::invalid_argument("unknown solver: " + c.solver);
    return c;
}

std::vector<double> ground_truth(const Config& c, const SpatialGrid& g) {
    std::vector<double> f(g.size(), 0.0);
    if (c.sine_amplitude > 0.0) {
        for (std::size_t i = 0; i < g.n1; ++i)
            for (std::size_t j = 0; j < g.n2; ++j) {
                double v = c.sine_amplitude *
                           std::sin(2.0 * M_PI * c.sine_periods * double(i) / double(g.n1));
                if (g.dim == 2)
                    v *= std::sin(2.0 * M_PI * c.sine_periods * double(j) / double(g.n2));
                f[i * g.n2 + j] = v;
            }
        return f;
    }
    for (const auto& b : c.bumps) {
        const bool two = g.dim == 2;
        if (b.size() != std::size_t(two ? 4 : 3))
            throw std::invalid_argument("bump entry needs [center..., s, amplitude]");
        const double m1 = b[0], m2 = two ? b[1] : 0.0;
        const double s = two ? b[2] : b[1], amp = two ? b[3] : b[2];
        const auto bump = gaussian_bump_image(g, m1, m2, s, amp);
        for (std::size_t p = 0; p < f.size(); ++p) f[p] += bump[p];
    }
    return f;
}

SolverOptions solver_options(const Config& c) {
    SolverOptions o;
    o.mu = c.mu;
    o.tol = c.tol;
    o.max_iters = c.max_iters;
    return o;
}

SolverResult run_named_solver(const std::string& name, const TvUlogProblem& prob,
                              const SolverOptions& opt) {
    if (name == "socp") return solve_tv_ulog_socp(prob, opt);
    if (name == "dual-smoothing") return solve_tv_ulog_dual_smoothing(prob, opt);
    if (name == "primal-smoothing") return solve_tv_ulog_primal_smoothing(prob, opt);
    if (name == "ulog") return solve_ulog_quadratic(prob.tube, opt);
    throw std::invalid_argument("unknown solver: " + name);
}

void write_text(const fs::path& path, const std::string& content) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
    os << content;
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

// Demo convergence files carry no wall-clock column so artifacts are
// bitwise reproducible; the solve/bench commands keep the seconds column.
std::string trace_csv(const std::vector<TracePoint>& trace, bool with_seconds) {
    std::string out = with_seconds ? "iter,seconds,objective\n" : "iter,objective\n";
    for (const auto& t : trace) {
        out += std::to_string(t.iter);
        if (with_seconds) out += "," + detail::format_double(t.seconds);
        out += "," + detail::format_double(t.objective) + "\n";
    }
    return out;
}

json regions_to_json(const std::vector<BlobRegion>& regions) {
    json arr = json::array();
    for (const auto& reg : regions) {
        json jr;
        jr["minimizer"] = {reg.minimizer.i, reg.minimizer.j, reg.minimizer.k};
        jr["value"] = reg.minimizer.value;
        jr["t"] = reg.minimizer.t;
        jr["radius"] = reg.minimizer.radius;
        jr["scale_boundary"] = reg.minimizer.scale_boundary;
        jr["threshold_value"] = reg.threshold_value;
        json vox = json::array();
        for (const auto& v : reg.voxels) vox.push_back({v[0], v[1], v[2]});
        jr["voxels"] = vox;
        arr.push_back(jr);
    }
    return arr;
}

json solve_summary(const Config& c, const SolverResult& res) {
    json j;
    j["solver"] = c.solver;
    j["objective"] = res.objective;
    j["iterations"] = res.iterations;
    j["status"] = to_string(res.status);
    if (std::isfinite(res.duality_gap)) j["duality_gap"] = res.duality_gap;
    if (res.mu > 0.0) j["mu"] = res.mu;
    return j;
}

void write_region_masks(const fs::path& out, const std::vector<BlobRegion>& regions,
                        const SpatialGrid& g, const ScaleGrid& sc) {
    for (std::size_t idx = 0; idx < regions.size(); ++idx) {
        const auto proj = project_region(regions[idx], g, sc);
        const std::string stem = "region_" + std::to_string(idx);
        write_pbm((out / (stem + "_center.pbm")).string(), g.n1, g.n2, proj.center_mask);
        write_pbm((out / (stem + "_extent.pbm")).string(), g.n1, g.n2, proj.extent_mask);
    }
}

// 1-D overview: posterior mean and ground truth curves on top, one pair of
// horizontal bars per region below (solid span = possible centers, dashed
// span = maximal blob extent).
std::string figure_1d(const SpatialGrid& g, const ScaleGrid& sc, const std::vector<double>& mean,
                      const std::vector<double>& truth, const std::vector<BlobRegion>& regions) {
    const double W = 800.0, plot_h = 280.0, left = 55.0, right = 15.0, top = 15.0;
    const double bars_h = 18.0 * double(regions.size()) + 12.0;
    const double H = top + plot_h + 30.0 + bars_h;
    SvgCanvas svg(W, H);
    const double xmax = double(g.n1 - 1) * g.h1;
    double ymin = 0.0, ymax = 0.0;
    for (std::size_t i = 0; i < g.n1; ++i) {
        ymin = std::min({ymin, mean[i], truth[i]});
        ymax = std::max({ymax, mean[i], truth[i]});
    }
    const double pad = 0.05 * (ymax - ymin + 1e-12);
    ymin -= pad;
    ymax += pad;
    auto px = [&](double x) { return left + (W - left - right) * x / xmax; };
    auto py = [&](double y) { return top + plot_h * (ymax - y) / (ymax - ymin); };
    svg.rect(left, top, W - left - right, plot_h, "none", 1.0, "#888888", 1.0);
    for (int tick = 0; tick <= 4; ++tick) {
        const double y = ymin + (ymax - ymin) * double(tick) / 4.0;
        svg.line(left - 4, py(y), left, py(y), "#888888", 1.0);
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.3g", y);
        svg.text(left - 6, py(y) + 4, buf, 10, "end");
        const double x = xmax * double(tick) / 4.0;
        svg.line(px(x), top + plot_h, px(x), top + plot_h + 4, "#888888", 1.0);
        std::snprintf(buf, sizeof buf, "%.3g", x);
        svg.text(px(x), top + plot_h + 14, buf, 10, "middle");
    }
    std::vector<std::pair<double, double>> pts;
    for (std::size_t i = 0; i < g.n1; ++i) pts.emplace_back(px(double(i) * g.h1), py(truth[i]));
    svg.polyline(pts, "#999999", 1.2, "4,3");
    pts.clear();
    for (std::size_t i = 0; i < g.n1; ++i) pts.emplace_back(px(double(i) * g.h1), py(mean[i]));
    svg.polyline(pts, "#1f77b4", 1.6);
    svg.text(left + 8, top + 14, "posterior mean", 11, "start", "#1f77b4");
    svg.text(left + 8, top + 28, "ground truth", 11, "start", "#999999");

    double ybar = top + plot_h + 34.0;
    for (std::size_t idx = 0; idx < regions.size(); ++idx) {
        const auto proj = project_region(regions[idx], g, sc);
        auto span = [&](const std::vector<std::uint8_t>& mask) {
            std::size_t lo = mask.size(), hi = 0;
            for (std::size_t i = 0; i < mask.size(); ++i)
                if (mask[i]) {
                    lo = std::min(lo, i);
                    hi = std::max(hi, i);
                }
            return std::pair<double, double>(double(lo) * g.h1, double(hi) * g.h1);
        };
        const auto [c0, c1] = span(proj.center_mask);
        const auto [e0, e1] = span(proj.extent_mask);
        svg.line(px(e0), ybar, px(e1), ybar, "#1f77b4", 2.0, "2,4");
        svg.line(px(c0), ybar, px(c1), ybar, "#1f77b4", 4.0);
        svg.text(left - 6, ybar + 4, "R" + std::to_string(idx), 10, "end");
        ybar += 18.0;
    }
    return svg.finish();
}

// 2-D overview: grayscale posterior mean with region contours (solid =
// centers, dashed = extents).
std::string figure_2d(const SpatialGrid& g, const ScaleGrid& sc, const std::vector<double>& mean,
                      const std::vector<BlobRegion>& regions) {
    const double cell = std::max(2.0, std::floor(520.0 / double(std::max(g.n1, g.n2))));
    const double left = 10.0, top = 10.0;
    const double W = left + cell * double(g.n2) + 10.0;
    const double H = top + cell * double(g.n1) + 10.0;
    SvgCanvas svg(W, H);
    double lo = mean[0], hi = mean[0];
    for (double v : mean) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const double scale = hi > lo ? 1.0 / (hi - lo) : 0.0;
    for (std::size_t i = 0; i < g.n1; ++i)
        for (std::size_t j = 0; j < g.n2; ++j) {
            const double v = (mean[i * g.n2 + j] - lo) * scale;
            svg.rect(left + cell * double(j), top + cell * double(i), cell, cell,
                     SvgCanvas::gray(v));
        }
    auto contour = [&](const std::vector<std::uint8_t>& mask, double width,
                       const std::string& dash) {
        for (std::size_t i = 0; i < g.n1; ++i)
            for (std::size_t j = 0; j < g.n2; ++j) {
                if (!mask[i * g.n2 + j]) continue;
                const double x = left + cell * double(j), y = top + cell * double(i);
                if (i == 0 || !mask[(i - 1) * g.n2 + j])
                    svg.line(x, y, x + cell, y, "#1f77b4", width, dash);
                if (i + 1 == g.n1 || !mask[(i + 1) * g.n2 + j])
                    svg.line(x, y + cell, x + cell, y + cell, "#1f77b4", width, dash);
                if (j == 0 || !mask[i * g.n2 + j - 1])
                    svg.line(x, y, x, y + cell, "#1f77b4", width, dash);
                if (j + 1 == g.n2 || !mask[i * g.n2 + j + 1])
                    svg.line(x + cell, y, x + cell, y + cell, "#1f77b4", width, dash);
            }
    };
    for (const auto& reg : regions) {
        const auto proj = project_region(reg, g, sc);
        contour(proj.extent_mask, 1.2, "3,3");
        contour(proj.center_mask, 1.6, "");
    }
    return svg.finish();
}

struct BenchTrace {
    std::string solver;
    double mu = 0.0;
    SolverResult result;
    bool failed = false;
    std::string error;
};

std::string figure_bench(const std::vector<BenchTrace>& traces,
                         const std::vector<std::vector<double>>& normalized) {
    const double W = 720.0, H = 420.0, left = 60.0, right = 160.0, top = 15.0, bottom = 40.0;
    SvgCanvas svg(W, H);
    double tmax = 1e-9;
    for (const auto& tr : traces)
        for (const auto& p : tr.result.trace) tmax = std::max(tmax, p.seconds);
    const double lmin = -10.0;  // log10 floor of the normalized objective axis
    auto px = [&](double sec) { return left + (W - left - right) * sec / tmax; };
    auto py = [&](double val) {
        const double l = std::log10(std::max(val, 1e-12));
        return top + (H - top - bottom) * (0.0 - std::max(l, lmin)) / (0.0 - lmin);
    };
    svg.rect(left, top, W - left - right, H - top - bottom, "none", 1.0, "#888888", 1.0);
    for (int e = 0; e >= int(lmin); e -= 2) {
        const double y = py(std::pow(10.0, e));
        svg.line(left - 4, y, left, y, "#888888", 1.0);
        svg.text(left - 6, y + 4, "1e" + std::to_string(e), 10, "end");
    }
    for (int tick = 0; tick <= 4; ++tick) {
        const double sec = tmax * double(tick) / 4.0;
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.3g", sec);
        svg.line(px(sec), H - bottom, px(sec), H - bottom + 4, "#888888", 1.0);
        svg.text(px(sec), H - bottom + 16, buf, 10, "middle");
    }
    svg.text((left + W - right) / 2, H - 8, "seconds", 11, "middle");
    const std::vector<std::string> palette = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                              "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};
    for (std::size_t run = 0; run < traces.size(); ++run) {
        if (traces[run].failed) continue;
        const auto& trace = traces[run].result.trace;
        std::vector<std::pair<double, double>> pts;
        for (std::size_t p = 0; p < trace.size(); ++p)
            pts.emplace_back(px(trace[p].seconds), py(normalized[run][p]));
        const auto& color = palette[run % palette.size()];
        svg.polyline(pts, color, 1.5);
        std::string label = traces[run].solver;
        if (traces[run].mu > 0.0) label += " mu=" + detail::format_double(traces[run].mu);
        svg.rect(W - right + 10, top + 10 + 16.0 * double(run), 10, 10, color);
        svg.text(W - right + 24, top + 19 + 16.0 * double(run), label, 10);
    }
    return svg.finish();
}

// Shared pipeline prefix: model, data, posterior samples, credible tube.
struct PipelineData {
    SpatialGrid grid;
    ScaleGrid scales;
    std::vector<double> f_true;
    Eigen::VectorXd y;
    SampleSet samples;
    CredibleTubeResult tube;
};

PipelineData build_pipeline(const Config& c) {
    PipelineData pd;
    pd.grid = c.dim == 1 ? make_grid_1d(c.n1, c.h1) : make_grid_2d(c.n1, c.n2, c.h1, c.h2);
    pd.scales = make_scale_grid(c.t_min, c.t_max, c.scales);
    pd.f_true = ground_truth(c, pd.grid);
    const auto model = make_convolution_model(pd.grid, c.kernel_std, c.gamma, c.tau, c.eps);
    const Eigen::VectorXd ft =
        Eigen::Map<const Eigen::VectorXd>(pd.f_true.data(), Eigen::Index(pd.f_true.size()));
    pd.y = simulate_data(model, ft, c.seed);
    pd.samples = sample_posterior(model, pd.y, c.samples, c.seed + 1);
    pd.tube = credible_tube(pd.samples, pd.scales, c.alpha);
    return pd;
}

json tube_summary(const CredibleTubeResult& t) {
    json j;
    j["alpha"] = t.alpha;
    j["samples"] = t.sample_count;
    j["s_alpha"] = t.s_alpha;
    j["spanned"] = t.spanned;
    j["containment"] = t.containment;
    j["bisect_steps"] = t.bisect_steps;
    return j;
}

int run_demo(const Config& c, const std::string& out_dir) {
    const fs::path out(out_dir);
    fs::create_directories(out);
    PipelineData pd = build_pipeline(c);
    write_json(out / "config.json", config_to_json(c));
    write_sample_set((out / "samples.tvss").string(), pd.samples);
    write_cube((out / "tube_lower.tvuc").string(), pd.tube.tube.lower);
    write_cube((out / "tube_upper.tvuc").string(), pd.tube.tube.upper);
    write_json(out / "tube.json", tube_summary(pd.tube));

    TvUlogProblem prob = make_problem(pd.tube.tube);
    SolverResult res = run_named_solver(c.solver, prob, solver_options(c));
    write_cube((out / "minimizer.tvuc").string(), res.minimizer);
    write_text(out / "convergence.csv", trace_csv(res.trace, false));
    write_json(out / "solve.json", solve_summary(c, res));

    const ScaleSpaceCube lap = normalized_laplacian(res.minimizer);
    write_cube((out / "laplacian.tvuc").string(), lap);
    const auto regions = extract_regions(lap, c.r);
    write_json(out / "regions.json", regions_to_json(regions));
    write_region_masks(out, regions, pd.grid, pd.scales);

    const auto mean = posterior_mean_of_samples(pd.samples);
    const auto stdev = posterior_std_of_samples(pd.samples);
    if (c.dim == 1) {
        std::string csv = "i,x,f_true,y,posterior_mean,posterior_std\n";
        for (std::size_t i = 0; i < pd.grid.n1; ++i) {
            csv += std::to_string(i) + "," + detail::format_double(double(i) * pd.grid.h1) + "," +
                   detail::format_double(pd.f_true[i]) + "," +
                   detail::format_double(pd.y[Eigen::Index(i)]) + "," +
                   detail::format_double(mean[i]) + "," + detail::format_double(stdev[i]) + "\n";
        }
        write_text(out / "data.csv", csv);
        write_text(out / "figure.svg", figure_1d(pd.grid, pd.scales, mean, pd.f_true, regions));
    } else {
        write_text(out / "figure.svg", figure_2d(pd.grid, pd.scales, mean, regions));
    }
    std::cout << "demo: " << regions.size() << " region(s), objective "
              << detail::format_double(res.objective) << ", solver status "
              << to_string(res.status) << "\n";
    if (res.status == SolveStatus::numerical_failure) return 1;
    return 0;
}

int run_bench(const Config& c, const std::string& out_dir) {
    const fs::path out(out_dir);
    fs::create_directories(out);
    PipelineData pd = build_pipeline(c);
    write_json(out / "config.json", config_to_json(c));
    TvUlogProblem prob = make_problem(pd.tube.tube);

    std::vector<BenchTrace> traces;
    for (const auto& run : c.runs) {
        BenchTrace bt;
        bt.solver = run.solver;
        bt.mu = run.mu;
        SolverOptions opt;
        opt.mu = run.mu;
        opt.tol = run.tol;
        opt.max_iters = run.max_iters;
        try {
            bt.result = run_named_solver(run.solver, prob, opt);
        } catch (const std::exception& e) {
            bt.failed = true;
            bt.error = e.what();
        }
        traces.push_back(std::move(bt));
    }

    // Normalize each trace so its start maps to 1 and the best objective
    // seen by any run of the same objective kind maps to 0.  The legacy
    // quadratic objective is normalized within its own pool.
    auto pool_of = [](const std::string& solver) { return solver == "ulog" ? 1 : 0; };
    double pool_min[2] = {std::numeric_limits<double>::infinity(),
                          std::numeric_limits<double>::infinity()};
    for (const auto& bt : traces) {
        if (bt.failed) continue;
        for (const auto& p : bt.result.trace)
            pool_min[pool_of(bt.solver)] = std::min(pool_min[pool_of(bt.solver)], p.objective);
    }
    std::vector<std::vector<double>> normalized(traces.size());
    for (std::size_t runi = 0; runi < traces.size(); ++runi) {
        if (traces[runi].failed) continue;
        const auto& trace = traces[runi].result.trace;
        const double fmin = pool_min[pool_of(traces[runi].solver)];
        const double denom = std::max(trace.front().objective - fmin, 1e-300);
        for (const auto& p : trace) normalized[runi].push_back((p.objective - fmin) / denom);
    }

    std::string csv = "solver,mu,iter,seconds,objective,normalized\n";
    json summary = json::array();
    for (std::size_t runi = 0; runi < traces.size(); ++runi) {
        const auto& bt = traces[runi];
        json js;
        js["solver"] = bt.solver;
        js["mu"] = bt.mu;
        if (bt.failed) {
            js["error"] = bt.error;
            summary.push_back(js);
            continue;
        }
        const auto& trace = bt.result.trace;
        double floor = std::numeric_limits<double>::infinity();
        for (std::size_t p = 0; p < trace.size(); ++p) {
            floor = std::min(floor, normalized[runi][p]);
            csv += bt.solver + "," + detail::format_double(bt.mu) + "," +
                   std::to_string(trace[p].iter) + "," + detail::format_double(trace[p].seconds) +
                   "," + detail::format_double(trace[p].objective) + "," +
                   detail::format_double(normalized[runi][p]) + "\n";
        }
        js["mu_effective"] = bt.result.mu;
        js["iterations"] = bt.result.iterations;
        js["status"] = to_string(bt.result.status);
        js["final_objective"] = bt.result.objective;
        js["final_normalized"] = normalized[runi].back();
        js["floor_normalized"] = floor;
        summary.push_back(js);
    }
    write_text(out / "bench.csv", csv);
    write_json(out / "bench.json", summary);
    write_text(out / "bench.svg", figure_bench(traces, normalized));
    std::cout << "bench: " << traces.size() << " run(s) written to " << out_dir << "\n";
    return 0;
}

int run_solve(const std::string& lower_path, const std::string& upper_path, const Config& c,
              const std::string& out_dir) {
    const fs::path out(out_dir);
    fs::create_directories(out);
    Tube tube{read_cube(lower_path), read_cube(upper_path)};
    TvUlogProblem prob = make_problem(std::move(tube));
    SolverResult res = run_named_solver(c.solver, prob, solver_options(c));
    write_cube((out / "minimizer.tvuc").string(), res.minimizer);
    write_text(out / "trace.csv", trace_csv(res.trace, true));
    write_json(out / "solve.json", solve_summary(c, res));
    std::cout << "solve: objective " << detail::format_double(res.objective) << ", status "
              << to_string(res.status) << "\n";
    if (res.status == SolveStatus::numerical_failure) return 1;
    return 0;
}

int run_tube(const std::string& samples_path, const Config& c, const std::string& out_dir) {
    const fs::path out(out_dir);
    fs::create_directories(out);
    const SampleSet set = read_sample_set(samples_path);
    const ScaleGrid sc = make_scale_grid(c.t_min, c.t_max, c.scales);
    const CredibleTubeResult tube = credible_tube(set, sc, c.alpha);
    write_cube((out / "tube_lower.tvuc").string(), tube.tube.lower);
    write_cube((out / "tube_upper.tvuc").string(), tube.tube.upper);
    write_json(out / "tube.json", tube_summary(tube));
    std::cout << "tube: containment " << tube.containment << "/" << tube.sample_count << "\n";
    return 0;
}

int run_extract(const std::string& cube_path, const Config& c, const std::string& out_dir) {
    const fs::path out(out_dir);
    fs::create_directories(out);
    const ScaleSpaceCube u = read_cube(cube_path);
    const ScaleSpaceCube lap = normalized_laplacian(u);
    const auto regions = extract_regions(lap, c.r);
    write_json(out / "regions.json", regions_to_json(regions));
    write_region_masks(out, regions, u.grid, u.scales);
    std::cout << "extract: " << regions.size() << " region(s)\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    if (const char* threads = std::getenv("TVULOG_THREADS")) {
        const int n = std::atoi(threads);
        if (n > 0) Eigen::setNbThreads(n);
    }

    CLI::App app{"TV-ULoG: uncertainty-aware blob detection via constrained TV minimization"};
    app.require_subcommand(1);

    Overrides ov;
    std::string lower_path, upper_path, samples_path, cube_path;

    auto add_common = [&](CLI::App* cmd, bool with_solver) {
        cmd->add_option("--config", ov.config_path, "JSON config file");
        cmd->add_option("--out", ov.out, "output directory (default: out)");
        cmd->add_option("--seed", ov.seed, "RNG seed");
        if (with_solver) {
            cmd->add_option("--solver", ov.solver,
                            "solver: socp | dual-smoothing | primal-smoothing | ulog");
            cmd->add_option("--mu", ov.mu, "smoothing parameter (0 = automatic)");
            cmd->add_option("--tol", ov.tol, "solver tolerance (0 = solver default)");
            cmd->add_option("--max-iters", ov.max_iters, "iteration cap (0 = solver default)");
        }
        cmd->add_option("--alpha", ov.alpha, "credibility parameter in (0,1)");
        cmd->add_option("--r", ov.r, "relative extraction threshold in (0,1)");
    };

    CLI::App* demo1 = app.add_subcommand("demo-1d", "1-D deconvolution pipeline end to end");
    add_common(demo1, true);
    CLI::App* demo2 = app.add_subcommand("demo-2d", "2-D deconvolution pipeline end to end");
    add_common(demo2, true);
    CLI::App* bench = app.add_subcommand("bench", "compare solver backends on one problem");
    add_common(bench, true);
    CLI::App* solve = app.add_subcommand("solve", "minimize TV of the Laplacian within a tube");
    solve->add_option("lower", lower_path, "lower tube bound (.tvuc)")->required();
    solve->add_option("upper", upper_path, "upper tube bound (.tvuc)")->required();
    add_common(solve, true);
    CLI::App* tube = app.add_subcommand("tube", "credible tube from posterior samples");
    tube->add_option("samples", samples_path, "posterior sample set (.tvss)")->required();
    add_common(tube, false);
    CLI::App* extract = app.add_subcommand("extract", "blob regions from a minimizer cube");
    extract->add_option("cube", cube_path, "minimizer scale-space cube (.tvuc)")->required();
    add_common(extract, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (demo1->parsed()) return run_demo(load_config(default_config_1d(), ov), ov.out);
        if (demo2->parsed()) return run_demo(load_config(default_config_2d(), ov), ov.out);
        if (bench->parsed()) return run_bench(load_config(default_config_bench(), ov), ov.out);
        if (solve->parsed())
            return run_solve(lower_path, upper_path, load_config(default_config_1d(), ov), ov.out);
        if (tube->parsed())
            return run_tube(samples_path, load_config(default_config_1d(), ov), ov.out);
        if (extract->parsed())
            return run_extract(cube_path, load_config(default_config_1d(), ov), ov.out);
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
