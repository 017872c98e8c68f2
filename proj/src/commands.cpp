// SPDX-License-Identifier: Apache-2.0
#include "wsg/commands.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "wsg/png_io.hpp"

namespace wsg {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

double now_ms() {
    return std::chrono::duration<double, std::milli>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

std::string read_text_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open '" + path + "' for writing");
    f << text;
    if (!text.empty() && text.back() != '\n') f << '\n';
}

std::string write_manifest(const std::string& dir, const std::string& stem, ordered_json body) {
    body["tool"] = "wsgen";
    body["tool_version"] = kToolVersion;
    fs::create_directories(dir);
    const std::string path = (fs::path(dir) / (stem + "_manifest.json")).string();
    write_text_file(path, body.dump(2));
    return path;
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

std::string machine_identifier() {
    std::ifstream f("/proc/cpuinfo");
    std::string line;
    while (std::getline(f, line)) {
        if (line.rfind("model name", 0) == 0) {
            const size_t colon = line.find(':');
            if (colon != std::string::npos) {
                std::string name = line.substr(colon + 1);
                const size_t start = name.find_first_not_of(' ');
                return start == std::string::npos ? name : name.substr(start);
            }
        }
    }
    return "unknown-cpu";
}

InitResult run_init(const InitOptions& opts) {
    const double t0 = now_ms();
    const GeneratorConfig cfg = GeneratorConfig::from_json(read_text_file(opts.config_path));
    const WeightContainer wc =
        init_random(cfg, opts.seed, demod_mode_from_string(opts.demod_mode));
    save_weights(wc, opts.out_path);

    InitResult res;
    res.total_scalars = wc.total_scalars();
    ordered_json m;
    m["command"] = "init";
    m["config"] = opts.config_path;
    m["seed"] = opts.seed;
    m["demod_mode"] = opts.demod_mode;
    m["out"] = opts.out_path;
    m["total_scalars"] = res.total_scalars;
    m["timing_ms"] = {{"total", now_ms() - t0}};
    const std::string dir = fs::path(opts.out_path).parent_path().string();
    res.manifest_path = write_manifest(dir.empty() ? "." : dir, "init", std::move(m));
    return res;
}

GenerateResult run_generate(const GenerateOptions& opts) {
    if (opts.count < 1) throw std::invalid_argument("generate: count must be >= 1");
    const WeightContainer wc = load_weights(opts.weights_path);
    if (!opts.config_path.empty()) {
        const GeneratorConfig cfg = GeneratorConfig::from_json(read_text_file(opts.config_path));
        if (!(cfg == wc.config)) {
            throw std::invalid_argument("generate: config '" + opts.config_path +
                                        "' does not match the weight container's config");
        }
    }
    const Generator gen = Generator::from_container(wc);
    fs::create_directories(opts.out_dir);

    const double t0 = now_ms();
    std::vector<std::vector<std::string>> per_image_paths(static_cast<size_t>(opts.count));

#ifdef _OPENMP
    if (opts.workers > 0) omp_set_num_threads(opts.workers);
#endif

    // Each image draws from its own seed-index stream, so the output is
    // independent of how images are spread over workers.
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < opts.count; ++i) {
        const uint64_t seed = opts.seed + static_cast<uint64_t>(i);
        const GenerateSample sample = draw_sample(gen, seed);
        std::vector<std::string>& paths = per_image_paths[static_cast<size_t>(i)];
        const std::string stem =
            (fs::path(opts.out_dir) / ("gen_s" + std::to_string(seed))).string();
        if (opts.pyramid) {
            const WaveletPyramid pyr = gen.synthesis_pyramid(sample.style, sample.noises);
            const Tensor final_img = clamp_image(pyr.levels.back().pixels);
            write_png_rgb8(stem + ".png", final_img);
            paths.push_back(stem + ".png");
            for (const PyramidLevel& level : pyr.levels) {
                const int64_t r = level.pixels.dim(2);
                const std::string p = stem + "_r" + std::to_string(r) + ".png";
                write_png_rgb8(p, clamp_image(level.pixels));
                paths.push_back(p);
            }
        } else {
            const Tensor img = clamp_image(gen.synthesis_final(sample.style, sample.noises));
            write_png_rgb8(stem + ".png", img);
            paths.push_back(stem + ".png");
        }
    }
    const double total = now_ms() - t0;

    GenerateResult res;
    for (auto& v : per_image_paths)
        res.image_paths.insert(res.image_paths.end(), v.begin(), v.end());
    res.total_ms = total;

    ordered_json m;
    m["command"] = "generate";
    m["weights"] = opts.weights_path;
    m["config"] = opts.config_path.empty() ? ordered_json(nullptr) : ordered_json(opts.config_path);
    m["seed"] = opts.seed;
    m["count"] = opts.count;
    m["pyramid"] = opts.pyramid;
    m["workers"] = opts.workers;
    m["outputs"] = res.image_paths;
    m["timing_ms"] = {{"total", total}};
    res.manifest_path = write_manifest(opts.out_dir, "generate", std::move(m));
    return res;
}

OptimizeResult run_optimize(const OptimizeOptions& opts) {
    const double t0 = now_ms();
    const WeightContainer original = load_weights(opts.weights_in);

    OptimizationReport report;
    WeightContainer fused = fuse_demodulation(original, &report);
    fused = fold_constants(fused, &report);

    const OptimizationReport verdict =
        verify_equivalence(original, fused, opts.verify_samples, opts.tol, opts.verify_seed);
    report.max_abs_divergence = verdict.max_abs_divergence;
    report.max_rel_divergence = verdict.max_rel_divergence;
    report.verified_samples = verdict.verified_samples;
    report.tolerance = verdict.tolerance;
    report.verified_ok = verdict.verified_ok;

    if (!report.verified_ok) {
        throw std::runtime_error("optimize: fused graph diverged (max abs " +
                                 std::to_string(report.max_abs_divergence) + " > tol " +
                                 std::to_string(opts.tol) + "); refusing to write " +
                                 opts.weights_out);
    }
    save_weights(fused, opts.weights_out);
    if (!opts.report_path.empty()) write_text_file(opts.report_path, report.to_json());

    OptimizeResult res;
    res.report = report;
    ordered_json m;
    m["command"] = "optimize";
    m["weights_in"] = opts.weights_in;
    m["weights_out"] = opts.weights_out;
    m["verify_samples"] = opts.verify_samples;
    m["tol"] = opts.tol;
    m["verify_seed"] = opts.verify_seed;
    m["report"] = ordered_json::parse(report.to_json());
    m["timing_ms"] = {{"total", now_ms() - t0}};
    const std::string dir = fs::path(opts.weights_out).parent_path().string();
    res.manifest_path = write_manifest(dir.empty() ? "." : dir, "optimize", std::move(m));
    return res;
}

CountResult run_count(const CountCmdOptions& opts) {
    const double t0 = now_ms();
    GeneratorConfig cfg = GeneratorConfig::from_json(read_text_file(opts.config_path));
    CountOptions copts = opts.count;
    if (cfg.variant == GeneratorVariant::dense_baseline) copts.demod_mode = DemodMode::style;

    CountResult res;
    if (!opts.compare_path.empty()) {
        const GeneratorConfig other =
            GeneratorConfig::from_json(read_text_file(opts.compare_path));
        res.report = compare(cfg, other, opts.count);
    } else {
        res.report = count_network(cfg, copts);
    }
    res.rendered = opts.json ? to_json(res.report) : to_table(res.report);
    if (!opts.out_path.empty()) write_text_file(opts.out_path, res.rendered);

    ordered_json m;
    m["command"] = "count";
    m["config"] = opts.config_path;
    m["compare"] = opts.compare_path.empty() ? ordered_json(nullptr)
                                             : ordered_json(opts.compare_path);
    m["include_mapping"] = opts.count.include_mapping;
    m["include_bias"] = opts.count.include_bias;
    m["include_aux_macs"] = opts.count.include_aux_macs;
    m["totals"] = {{"params", res.report.total_params}, {"macs", res.report.total_macs}};
    m["timing_ms"] = {{"total", now_ms() - t0}};
    const std::string dir =
        opts.out_path.empty() ? "." : fs::path(opts.out_path).parent_path().string();
    res.manifest_path = write_manifest(dir.empty() ? "." : dir, "count", std::move(m));
    return res;
}

namespace {

double bench_graph(const Generator& gen, const GenerateSample& sample, int warmup, int iters) {
    for (int i = 0; i < warmup; ++i) (void)gen.synthesis_final(sample.style, sample.noises);
    std::vector<double> times;
    times.reserve(static_cast<size_t>(iters));
    for (int i = 0; i < iters; ++i) {
        const double t0 = now_ms();
        (void)gen.synthesis_final(sample.style, sample.noises);
        times.push_back(now_ms() - t0);
    }
    return median(times);
}

}  // namespace

BenchResult run_bench(const BenchOptions& opts) {
    if (opts.iters < 1) throw std::invalid_argument("bench: iters must be >= 1");
#ifdef _OPENMP
    omp_set_num_threads(opts.threads > 0 ? opts.threads : 1);
#endif

    const WeightContainer wc = load_weights(opts.weights_path);
    const Generator gen = Generator::from_container(wc);
    const GenerateSample sample = draw_sample(gen, opts.seed);

    BenchResult res;
    res.machine = machine_identifier();
    res.median_ms = bench_graph(gen, sample, opts.warmup, opts.iters);

    std::ostringstream table;
    char buf[200];
    std::snprintf(buf, sizeof(buf), "%-28s %-18s %12s\n", "graph", "kernel path", "median (ms)");
    table << "machine: " << res.machine << ", threads: " << (opts.threads > 0 ? opts.threads : 1)
          << ", iters: " << opts.iters << "\n"
          << buf;
    const std::string name = std::string(to_string(wc.config.variant)) + "@" +
                             std::to_string(wc.config.target_resolution);
    std::snprintf(buf, sizeof(buf), "%-28s %-18s %12.3f\n", name.c_str(),
                  to_string(wc.demod_mode), res.median_ms);
    table << buf;

    if (opts.fused_vs_unfused) {
        if (wc.demod_mode != DemodMode::trainable) {
            throw std::invalid_argument(
                "bench: --fused-vs-unfused needs a trainable-demodulation container, got " +
                std::string(to_string(wc.demod_mode)));
        }
        const WeightContainer fused_wc = fold_constants(fuse_demodulation(wc));
        const Generator fused = Generator::from_container(fused_wc);
        res.median_ms_fused = bench_graph(fused, sample, opts.warmup, opts.iters);
        res.speedup = res.median_ms / res.median_ms_fused;
        std::snprintf(buf, sizeof(buf), "%-28s %-18s %12.3f\n", name.c_str(), "fused",
                      res.median_ms_fused);
        table << buf;
        std::snprintf(buf, sizeof(buf), "speedup (unfused/fused): %.3fx\n", res.speedup);
        table << buf;
    }
    res.table = table.str();

    ordered_json m;
    m["command"] = "bench";
    m["weights"] = opts.weights_path;
    m["iters"] = opts.iters;
    m["warmup"] = opts.warmup;
    m["threads"] = opts.threads;
    m["seed"] = opts.seed;
    m["machine"] = res.machine;
    m["fused_vs_unfused"] = opts.fused_vs_unfused;
    ordered_json timings;
    timings["median_ms"] = res.median_ms;
    if (opts.fused_vs_unfused) {
        timings["median_ms_fused"] = res.median_ms_fused;
        timings["speedup"] = res.speedup;
    }
    m["timing_ms"] = timings;
    res.manifest_path = write_manifest(opts.out_dir, "bench", std::move(m));
    return res;
}

}  // namespace wsg
