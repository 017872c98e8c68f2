// SPDX-License-Identifier: Apache-2.0

// wsgen: command-line front end for the wavelet-domain style-based generator
// inference engine. Subcommands: generate, optimize, count, bench, verify.

#include <cstdio>
#include <iostream>

#include <CLI11.hpp>

#include "wsg/commands.hpp"
#include "wsg/verify.hpp"

namespace {

int cmd_init(const wsg::InitOptions& opts) {
    const wsg::InitResult res = wsg::run_init(opts);
    std::cerr << "wrote " << opts.out_path << " (" << res.total_scalars
              << " scalars), manifest " << res.manifest_path << '\n';
    return 0;
}

int cmd_generate(const wsg::GenerateOptions& opts) {
    const wsg::GenerateResult res = wsg::run_generate(opts);
    for (const auto& p : res.image_paths) std::cout << p << '\n';
    std::cerr << "wrote " << res.image_paths.size() << " image(s) in " << res.total_ms
              << " ms, manifest " << res.manifest_path << '\n';
    return 0;
}

int cmd_optimize(const wsg::OptimizeOptions& opts) {
    const wsg::OptimizeResult res = wsg::run_optimize(opts);
    std::cout << res.report.to_json() << '\n';
    std::cerr << "wrote " << opts.weights_out << ", manifest " << res.manifest_path << '\n';
    return 0;
}

int cmd_count(const wsg::CountCmdOptions& opts) {
    const wsg::CountResult res = wsg::run_count(opts);
    std::cout << res.rendered;
    return 0;
}

int cmd_bench(const wsg::BenchOptions& opts) {
    const wsg::BenchResult res = wsg::run_bench(opts);
    std::cout << res.table;
    std::cerr << "manifest " << res.manifest_path << '\n';
    return 0;
}

int cmd_verify(const std::string& suite) {
    const std::vector<wsg::CheckResult> results = wsg::run_verify_suite(suite);
    int failures = 0;
    for (const auto& r : results) {
        std::cout << (r.passed ? "[PASS] " : "[FAIL] ") << r.suite << ": " << r.name << " -- "
                  << r.detail << '\n';
        if (!r.passed) ++failures;
    }
    std::cout << (failures == 0 ? "all checks passed" : "FAILED") << " (" << results.size()
              << " checks, suite " << suite << ")\n";
    return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"wavelet-domain style-based generator inference engine"};
    app.set_version_flag("--version", std::string(wsg::kToolVersion));
    app.require_subcommand(1);

    wsg::InitOptions init_opts;
    CLI::App* ini = app.add_subcommand("init", "create a random-init weight container");
    ini->add_option("--config", init_opts.config_path, "generator config JSON")->required();
    ini->add_option("--out", init_opts.out_path, "output container path")->required();
    ini->add_option("--seed", init_opts.seed, "init seed");
    ini->add_option("--demod-mode", init_opts.demod_mode, "style|trainable|none");

    wsg::GenerateOptions gen_opts;
    CLI::App* gen = app.add_subcommand("generate", "render images from a weight container");
    gen->add_option("--weights", gen_opts.weights_path, "weight container (.msgw)")->required();
    gen->add_option("--config", gen_opts.config_path,
                    "generator config JSON; must match the container");
    gen->add_option("--seed", gen_opts.seed, "base seed; image i uses seed+i");
    gen->add_option("--count", gen_opts.count, "number of images");
    gen->add_option("--out-dir", gen_opts.out_dir, "output directory");
    gen->add_flag("--pyramid", gen_opts.pyramid,
                  "also write every auxiliary head's reconstruction");
    gen->add_option("--workers", gen_opts.workers, "image-level worker threads (0 = default)");

    wsg::OptimizeOptions opt_opts;
    CLI::App* opt = app.add_subcommand("optimize",
                                       "fuse demodulation + fold constants, verify, write");
    opt->add_option("--weights-in", opt_opts.weights_in, "input container")->required();
    opt->add_option("--weights-out", opt_opts.weights_out, "output container")->required();
    opt->add_option("--verify-samples", opt_opts.verify_samples,
                    "shared (z, noise) samples for equivalence verification");
    opt->add_option("--tol", opt_opts.tol, "max-abs divergence tolerance");
    opt->add_option("--verify-seed", opt_opts.verify_seed, "verification seed");
    opt->add_option("--report", opt_opts.report_path, "also write the report JSON here");

    wsg::CountCmdOptions cnt_opts;
    CLI::App* cnt = app.add_subcommand("count", "parameter / MAC accounting for a config");
    cnt->add_option("--config", cnt_opts.config_path, "generator config JSON")->required();
    cnt->add_option("--compare", cnt_opts.compare_path, "second config for a ratio report");
    cnt->add_flag("--json", cnt_opts.json, "machine-readable output");
    cnt->add_flag("--include-mapping", cnt_opts.count.include_mapping,
                  "count the mapping network too");
    cnt->add_flag("!--no-bias", cnt_opts.count.include_bias, "exclude biases from params");
    cnt->add_flag("!--no-aux", cnt_opts.count.include_aux_macs,
                  "exclude modulation/demodulation/noise multiplies");
    cnt->add_option("--out", cnt_opts.out_path, "also write the report to this file");

    wsg::BenchOptions bench_opts;
    CLI::App* ben = app.add_subcommand("bench", "inference wall-time benchmark");
    ben->add_option("--weights", bench_opts.weights_path, "weight container")->required();
    ben->add_option("--iters", bench_opts.iters, "timed iterations (median reported)");
    ben->add_option("--warmup", bench_opts.warmup, "untimed warmup iterations");
    ben->add_flag("--fused-vs-unfused", bench_opts.fused_vs_unfused,
                  "also fuse in memory and report the speedup");
    ben->add_option("--threads", bench_opts.threads, "kernel threads (default 1 for comparability)");
    ben->add_option("--seed", bench_opts.seed, "sample seed");
    ben->add_option("--out-dir", bench_opts.out_dir, "manifest directory");

    std::string suite = "all";
    CLI::App* ver = app.add_subcommand("verify", "run the acceptance check suites");
    ver->add_option("--suite", suite, "wavelet|modconv|fusion|complexity|losses|bench|graph|all");

    CLI11_PARSE(app, argc, argv);

    try {
        if (ini->parsed()) return cmd_init(init_opts);
        if (gen->parsed()) return cmd_generate(gen_opts);
        if (opt->parsed()) return cmd_optimize(opt_opts);
        if (cnt->parsed()) return cmd_count(cnt_opts);
        if (ben->parsed()) return cmd_bench(bench_opts);
        if (ver->parsed()) return cmd_verify(suite);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
