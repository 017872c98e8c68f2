// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "wsg/complexity.hpp"
#include "wsg/graph.hpp"
#include "wsg/optimizer.hpp"

namespace wsg {

inline constexpr const char* kToolVersion = "0.1.0";

// Command implementations behind the CLI front end. Each run writes one
// machine-readable manifest that records the inputs, flags and timings
// needed to reproduce it.

struct InitOptions {
    std::string config_path;
    std::string out_path;
    uint64_t seed = 0;
    std::string demod_mode = "trainable";
};

struct InitResult {
    int64_t total_scalars = 0;
    std::string manifest_path;
};

/// Creates a randomly initialized weight container for a config.
InitResult run_init(const InitOptions& opts);

struct GenerateOptions {
    std::string weights_path;
    std::string config_path;  // optional; must agree with the container when given
    std::string out_dir = ".";
    uint64_t seed = 0;
    int count = 1;
    bool pyramid = false;
    int workers = 0;  // 0: library default
};

struct GenerateResult {
    std::vector<std::string> image_paths;
    std::string manifest_path;
    double total_ms = 0.0;
};

GenerateResult run_generate(const GenerateOptions& opts);

struct OptimizeOptions {
    std::string weights_in;
    std::string weights_out;
    int verify_samples = 16;
    double tol = 1e-9;
    uint64_t verify_seed = 101;
    std::string report_path;  // optional; report JSON always returned
};

struct OptimizeResult {
    OptimizationReport report;
    std::string manifest_path;
};

OptimizeResult run_optimize(const OptimizeOptions& opts);

struct CountCmdOptions {
    std::string config_path;
    std::string compare_path;  // optional second config
    CountOptions count;
    bool json = false;
    std::string out_path;  // optional; default stdout only
};

struct CountResult {
    ComplexityReport report;
    std::string rendered;  // table or JSON per options
    std::string manifest_path;
};

CountResult run_count(const CountCmdOptions& opts);

struct BenchOptions {
    std::string weights_path;
    int iters = 30;
    int warmup = 3;
    bool fused_vs_unfused = false;
    int threads = 1;
    uint64_t seed = 7;
    std::string out_dir = ".";
};

struct BenchResult {
    double median_ms = 0.0;        // the loaded graph as-is
    double median_ms_fused = 0.0;  // only in fused_vs_unfused mode
    double speedup = 0.0;
    std::string machine;
    std::string table;
    std::string manifest_path;
};

BenchResult run_bench(const BenchOptions& opts);

/// "model name" from /proc/cpuinfo, or a fallback.
std::string machine_identifier();

}  // namespace wsg
