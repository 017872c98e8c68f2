// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "wsg/graph.hpp"

namespace wsg {

enum class LayerKind {
    dense_conv,
    depthwise_conv,
    pointwise_conv,
    linear_fc,
    idwt_upscale,
    modulation,
    demodulation,
    noise,
};

struct LayerCount {
    int64_t params = 0;
    int64_t macs = 0;
};

/// Parameter/MAC formulas for one layer. One MAC is one multiply-accumulate;
/// pure additions cost nothing, which is what makes the IDWT upscale free.
/// Spatial extents are the layer's output size except for modulation, where
/// the caller passes the modulated input's size. Demodulation params are the
/// trainable constants (pass cin=0 for the style-driven form).
LayerCount count_layer(LayerKind kind, int64_t cin, int64_t cout, int64_t k, int64_t h_out,
                       int64_t w_out, bool include_bias = true);

/// Counting conventions. Defaults are the ones that land nearest the
/// published StyleGAN2-scale figures: synthesis network only (the mapping
/// network is reported separately), biases counted as parameters,
/// modulation/demodulation/noise multiplies counted as MACs, activations
/// free.
struct CountOptions {
    bool include_mapping = false;
    bool include_bias = true;
    bool include_aux_macs = true;
    DemodMode demod_mode = DemodMode::trainable;  // mobile trunk; dense_baseline is style
};

struct LayerLine {
    std::string name;
    int64_t params = 0;
    int64_t macs = 0;
};

struct ComplexityReport {
    std::string network;
    std::vector<LayerLine> per_layer;
    int64_t total_params = 0;
    int64_t total_macs = 0;

    // Populated by compare(): the other network's totals and this/other
    // ratios.
    bool has_comparison = false;
    std::string other_network;
    int64_t other_params = 0;
    int64_t other_macs = 0;
    double ratio_params = 0.0;
    double ratio_macs = 0.0;
};

ComplexityReport count_network(const GeneratorConfig& config, const CountOptions& opts = {});

/// Side-by-side accounting; ratios are a's totals over b's.
ComplexityReport compare(const GeneratorConfig& a, const GeneratorConfig& b,
                         const CountOptions& opts = {});

/// Aligned text table (per-layer lines optional).
std::string to_table(const ComplexityReport& report, bool with_layers = true);
/// Machine-readable variant.
std::string to_json(const ComplexityReport& report);

}  // namespace wsg
