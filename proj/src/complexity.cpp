// SPDX-License-Identifier: Apache-2.0
#include "wsg/complexity.hpp"

#include <cstdio>
#include <sstream>

#include <nlohmann/json.hpp>

namespace wsg {

LayerCount count_layer(LayerKind kind, int64_t cin, int64_t cout, int64_t k, int64_t h_out,
                       int64_t w_out, bool include_bias) {
    const int64_t hw = h_out * w_out;
    switch (kind) {
        case LayerKind::dense_conv:
            return {cout * cin * k * k + (include_bias ? cout : 0), cout * cin * k * k * hw};
        case LayerKind::depthwise_conv:
            return {cin * k * k + (include_bias ? cin : 0), cin * k * k * hw};
        case LayerKind::pointwise_conv:
            return {cout * cin + (include_bias ? cout : 0), cout * cin * hw};
        case LayerKind::linear_fc:
            return {cout * cin + (include_bias ? cout : 0), cout * cin};
        case LayerKind::idwt_upscale:
            return {0, 0};
        case LayerKind::modulation:
            return {0, cin * hw};
        case LayerKind::demodulation:
            // cin trainable constants (0 for the style-driven form), one
            // multiply per output element to apply.
            return {cin, cout * hw};
        case LayerKind::noise:
            return {1, hw};
    }
    return {};
}

namespace {

struct Walker {
    const CountOptions& opts;
    ComplexityReport& report;

    void add(const std::string& name, LayerCount c, bool aux_macs = false) {
        if (aux_macs && !opts.include_aux_macs) c.macs = 0;
        report.per_layer.push_back({name, c.params, c.macs});
        report.total_params += c.params;
        report.total_macs += c.macs;
    }

    void mapping(const GeneratorConfig& cfg) {
        if (!opts.include_mapping) return;
        for (int i = 0; i < cfg.mapping_layers; ++i) {
            add("mapping." + std::to_string(i),
                count_layer(LayerKind::linear_fc, cfg.style_dim, cfg.style_dim, 1, 1, 1,
                            opts.include_bias));
        }
    }

    // One depthwise-separable modulated conv unit; the unit's bias is
    // attributed to the pointwise stage.
    void ds_unit(const std::string& name, int64_t cin, int64_t cout, int64_t style_dim,
                 int64_t res, DemodMode mode, bool with_noise) {
        add(name + ".modulation", count_layer(LayerKind::modulation, cin, cout, 0, res, res),
            /*aux=*/true);
        add(name + ".dw", count_layer(LayerKind::depthwise_conv, cin, cin, 3, res, res, false));
        add(name + ".pw",
            count_layer(LayerKind::pointwise_conv, cin, cout, 1, res, res, opts.include_bias));
        add(name + ".affine",
            count_layer(LayerKind::linear_fc, style_dim, cin, 1, 1, 1, opts.include_bias));
        if (mode == DemodMode::style || mode == DemodMode::trainable) {
            const int64_t demod_params = mode == DemodMode::trainable ? cin : 0;
            add(name + ".demod",
                count_layer(LayerKind::demodulation, demod_params, cout, 0, res, res),
                /*aux=*/true);
        }
        if (with_noise) {
            add(name + ".noise", count_layer(LayerKind::noise, 0, 0, 0, res, res), /*aux=*/true);
        }
    }

    // StyleGAN2-style dense modulated conv; modulation runs at the conv's
    // input resolution.
    void dense_unit(const std::string& name, int64_t cin, int64_t cout, int64_t k,
                    int64_t style_dim, int64_t res_in, int64_t res_out, bool demod,
                    bool with_noise) {
        add(name + ".modulation",
            count_layer(LayerKind::modulation, cin, cout, 0, res_in, res_in), /*aux=*/true);
        add(name + ".weight",
            count_layer(LayerKind::dense_conv, cin, cout, k, res_out, res_out,
                        opts.include_bias));
        add(name + ".affine",
            count_layer(LayerKind::linear_fc, style_dim, cin, 1, 1, 1, opts.include_bias));
        if (demod) {
            add(name + ".demod", count_layer(LayerKind::demodulation, 0, cout, 0, res_out, res_out),
                /*aux=*/true);
        }
        if (with_noise) {
            add(name + ".noise", count_layer(LayerKind::noise, 0, 0, 0, res_out, res_out),
                /*aux=*/true);
        }
    }
};

}  // namespace

ComplexityReport count_network(const GeneratorConfig& cfg, const CountOptions& opts) {
    cfg.validate();
    ComplexityReport report;
    report.network = std::string(to_string(cfg.variant)) + "@" +
                     std::to_string(cfg.target_resolution);
    Walker w{opts, report};

    w.mapping(cfg);
    const int64_t c0 = cfg.width_at(cfg.base_resolution);
    report.per_layer.push_back(
        {"const_input", c0 * cfg.base_resolution * cfg.base_resolution, 0});
    report.total_params += c0 * cfg.base_resolution * cfg.base_resolution;

    if (cfg.variant == GeneratorVariant::mobile) {
        const DemodMode mode = opts.demod_mode;
        for (int k = 0; k < cfg.num_blocks(); ++k) {
            const std::string b = "b" + std::to_string(k + 1);
            const int64_t res = cfg.feature_resolution(k);
            const int64_t cout = cfg.width_at(res);
            if (k == 0) {
                w.ds_unit(b + ".conv_main", c0, cout, cfg.style_dim, res, mode, true);
            } else {
                w.add(b + ".idwt", count_layer(LayerKind::idwt_upscale, 0, 0, 0, res, res));
                const int64_t cin_post = cfg.width_at(res / 2) / 4;
                w.ds_unit(b + ".conv_post", cin_post, cout, cfg.style_dim, res, mode, true);
                w.ds_unit(b + ".conv_main", cout, cout, cfg.style_dim, res, mode, true);
            }
            w.ds_unit(b + ".head", cout, 12, cfg.style_dim, res, DemodMode::none, false);
        }
        // Final-image reconstruction is IDWT of the last head: free.
        w.add("output.idwt",
              count_layer(LayerKind::idwt_upscale, 0, 0, 0, cfg.target_resolution,
                          cfg.target_resolution));
    } else {
        const int n_blocks = cfg.num_blocks() + 1;
        for (int k = 0; k < n_blocks; ++k) {
            const std::string b = "b" + std::to_string(k + 1);
            const int64_t res = cfg.base_resolution << k;
            const int64_t cout = cfg.width_at(res);
            if (k == 0) {
                w.dense_unit(b + ".conv", cout, cout, 3, cfg.style_dim, res, res, true, true);
            } else {
                const int64_t cin = cfg.width_at(res / 2);
                w.dense_unit(b + ".conv0_up", cin, cout, 3, cfg.style_dim, res / 2, res, true,
                             true);
                w.dense_unit(b + ".conv1", cout, cout, 3, cfg.style_dim, res, res, true, true);
            }
            w.dense_unit(b + ".to_rgb", cout, 3, 1, cfg.style_dim, res, res, false, false);
        }
    }
    return report;
}

ComplexityReport compare(const GeneratorConfig& a, const GeneratorConfig& b,
                         const CountOptions& opts) {
    CountOptions opts_a = opts;
    CountOptions opts_b = opts;
    if (a.variant == GeneratorVariant::dense_baseline) opts_a.demod_mode = DemodMode::style;
    if (b.variant == GeneratorVariant::dense_baseline) opts_b.demod_mode = DemodMode::style;
    ComplexityReport ra = count_network(a, opts_a);
    const ComplexityReport rb = count_network(b, opts_b);
    ra.has_comparison = true;
    ra.other_network = rb.network;
    ra.other_params = rb.total_params;
    ra.other_macs = rb.total_macs;
    ra.ratio_params = static_cast<double>(ra.total_params) / static_cast<double>(rb.total_params);
    ra.ratio_macs = static_cast<double>(ra.total_macs) / static_cast<double>(rb.total_macs);
    return ra;
}

std::string to_table(const ComplexityReport& r, bool with_layers) {
    std::ostringstream os;
    char buf[160];
    if (with_layers) {
        std::snprintf(buf, sizeof(buf), "%-28s %14s %18s\n", "layer", "params", "macs");
        os << buf;
        for (const auto& l : r.per_layer) {
            std::snprintf(buf, sizeof(buf), "%-28s %14lld %18lld\n", l.name.c_str(),
                          static_cast<long long>(l.params), static_cast<long long>(l.macs));
            os << buf;
        }
        os << '\n';
    }
    std::snprintf(buf, sizeof(buf), "%-24s %10s %10s\n", "network", "MParams", "GMACs");
    os << buf;
    std::snprintf(buf, sizeof(buf), "%-24s %10.2f %10.2f\n", r.network.c_str(),
                  static_cast<double>(r.total_params) / 1e6,
                  static_cast<double>(r.total_macs) / 1e9);
    os << buf;
    if (r.has_comparison) {
        std::snprintf(buf, sizeof(buf), "%-24s %10.2f %10.2f\n", r.other_network.c_str(),
                      static_cast<double>(r.other_params) / 1e6,
                      static_cast<double>(r.other_macs) / 1e9);
        os << buf;
        std::snprintf(buf, sizeof(buf), "%-24s %10.2fx %9.2fx\n", "ratio (first/second)",
                      r.ratio_params, r.ratio_macs);
        os << buf;
    }
    return os.str();
}

std::string to_json(const ComplexityReport& r) {
    nlohmann::ordered_json j;
    j["network"] = r.network;
    j["total_params"] = r.total_params;
    j["total_macs"] = r.total_macs;
    nlohmann::ordered_json layers = nlohmann::ordered_json::array();
    for (const auto& l : r.per_layer) {
        layers.push_back({{"name", l.name}, {"params", l.params}, {"macs", l.macs}});
    }
    j["per_layer"] = layers;
    if (r.has_comparison) {
        j["comparison"] = {{"network", r.other_network},
                           {"total_params", r.other_params},
                           {"total_macs", r.other_macs},
                           {"ratio_params", r.ratio_params},
                           {"ratio_macs", r.ratio_macs}};
    }
    return j.dump(2);
}

}  // namespace wsg
