// SPDX-License-Identifier: Apache-2.0
#include "wsg/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <sstream>

#include <nlohmann/json.hpp>

namespace wsg {

std::string OptimizationReport::to_json() const {
    nlohmann::ordered_json j;
    j["passes_applied"] = passes_applied;
    j["params_folded"] = params_folded;
    j["nodes_removed"] = nodes_removed;
    if (verified_samples > 0) {
        j["max_abs_divergence"] = max_abs_divergence;
        j["max_rel_divergence"] = max_rel_divergence;
        j["verified_samples"] = verified_samples;
        j["tolerance"] = tolerance;
        j["verified_ok"] = verified_ok;
    }
    return j.dump(2);
}

std::string OptimizationReport::to_text() const {
    std::ostringstream os;
    os << "passes:";
    for (const auto& p : passes_applied) os << ' ' << p;
    os << "\nparams folded:  " << params_folded;
    os << "\nnodes removed:  " << nodes_removed << '\n';
    if (verified_samples > 0) {
        os << "verified on " << verified_samples << " samples: max abs " << max_abs_divergence
           << ", max rel " << max_rel_divergence << ", tol " << tolerance << " -> "
           << (verified_ok ? "ok" : "DIVERGED") << '\n';
    }
    return os.str();
}

void OptimizationReport::merge_counts(const OptimizationReport& other) {
    passes_applied.insert(passes_applied.end(), other.passes_applied.begin(),
                          other.passes_applied.end());
    params_folded += other.params_folded;
    nodes_removed += other.nodes_removed;
}

namespace {

std::vector<std::string> trunk_conv_prefixes(const GeneratorConfig& cfg) {
    std::vector<std::string> out;
    for (int k = 0; k < cfg.num_blocks(); ++k) {
        const std::string b = "b" + std::to_string(k + 1);
        if (k > 0) out.push_back(b + ".conv_post");
        out.push_back(b + ".conv_main");
    }
    return out;
}

}  // namespace

WeightContainer fuse_demodulation(const WeightContainer& weights, OptimizationReport* report) {
    if (weights.config.variant != GeneratorVariant::mobile) {
        throw std::invalid_argument("fuse_demodulation: only mobile graphs carry a foldable "
                                    "demodulation");
    }
    if (weights.demod_mode == DemodMode::style) {
        throw std::invalid_argument(
            "fuse_demodulation: demodulation is a function of the style at runtime and cannot "
            "be folded; retrain with trainable demodulation");
    }
    if (weights.demod_mode == DemodMode::none) {
        throw std::invalid_argument("fuse_demodulation: graph has no demodulation to fold");
    }

    WeightContainer out = weights;
    if (weights.demod_mode == DemodMode::fused) {
        if (report) report->passes_applied.push_back("fuse_demodulation(no-op)");
        return out;
    }

    int64_t folded = 0, removed = 0;
    for (const std::string& prefix : trunk_conv_prefixes(out.config)) {
        const Tensor w_dw = out.get(prefix + ".dw");
        Tensor w_pw = out.get(prefix + ".pw");
        const Tensor p = out.get(prefix + ".p_demod");
        const Tensor demod = compute_demod_trainable(w_dw, w_pw, p);
        const int64_t cout = w_pw.dim(0), cin = w_pw.dim(1);
        for (int64_t j = 0; j < cout; ++j)
            for (int64_t i = 0; i < cin; ++i) w_pw.at(j, i, 0, 0) = demod[j] * w_pw.at(j, i, 0, 0);
        out.set(prefix + ".pw", w_pw);
        folded += p.numel();
        removed += 1;  // the runtime demodulation multiply of this conv
    }
    out.remove_matching(".p_demod");
    out.demod_mode = DemodMode::fused;

    if (report) {
        report->passes_applied.push_back("fuse_demodulation");
        report->params_folded += folded;
        report->nodes_removed += removed;
    }
    return out;
}

WeightContainer fold_constants(const WeightContainer& weights, OptimizationReport* report) {
    // Gather post_scale chains per conv prefix.
    struct Chain {
        std::vector<std::pair<int, std::string>> entries;
    };
    std::map<std::string, Chain> chains;
    for (const auto& e : weights.entries) {
        const size_t pos = e.name.rfind(".post_scale");
        if (pos == std::string::npos) continue;
        const std::string idx = e.name.substr(pos + 11);
        if (idx.empty() || idx.find_first_not_of("0123456789") != std::string::npos) continue;
        chains[e.name.substr(0, pos)].entries.emplace_back(std::stoi(idx), e.name);
    }

    WeightContainer out = weights;
    if (report) report->passes_applied.push_back("fold_constants");
    if (chains.empty()) return out;

    std::vector<std::string> to_remove;
    int64_t folded = 0, removed = 0;
    for (auto& [prefix, chain] : chains) {
        const bool is_head = prefix.find(".head") != std::string::npos;
        if (!is_head && out.demod_mode != DemodMode::fused &&
            out.demod_mode != DemodMode::none) {
            throw std::invalid_argument(
                "fold_constants: scale chain on '" + prefix +
                "' cannot fold while demodulation is " + to_string(out.demod_mode) +
                " (rescaling w_pw would change the demodulation constants); fuse first");
        }
        std::sort(chain.entries.begin(), chain.entries.end());
        Tensor w_pw = out.get(prefix + ".pw");
        const int64_t cout = w_pw.dim(0), cin = w_pw.dim(1);
        for (const auto& [idx, name] : chain.entries) {
            const Tensor scale = out.get(name);
            for (int64_t j = 0; j < cout; ++j)
                for (int64_t i = 0; i < cin; ++i)
                    w_pw.at(j, i, 0, 0) = scale[j] * w_pw.at(j, i, 0, 0);
            folded += scale.numel();
            removed += 1;
            to_remove.push_back(name);
        }
        out.set(prefix + ".pw", w_pw);
    }
    out.remove_entries(to_remove);

    if (report) {
        report->params_folded += folded;
        report->nodes_removed += removed;
    }
    return out;
}

OptimizationReport verify_equivalence(const WeightContainer& a, const WeightContainer& b,
                                      int n_samples, double tol, uint64_t seed) {
    if (!(a.config == b.config)) {
        throw std::invalid_argument("verify_equivalence: generator configs differ");
    }
    if (n_samples < 1) throw std::invalid_argument("verify_equivalence: n_samples must be >= 1");

    const Generator ga = Generator::from_container(a);
    const Generator gb = Generator::from_container(b);

    OptimizationReport report;
    report.verified_samples = n_samples;
    report.tolerance = tol;
    double max_abs = 0.0, max_rel = 0.0;
    for (int i = 0; i < n_samples; ++i) {
        // Shared (z, noise) draw; each graph maps z through its own mapping.
        const GenerateSample s = draw_sample(ga, seed + static_cast<uint64_t>(i));
        const Tensor img_a = ga.synthesis_final(s.style, s.noises);
        const Tensor style_b = gb.mapping_forward(s.z);
        const Tensor img_b = gb.synthesis_final(style_b, s.noises);
        max_abs = std::max(max_abs, max_abs_diff(img_a, img_b));
        max_rel = std::max(max_rel, max_rel_diff(img_a, img_b));
    }
    report.max_abs_divergence = max_abs;
    report.max_rel_divergence = max_rel;
    report.verified_ok = max_abs <= tol;
    return report;
}

bool containers_bitwise_equal(const WeightContainer& a, const WeightContainer& b) {
    if (!(a.config == b.config) || a.demod_mode != b.demod_mode ||
        a.entries.size() != b.entries.size() || a.blob.size() != b.blob.size()) {
        return false;
    }
    for (size_t i = 0; i < a.entries.size(); ++i) {
        if (a.entries[i].name != b.entries[i].name || a.entries[i].shape != b.entries[i].shape ||
            a.entries[i].byte_offset != b.entries[i].byte_offset) {
            return false;
        }
    }
    for (size_t i = 0; i < a.blob.size(); ++i) {
        if (std::memcmp(&a.blob[i], &b.blob[i], sizeof(double)) != 0) return false;
    }
    return true;
}

}  // namespace wsg
