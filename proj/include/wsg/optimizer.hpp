// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "wsg/graph.hpp"

namespace wsg {

struct OptimizationReport {
    std::vector<std::string> passes_applied;
    int64_t params_folded = 0;
    int64_t nodes_removed = 0;
    double max_abs_divergence = -1.0;  // < 0 until verification ran
    double max_rel_divergence = -1.0;
    int verified_samples = 0;
    double tolerance = 0.0;
    bool verified_ok = false;

    std::string to_json() const;
    std::string to_text() const;
    void merge_counts(const OptimizationReport& other);
};

/// Folds the trainable demodulation constants into the pointwise weights
/// (w_pw[j,:] *= demod[j]), drops p_demod from the graph and marks the
/// container fused. Biases are untouched: demodulation applies before the
/// bias in this graph's op order. A fused container passes through
/// unchanged; style-mode containers are rejected (their demodulation varies
/// with the style and cannot become a constant).
WeightContainer fuse_demodulation(const WeightContainer& weights,
                                  OptimizationReport* report = nullptr);

/// Collapses leftover per-channel scale chains (post_scale entries) into the
/// pointwise weights. Requires demodulation to be fused (or absent) first,
/// since rescaling w_pw would otherwise change the demodulation constants.
/// A graph with nothing to fold passes through unchanged.
WeightContainer fold_constants(const WeightContainer& weights,
                               OptimizationReport* report = nullptr);

/// Runs both generators on n_samples shared (z, noise) draws and reports the
/// worst absolute/relative divergence of the final images.
OptimizationReport verify_equivalence(const WeightContainer& a, const WeightContainer& b,
                                      int n_samples, double tol, uint64_t seed);

bool containers_bitwise_equal(const WeightContainer& a, const WeightContainer& b);

}  // namespace wsg
