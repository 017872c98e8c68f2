// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>

#include "wsg/tensor.hpp"

namespace wsg {

/// How the post-convolution per-output-channel rescale is obtained.
enum class DemodMode {
    none,       ///< no demodulation (prediction heads)
    style,      ///< from the per-sample style scales; varies at inference
    trainable,  ///< from the learned per-input-channel constants; foldable
    fused,      ///< already folded into the pointwise weights
};

const char* to_string(DemodMode m);
DemodMode demod_mode_from_string(const std::string& s);

/// Epsilon inside the demodulation square root.
inline constexpr double kDemodEps = 1e-8;

/// Parameters of one depthwise-separable modulated convolution.
///
/// The forward pipeline is: style affine -> modulate input -> 3x3 depthwise
/// -> 1x1 pointwise -> demodulate (per demod_mode) -> bias -> noise ->
/// leaky-relu. Heads disable the activation via apply_activation.
struct DsModConvParams {
    Tensor w_dw;      ///< [Cin,1,3,3]
    Tensor w_pw;      ///< [Cout,Cin,1,1]
    Tensor bias;      ///< [Cout]
    Tensor affine_w;  ///< [Cin,style_dim]
    Tensor affine_b;  ///< [Cin]
    Tensor p_demod;   ///< [Cin]; present only when demod_mode == trainable
    DemodMode demod_mode = DemodMode::none;
    bool apply_activation = true;
    double activation_slope = 0.2;

    /// Per-output-channel scales applied right after the pointwise conv,
    /// in order. Normally empty; importers may leave such chains behind and
    /// the constant-folding pass collapses them into w_pw.
    std::vector<Tensor> post_scales;

    int64_t in_channels() const { return w_dw.dim(0); }
    int64_t out_channels() const { return w_pw.dim(0); }

    /// Validates shapes and the mode/p_demod pairing.
    void validate() const;
};

/// Runtime arithmetic tally used to show graph rewrites shed work.
struct ArithCounter {
    uint64_t muls = 0;
    uint64_t adds = 0;
};

/// x'[n,i,:,:] = s[n,i] * x[n,i,:,:]
Tensor modulate(const Tensor& x, const Tensor& s);

/// Composes depthwise and pointwise weights into the equivalent dense kernel:
/// dense[j,i,:,:] = w_pw[j,i] * w_dw[i,0,:,:].
Tensor compose_dense(const Tensor& w_dw, const Tensor& w_pw);

/// Style-dependent demodulation coefficients, one per (sample, out channel):
/// demod[n,j] = 1/sqrt(sum_{i,k} (s[n,i] * dense[j,i,k])^2 + eps).
Tensor compute_demod(const Tensor& w_dw, const Tensor& w_pw, const Tensor& s);

/// Same formula with the style replaced by the trainable constants; the
/// result is style-independent, hence constant at inference.
Tensor compute_demod_trainable(const Tensor& w_dw, const Tensor& w_pw, const Tensor& p_demod);

/// Full depthwise-separable modulated convolution forward.
/// `noise` may be an empty tensor to skip injection; `style` is the raw
/// style vector [N,style_dim], mapped through the params' affine.
Tensor ds_modconv_forward(const Tensor& x, const Tensor& style, const DsModConvParams& params,
                          const Tensor& noise = Tensor(), double noise_scale = 0.0,
                          ArithCounter* counter = nullptr);

/// Dense modulated convolution baseline (modulate -> dense conv ->
/// demodulate), used as the equivalence oracle and for complexity
/// comparisons.
struct DenseModConvParams {
    Tensor w_dense;   ///< [Cout,Cin,kh,kw]
    Tensor bias;      ///< [Cout]
    Tensor affine_w;  ///< [Cin,style_dim]
    Tensor affine_b;  ///< [Cin]
    DemodMode demod_mode = DemodMode::style;
    bool apply_activation = true;
    double activation_slope = 0.2;
};

Tensor modconv_dense_forward(const Tensor& x, const Tensor& style,
                             const DenseModConvParams& params, const Tensor& noise = Tensor(),
                             double noise_scale = 0.0);

}  // namespace wsg
