// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "wsg/tensor.hpp"

namespace wsg {

// Convolution and activation primitives. All kernels parallelize over output
// elements only; the reduction order inside one output element is fixed, so
// results are bit-identical for any thread count.

/// Cross-correlation of x[N,Cin,H,W] with w[Cout,Cin,kh,kw]; zero padding.
/// Output is [N,Cout,(H+2p-kh)/s+1,(W+2p-kw)/s+1].
Tensor conv2d_dense(const Tensor& x, const Tensor& w, int stride = 1, int pad = 0);

/// Per-channel convolution with w[C,1,kh,kw]; pad must equal (kh-1)/2 so the
/// output keeps the input's spatial size.
Tensor conv2d_depthwise(const Tensor& x, const Tensor& w, int pad = 1);

/// 1x1 convolution with w[Cout,Cin,1,1]: a per-pixel matrix multiply.
Tensor conv2d_pointwise(const Tensor& x, const Tensor& w);

/// Affine map: x[N,Cin] * w[Cout,Cin]^T + b[Cout].
Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b);

/// Elementwise max(x, slope*x).
Tensor leaky_relu(const Tensor& x, double slope);

/// x[N,C,H,W] + scale * noise[N,1,H,W], noise broadcast over channels.
Tensor noise_inject(const Tensor& x, const Tensor& noise, double scale);

/// Per-sample x / sqrt(mean(x^2) + 1e-8) over the channel axis of x[N,C].
Tensor pixel_norm(const Tensor& x);

namespace ref {

// Plain serial loop-nest implementations, kept as independent oracles for the
// parallel kernels above and for the kernel benchmark. Do not add shared
// helpers between the two families.

Tensor conv2d_dense(const Tensor& x, const Tensor& w, int stride = 1, int pad = 0);
Tensor conv2d_depthwise(const Tensor& x, const Tensor& w, int pad = 1);
Tensor conv2d_pointwise(const Tensor& x, const Tensor& w);
Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b);

}  // namespace ref

}  // namespace wsg
