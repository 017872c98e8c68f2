// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "wsg/tensor.hpp"

namespace wsg {

// Single-level 2-D Haar transform pair.
//
// Analysis scaling is 1/4 (not the orthonormal 1/sqrt(2) convention): with
// pixels A,B,C,D in each 2x2 block,
//
//   LL = (A+B+C+D)/4   HL = (A-B+C-D)/4   LH = (A+B-C-D)/4   HH = (A-B-C+D)/4
//
// so that synthesis is the multiplication-free sign pattern
//
//   A = LL+HL+LH+HH    B = LL-HL+LH-HH    C = LL+HL-LH-HH    D = LL-HL-LH+HH
//
// and the pair is an exact inverse. This choice makes absolute coefficient
// magnitudes comparable to pixel magnitudes and therefore sets the scale of
// the wavelet-domain distillation loss terms; anyone swapping in an
// orthonormal convention will see those loss values change by powers of two.

/// Wavelet-domain image: coeffs[N,4C,H/2,W/2], subbands [LL,HL,LH,HH]
/// grouped per source channel (channel 4c+s holds subband s of source c).
struct WaveletImage {
    Tensor coeffs;

    int64_t batch() const { return coeffs.dim(0); }
    int64_t source_channels() const { return coeffs.dim(1) / 4; }
    int64_t half_height() const { return coeffs.dim(2); }
    int64_t half_width() const { return coeffs.dim(3); }
};

/// One level of an image pyramid: wavelet prediction plus its pixel-domain
/// reconstruction (reconstruction is twice the coefficient resolution).
struct PyramidLevel {
    WaveletImage wavelet;
    Tensor pixels;
};

/// Pyramid ordered coarse to fine; reconstruction sizes double per level.
struct WaveletPyramid {
    std::vector<PyramidLevel> levels;
};

/// Forward single-level Haar transform of img[N,C,H,W]; H and W must be even.
WaveletImage dwt2(const Tensor& img);

/// Inverse transform via the generic signed linear combination (multiplies by
/// the +-1 synthesis taps).
Tensor idwt2(const WaveletImage& w);

/// Inverse transform using only additions/subtractions on the coefficient
/// path; bit-identical to idwt2.
Tensor idwt2_addonly(const WaveletImage& w);

/// Downsamples img through repeated LL extraction; level k has spatial size
/// size/2^(levels-1-k), the finest level is img itself. Each level stores the
/// pixel image together with its own single-level DWT.
WaveletPyramid build_pyramid(const Tensor& img, int levels);

/// Add-only synthesis of one 2x2 block, templated so tests can instantiate it
/// with a counting scalar and prove the multiplication count is zero.
template <typename T>
inline void haar_synthesize_block(const T& ll, const T& hl, const T& lh, const T& hh,  //
                                  T& a, T& b, T& c, T& d) {
    a = ll + hl + lh + hh;
    b = ll - hl + lh - hh;
    c = ll + hl - lh - hh;
    d = ll - hl - lh + hh;
}

/// idwt2_addonly over raw planes, templated for instrumentation. Subband
/// pointers address [hh x hw] planes; out addresses a [2hh x 2hw] plane.
template <typename T>
void idwt2_addonly_plane(const T* ll, const T* hl, const T* lh, const T* hh,  //
                         T* out, int64_t half_h, int64_t half_w) {
    const int64_t out_w = 2 * half_w;
    for (int64_t i = 0; i < half_h; ++i) {
        for (int64_t j = 0; j < half_w; ++j) {
            const int64_t p = i * half_w + j;
            T a, b, c, d;
            haar_synthesize_block(ll[p], hl[p], lh[p], hh[p], a, b, c, d);
            out[(2 * i) * out_w + 2 * j] = a;
            out[(2 * i) * out_w + 2 * j + 1] = b;
            out[(2 * i + 1) * out_w + 2 * j] = c;
            out[(2 * i + 1) * out_w + 2 * j + 1] = d;
        }
    }
}

}  // namespace wsg
