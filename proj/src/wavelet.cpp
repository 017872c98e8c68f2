// SPDX-License-Identifier: Apache-2.0
#include "wsg/wavelet.hpp"

namespace wsg {

namespace {

void check_coeff_shape(const WaveletImage& w, const char* who) {
    if (w.coeffs.rank() != 4) {
        throw std::invalid_argument(std::string(who) + ": coefficients must be rank-4, got " +
                                    w.coeffs.shape_str());
    }
    if (w.coeffs.dim(1) % 4 != 0) {
        throw std::invalid_argument(std::string(who) + ": channel count of " +
                                    w.coeffs.shape_str() + " is not divisible by 4");
    }
}

}  // namespace

WaveletImage dwt2(const Tensor& img) {
    if (img.rank() != 4) {
        throw std::invalid_argument("dwt2: image must be rank-4 [N,C,H,W], got " +
                                    img.shape_str());
    }
    const int64_t n = img.dim(0), c = img.dim(1), h = img.dim(2), w = img.dim(3);
    if (h % 2 != 0 || w % 2 != 0) {
        throw std::invalid_argument("dwt2: spatial extents must be even, got " + img.shape_str());
    }
    const int64_t hh = h / 2, hw = w / 2;

    Tensor coeffs({n, 4 * c, hh, hw});
    const double* src = img.data();
    double* dst = coeffs.data();

#pragma omp parallel for collapse(2) schedule(static)
    for (int64_t ni = 0; ni < n; ++ni) {
        for (int64_t ci = 0; ci < c; ++ci) {
            const double* plane = src + ((ni * c + ci) * h) * w;
            double* ll = dst + ((ni * 4 * c + 4 * ci + 0) * hh) * hw;
            double* hl = dst + ((ni * 4 * c + 4 * ci + 1) * hh) * hw;
            double* lh = dst + ((ni * 4 * c + 4 * ci + 2) * hh) * hw;
            double* hhp = dst + ((ni * 4 * c + 4 * ci + 3) * hh) * hw;
            for (int64_t i = 0; i < hh; ++i) {
                for (int64_t j = 0; j < hw; ++j) {
                    const double a = plane[(2 * i) * w + 2 * j];
                    const double b = plane[(2 * i) * w + 2 * j + 1];
                    const double cc = plane[(2 * i + 1) * w + 2 * j];
                    const double d = plane[(2 * i + 1) * w + 2 * j + 1];
                    const int64_t p = i * hw + j;
                    ll[p] = (a + b + cc + d) * 0.25;
                    hl[p] = (a - b + cc - d) * 0.25;
                    lh[p] = (a + b - cc - d) * 0.25;
                    hhp[p] = (a - b - cc + d) * 0.25;
                }
            }
        }
    }
    return WaveletImage{std::move(coeffs)};
}

Tensor idwt2(const WaveletImage& w) {
    check_coeff_shape(w, "idwt2");
    const int64_t n = w.batch(), c = w.source_channels();
    const int64_t hh = w.half_height(), hw = w.half_width();
    const int64_t oh = 2 * hh, ow = 2 * hw;

    // Synthesis taps of the four output positions over [LL,HL,LH,HH].
    static constexpr double kTap[4][4] = {
        {1.0, 1.0, 1.0, 1.0},
        {1.0, -1.0, 1.0, -1.0},
        {1.0, 1.0, -1.0, -1.0},
        {1.0, -1.0, -1.0, 1.0},
    };

    Tensor out({n, c, oh, ow});
    const double* src = w.coeffs.data();
    double* dst = out.data();

#pragma omp parallel for collapse(2) schedule(static)
    for (int64_t ni = 0; ni < n; ++ni) {
        for (int64_t ci = 0; ci < c; ++ci) {
            const double* band[4];
            for (int s = 0; s < 4; ++s)
                band[s] = src + ((ni * 4 * c + 4 * ci + s) * hh) * hw;
            double* plane = dst + ((ni * c + ci) * oh) * ow;
            for (int64_t i = 0; i < hh; ++i) {
                for (int64_t j = 0; j < hw; ++j) {
                    const int64_t p = i * hw + j;
                    for (int pos = 0; pos < 4; ++pos) {
                        double acc = kTap[pos][0] * band[0][p];
                        for (int s = 1; s < 4; ++s) acc += kTap[pos][s] * band[s][p];
                        const int64_t oi = 2 * i + pos / 2;
                        const int64_t oj = 2 * j + pos % 2;
                        plane[oi * ow + oj] = acc;
                    }
                }
            }
        }
    }
    return out;
}

Tensor idwt2_addonly(const WaveletImage& w) {
    check_coeff_shape(w, "idwt2_addonly");
    const int64_t n = w.batch(), c = w.source_channels();
    const int64_t hh = w.half_height(), hw = w.half_width();

    Tensor out({n, c, 2 * hh, 2 * hw});
    const double* src = w.coeffs.data();
    double* dst = out.data();

#pragma omp parallel for collapse(2) schedule(static)
    for (int64_t ni = 0; ni < n; ++ni) {
        for (int64_t ci = 0; ci < c; ++ci) {
            const double* ll = src + ((ni * 4 * c + 4 * ci + 0) * hh) * hw;
            const double* hl = src + ((ni * 4 * c + 4 * ci + 1) * hh) * hw;
            const double* lh = src + ((ni * 4 * c + 4 * ci + 2) * hh) * hw;
            const double* hhp = src + ((ni * 4 * c + 4 * ci + 3) * hh) * hw;
            double* plane = dst + ((ni * c + ci) * 2 * hh) * 2 * hw;
            idwt2_addonly_plane(ll, hl, lh, hhp, plane, hh, hw);
        }
    }
    return out;
}

WaveletPyramid build_pyramid(const Tensor& img, int levels) {
    if (img.rank() != 4) {
        throw std::invalid_argument("build_pyramid: image must be rank-4, got " + img.shape_str());
    }
    const int64_t h = img.dim(2), w = img.dim(3);
    if (levels < 1) throw std::invalid_argument("build_pyramid: levels must be >= 1");
    const int64_t shrink = int64_t{1} << (levels - 1);
    if (h % shrink != 0 || w % shrink != 0 || h / shrink < 2 || w / shrink < 2) {
        throw std::invalid_argument("build_pyramid: " + std::to_string(levels) +
                                    " levels exceed log2 of the spatial extents of " +
                                    img.shape_str());
    }

    std::vector<Tensor> pixels(static_cast<size_t>(levels));
    std::vector<WaveletImage> wavelets(static_cast<size_t>(levels));
    pixels[static_cast<size_t>(levels - 1)] = img;
    for (int k = levels - 1; k >= 0; --k) {
        const Tensor& px = pixels[static_cast<size_t>(k)];
        WaveletImage wi = dwt2(px);
        if (k > 0) {
            // LL chain: the next-coarser level is this level's LL subband.
            const int64_t n = wi.batch(), c = wi.source_channels();
            const int64_t sh = wi.half_height(), sw = wi.half_width();
            Tensor ll({n, c, sh, sw});
            for (int64_t ni = 0; ni < n; ++ni)
                for (int64_t ci = 0; ci < c; ++ci)
                    for (int64_t i = 0; i < sh; ++i)
                        for (int64_t j = 0; j < sw; ++j)
                            ll.at(ni, ci, i, j) = wi.coeffs.at(ni, 4 * ci, i, j);
            pixels[static_cast<size_t>(k - 1)] = std::move(ll);
        }
        wavelets[static_cast<size_t>(k)] = std::move(wi);
    }

    WaveletPyramid pyr;
    pyr.levels.reserve(static_cast<size_t>(levels));
    for (int k = 0; k < levels; ++k) {
        pyr.levels.push_back(PyramidLevel{std::move(wavelets[static_cast<size_t>(k)]),
                                          std::move(pixels[static_cast<size_t>(k)])});
    }
    return pyr;
}

}  // namespace wsg
