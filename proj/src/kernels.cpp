// SPDX-License-Identifier: Apache-2.0
#include "wsg/kernels.hpp"

#include <cmath>

namespace wsg {

namespace {

void require(bool ok, const std::string& msg) {
    if (!ok) throw std::invalid_argument(msg);
}

void require_rank(const Tensor& t, size_t rank, const char* who, const char* what) {
    if (t.rank() != rank) {
        throw std::invalid_argument(std::string(who) + ": " + what + " must be rank-" +
                                    std::to_string(rank) + ", got shape " + t.shape_str());
    }
}

}  // namespace

Tensor conv2d_dense(const Tensor& x, const Tensor& w, int stride, int pad) {
    require_rank(x, 4, "conv2d_dense", "input");
    require_rank(w, 4, "conv2d_dense", "kernel");
    const int64_t n = x.dim(0), cin = x.dim(1), h = x.dim(2), wd = x.dim(3);
    const int64_t cout = w.dim(0), kh = w.dim(2), kw = w.dim(3);
    require(w.dim(1) == cin, "conv2d_dense: input channels of x " + x.shape_str() +
                                 " do not match kernel channels of w " + w.shape_str());
    require(kh % 2 == 1 && kw % 2 == 1,
            "conv2d_dense: kernel extents must be odd, got w " + w.shape_str());
    require(pad >= 0, "conv2d_dense: pad must be >= 0");
    require(stride >= 1, "conv2d_dense: stride must be >= 1");
    const int64_t ho = (h + 2 * pad - kh) / stride + 1;
    const int64_t wo = (wd + 2 * pad - kw) / stride + 1;
    require(ho >= 1 && wo >= 1, "conv2d_dense: kernel " + w.shape_str() +
                                    " does not fit input " + x.shape_str() + " with pad " +
                                    std::to_string(pad));

    Tensor out({n, cout, ho, wo});
    const double* xd = x.data();
    const double* wdt = w.data();
    double* od = out.data();

#pragma omp parallel for collapse(2) schedule(static)
    for (int64_t ni = 0; ni < n; ++ni) {
        for (int64_t co = 0; co < cout; ++co) {
            for (int64_t oh = 0; oh < ho; ++oh) {
                for (int64_t ow = 0; ow < wo; ++ow) {
                    double acc = 0.0;
                    const int64_t h0 = oh * stride - pad;
                    const int64_t w0 = ow * stride - pad;
                    for (int64_t ci = 0; ci < cin; ++ci) {
                        const double* xp = xd + ((ni * cin + ci) * h) * wd;
                        const double* wp = wdt + ((co * cin + ci) * kh) * kw;
                        for (int64_t r = 0; r < kh; ++r) {
                            const int64_t ih = h0 + r;
                            if (ih < 0 || ih >= h) continue;
                            for (int64_t s = 0; s < kw; ++s) {
                                const int64_t iw = w0 + s;
                                if (iw < 0 || iw >= wd) continue;
                                acc += wp[r * kw + s] * xp[ih * wd + iw];
                            }
                        }
                    }
                    od[((ni * cout + co) * ho + oh) * wo + ow] = acc;
                }
            }
        }
    }
    return out;
}

Tensor conv2d_depthwise(const Tensor& x, const Tensor& w, int pad) {
    require_rank(x, 4, "conv2d_depthwise", "input");
    require_rank(w, 4, "conv2d_depthwise", "kernel");
    const int64_t n = x.dim(0), c = x.dim(1), h = x.dim(2), wd = x.dim(3);
    const int64_t kh = w.dim(2), kw = w.dim(3);
    require(w.dim(0) == c && w.dim(1) == 1,
            "conv2d_depthwise: channel count of x " + x.shape_str() +
                " does not match kernel " + w.shape_str() + " (expected [C,1,kh,kw])");
    require(kh % 2 == 1 && kw % 2 == 1,
            "conv2d_depthwise: kernel extents must be odd, got " + w.shape_str());
    require(pad == (kh - 1) / 2 && pad == (kw - 1) / 2,
            "conv2d_depthwise: pad " + std::to_string(pad) + " must equal (k-1)/2 for kernel " +
                w.shape_str());

    Tensor out({n, c, h, wd});
    const double* xd = x.data();
    const double* wdt = w.data();
    double* od = out.data();

#pragma omp parallel for collapse(2) schedule(static)
    for (int64_t ni = 0; ni < n; ++ni) {
        for (int64_t ci = 0; ci < c; ++ci) {
            const double* xp = xd + ((ni * c + ci) * h) * wd;
            const double* wp = wdt + (ci * kh) * kw;
            double* op = od + ((ni * c + ci) * h) * wd;
            for (int64_t oh = 0; oh < h; ++oh) {
                for (int64_t ow = 0; ow < wd; ++ow) {
                    double acc = 0.0;
                    for (int64_t r = 0; r < kh; ++r) {
                        const int64_t ih = oh - pad + r;
                        if (ih < 0 || ih >= h) continue;
                        for (int64_t s = 0; s < kw; ++s) {
                            const int64_t iw = ow - pad + s;
                            if (iw < 0 || iw >= wd) continue;
                            acc += wp[r * kw + s] * xp[ih * wd + iw];
                        }
                    }
                    op[oh * wd + ow] = acc;
                }
            }
        }
    }
    return out;
}

Tensor conv2d_pointwise(const Tensor& x, const Tensor& w) {
    require_rank(x, 4, "conv2d_pointwise", "input");
    require_rank(w, 4, "conv2d_pointwise", "kernel");
    const int64_t n = x.dim(0), cin = x.dim(1), h = x.dim(2), wd = x.dim(3);
    const int64_t cout = w.dim(0);
    require(w.dim(1) == cin && w.dim(2) == 1 && w.dim(3) == 1,
            "conv2d_pointwise: kernel " + w.shape_str() + " must be [Cout,Cin,1,1] with Cin of x " +
                x.shape_str());

    Tensor out({n, cout, h, wd});
    const int64_t hw = h * wd;
    const double* xd = x.data();
    const double* wdt = w.data();
    double* od = out.data();

    // For each output channel the pixel loop is innermost; the reduction over
    // input channels still runs in ascending order per output element.
#pragma omp parallel for collapse(2) schedule(static)
    for (int64_t ni = 0; ni < n; ++ni) {
        for (int64_t co = 0; co < cout; ++co) {
            double* op = od + (ni * cout + co) * hw;
            for (int64_t p = 0; p < hw; ++p) op[p] = 0.0;
            for (int64_t ci = 0; ci < cin; ++ci) {
                const double wv = wdt[co * cin + ci];
                const double* xp = xd + (ni * cin + ci) * hw;
                for (int64_t p = 0; p < hw; ++p) op[p] += wv * xp[p];
            }
        }
    }
    return out;
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) {
    require_rank(x, 2, "linear", "input");
    require_rank(w, 2, "linear", "weight");
    const int64_t n = x.dim(0), cin = x.dim(1), cout = w.dim(0);
    require(w.dim(1) == cin, "linear: input " + x.shape_str() + " does not match weight " +
                                 w.shape_str());
    require(b.rank() == 1 && b.dim(0) == cout,
            "linear: bias " + b.shape_str() + " must be [Cout] for weight " + w.shape_str());

    Tensor out({n, cout});
#pragma omp parallel for collapse(2) schedule(static)
    for (int64_t ni = 0; ni < n; ++ni) {
        for (int64_t co = 0; co < cout; ++co) {
            double acc = b[co];
            for (int64_t ci = 0; ci < cin; ++ci) acc += w.at(co, ci) * x.at(ni, ci);
            out.at(ni, co) = acc;
        }
    }
    return out;
}

Tensor leaky_relu(const Tensor& x, double slope) {
    Tensor out(x.shape());
    const double* xd = x.data();
    double* od = out.data();
    const int64_t n = x.numel();
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < n; ++i) od[i] = std::max(xd[i], slope * xd[i]);
    return out;
}

Tensor noise_inject(const Tensor& x, const Tensor& noise, double scale) {
    require_rank(x, 4, "noise_inject", "input");
    require_rank(noise, 4, "noise_inject", "noise");
    const int64_t n = x.dim(0), c = x.dim(1), h = x.dim(2), wd = x.dim(3);
    require(noise.dim(0) == n && noise.dim(1) == 1 && noise.dim(2) == h && noise.dim(3) == wd,
            "noise_inject: noise " + noise.shape_str() + " must be [N,1,H,W] matching input " +
                x.shape_str());

    Tensor out(x.shape());
    const int64_t hw = h * wd;
    const double* xd = x.data();
    const double* nd = noise.data();
    double* od = out.data();
#pragma omp parallel for collapse(2) schedule(static)
    for (int64_t ni = 0; ni < n; ++ni) {
        for (int64_t ci = 0; ci < c; ++ci) {
            const double* xp = xd + (ni * c + ci) * hw;
            const double* np = nd + ni * hw;
            double* op = od + (ni * c + ci) * hw;
            for (int64_t p = 0; p < hw; ++p) op[p] = xp[p] + scale * np[p];
        }
    }
    return out;
}

Tensor pixel_norm(const Tensor& x) {
    require_rank(x, 2, "pixel_norm", "input");
    const int64_t n = x.dim(0), c = x.dim(1);
    constexpr double kEps = 1e-8;
    Tensor out(x.shape());
    for (int64_t ni = 0; ni < n; ++ni) {
        double sq = 0.0;
        for (int64_t ci = 0; ci < c; ++ci) sq += x.at(ni, ci) * x.at(ni, ci);
        const double inv = 1.0 / std::sqrt(sq / static_cast<double>(c) + kEps);
        for (int64_t ci = 0; ci < c; ++ci) out.at(ni, ci) = x.at(ni, ci) * inv;
    }
    return out;
}

}  // namespace wsg
