// SPDX-License-Identifier: Apache-2.0

// Serial reference kernels. Deliberately written as the obvious loop nests,
// independent of the parallel implementations in kernels.cpp; the test suite
// holds the two families bit-identical.

#include "wsg/kernels.hpp"

namespace wsg::ref {

Tensor conv2d_dense(const Tensor& x, const Tensor& w, int stride, int pad) {
    const int64_t n = x.dim(0), cin = x.dim(1), h = x.dim(2), wd = x.dim(3);
    const int64_t cout = w.dim(0), kh = w.dim(2), kw = w.dim(3);
    const int64_t ho = (h + 2 * pad - kh) / stride + 1;
    const int64_t wo = (wd + 2 * pad - kw) / stride + 1;

    Tensor out({n, cout, ho, wo});
    for (int64_t ni = 0; ni < n; ++ni)
        for (int64_t co = 0; co < cout; ++co)
            for (int64_t oh = 0; oh < ho; ++oh)
                for (int64_t ow = 0; ow < wo; ++ow) {
                    double acc = 0.0;
                    for (int64_t ci = 0; ci < cin; ++ci)
                        for (int64_t r = 0; r < kh; ++r)
                            for (int64_t s = 0; s < kw; ++s) {
                                const int64_t ih = oh * stride - pad + r;
                                const int64_t iw = ow * stride - pad + s;
                                if (ih < 0 || ih >= h || iw < 0 || iw >= wd) continue;
                                acc += w.at(co, ci, r, s) * x.at(ni, ci, ih, iw);
                            }
                    out.at(ni, co, oh, ow) = acc;
                }
    return out;
}

Tensor conv2d_depthwise(const Tensor& x, const Tensor& w, int pad) {
    const int64_t n = x.dim(0), c = x.dim(1), h = x.dim(2), wd = x.dim(3);
    const int64_t kh = w.dim(2), kw = w.dim(3);

    Tensor out({n, c, h, wd});
    for (int64_t ni = 0; ni < n; ++ni)
        for (int64_t ci = 0; ci < c; ++ci)
            for (int64_t oh = 0; oh < h; ++oh)
                for (int64_t ow = 0; ow < wd; ++ow) {
                    double acc = 0.0;
                    for (int64_t r = 0; r < kh; ++r)
                        for (int64_t s = 0; s < kw; ++s) {
                            const int64_t ih = oh - pad + r;
                            const int64_t iw = ow - pad + s;
                            if (ih < 0 || ih >= h || iw < 0 || iw >= wd) continue;
                            acc += w.at(ci, 0, r, s) * x.at(ni, ci, ih, iw);
                        }
                    out.at(ni, ci, oh, ow) = acc;
                }
    return out;
}

Tensor conv2d_pointwise(const Tensor& x, const Tensor& w) {
    const int64_t n = x.dim(0), cin = x.dim(1), h = x.dim(2), wd = x.dim(3);
    const int64_t cout = w.dim(0);

    Tensor out({n, cout, h, wd});
    for (int64_t ni = 0; ni < n; ++ni)
        for (int64_t co = 0; co < cout; ++co)
            for (int64_t oh = 0; oh < h; ++oh)
                for (int64_t ow = 0; ow < wd; ++ow) {
                    double acc = 0.0;
                    for (int64_t ci = 0; ci < cin; ++ci)
                        acc += w.at(co, ci, 0, 0) * x.at(ni, ci, oh, ow);
                    out.at(ni, co, oh, ow) = acc;
                }
    return out;
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) {
    const int64_t n = x.dim(0), cin = x.dim(1), cout = w.dim(0);
    Tensor out({n, cout});
    for (int64_t ni = 0; ni < n; ++ni)
        for (int64_t co = 0; co < cout; ++co) {
            double acc = b[co];
            for (int64_t ci = 0; ci < cin; ++ci) acc += w.at(co, ci) * x.at(ni, ci);
            out.at(ni, co) = acc;
        }
    return out;
}

}  // namespace wsg::ref
