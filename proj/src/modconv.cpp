// SPDX-License-Identifier: Apache-2.0
#include "wsg/modconv.hpp"

#include <cmath>

#include "wsg/kernels.hpp"

namespace wsg {

const char* to_string(DemodMode m) {
    switch (m) {
        case DemodMode::none: return "none";
        case DemodMode::style: return "style";
        case DemodMode::trainable: return "trainable";
        case DemodMode::fused: return "fused";
    }
    return "?";
}

DemodMode demod_mode_from_string(const std::string& s) {
    if (s == "none") return DemodMode::none;
    if (s == "style") return DemodMode::style;
    if (s == "trainable") return DemodMode::trainable;
    if (s == "fused") return DemodMode::fused;
    throw std::invalid_argument("unknown demod mode '" + s + "'");
}

void DsModConvParams::validate() const {
    const int64_t cin = w_dw.dim(0);
    if (w_dw.rank() != 4 || w_dw.dim(1) != 1 || w_dw.dim(2) != 3 || w_dw.dim(3) != 3) {
        throw std::invalid_argument("DsModConvParams: depthwise weights must be [Cin,1,3,3], got " +
                                    w_dw.shape_str());
    }
    if (w_pw.rank() != 4 || w_pw.dim(1) != cin || w_pw.dim(2) != 1 || w_pw.dim(3) != 1) {
        throw std::invalid_argument("DsModConvParams: pointwise weights " + w_pw.shape_str() +
                                    " must be [Cout," + std::to_string(cin) + ",1,1]");
    }
    const int64_t cout = w_pw.dim(0);
    if (bias.rank() != 1 || bias.dim(0) != cout) {
        throw std::invalid_argument("DsModConvParams: bias must be [Cout], got " +
                                    bias.shape_str());
    }
    if (affine_w.rank() != 2 || affine_w.dim(0) != cin || affine_b.rank() != 1 ||
        affine_b.dim(0) != cin) {
        throw std::invalid_argument("DsModConvParams: style affine must map style_dim -> Cin");
    }
    if (demod_mode == DemodMode::trainable) {
        if (p_demod.rank() != 1 || p_demod.dim(0) != cin) {
            throw std::invalid_argument(
                "DsModConvParams: trainable demodulation requires p_demod [Cin]");
        }
        for (int64_t i = 0; i < cin; ++i) {
            if (!(p_demod[i] > 0.0)) {
                throw std::invalid_argument(
                    "DsModConvParams: p_demod must be strictly positive, entry " +
                    std::to_string(i) + " is " + std::to_string(p_demod[i]));
            }
        }
    } else if (p_demod.numel() > 0) {
        throw std::invalid_argument(
            std::string("DsModConvParams: p_demod present but demod_mode is ") +
            to_string(demod_mode) +
            (demod_mode == DemodMode::fused ? "; fused weights already absorb demodulation" : ""));
    }
    for (const Tensor& s : post_scales) {
        if (s.rank() != 1 || s.dim(0) != cout) {
            throw std::invalid_argument("DsModConvParams: post_scale must be [Cout], got " +
                                        s.shape_str());
        }
    }
}

Tensor modulate(const Tensor& x, const Tensor& s) {
    if (x.rank() != 4 || s.rank() != 2 || s.dim(0) != x.dim(0) || s.dim(1) != x.dim(1)) {
        throw std::invalid_argument("modulate: scales " + s.shape_str() +
                                    " must be [N,Cin] matching input " + x.shape_str());
    }
    const int64_t n = x.dim(0), c = x.dim(1), hw = x.dim(2) * x.dim(3);
    Tensor out(x.shape());
    const double* xd = x.data();
    double* od = out.data();
#pragma omp parallel for collapse(2) schedule(static)
    for (int64_t ni = 0; ni < n; ++ni) {
        for (int64_t ci = 0; ci < c; ++ci) {
            const double sv = s.at(ni, ci);
            const double* xp = xd + (ni * c + ci) * hw;
            double* op = od + (ni * c + ci) * hw;
            for (int64_t p = 0; p < hw; ++p) op[p] = sv * xp[p];
        }
    }
    return out;
}

Tensor compose_dense(const Tensor& w_dw, const Tensor& w_pw) {
    if (w_dw.rank() != 4 || w_pw.rank() != 4 || w_pw.dim(1) != w_dw.dim(0) || w_dw.dim(1) != 1 ||
        w_pw.dim(2) != 1 || w_pw.dim(3) != 1) {
        throw std::invalid_argument("compose_dense: expected w_dw [Cin,1,kh,kw] and w_pw "
                                    "[Cout,Cin,1,1], got " +
                                    w_dw.shape_str() + " and " + w_pw.shape_str());
    }
    const int64_t cin = w_dw.dim(0), cout = w_pw.dim(0);
    const int64_t kh = w_dw.dim(2), kw = w_dw.dim(3);
    Tensor dense({cout, cin, kh, kw});
    for (int64_t j = 0; j < cout; ++j)
        for (int64_t i = 0; i < cin; ++i)
            for (int64_t r = 0; r < kh; ++r)
                for (int64_t s = 0; s < kw; ++s)
                    dense.at(j, i, r, s) = w_pw.at(j, i, 0, 0) * w_dw.at(i, 0, r, s);
    return dense;
}

namespace {

// demod_j = 1/sqrt(sum_{i,k} (scale_i * dense[j,i,k])^2 + eps); shared by the
// style-driven and trainable variants so substituting one scale vector for
// the other is bit-exact.
void demod_row(const Tensor& dense, const double* scale, double* out) {
    const int64_t cout = dense.dim(0), cin = dense.dim(1);
    const int64_t taps = dense.dim(2) * dense.dim(3);
    const double* wd = dense.data();
    for (int64_t j = 0; j < cout; ++j) {
        double acc = 0.0;
        for (int64_t i = 0; i < cin; ++i) {
            const double* wp = wd + (j * cin + i) * taps;
            for (int64_t k = 0; k < taps; ++k) {
                const double t = scale[i] * wp[k];
                acc += t * t;
            }
        }
        out[j] = 1.0 / std::sqrt(acc + kDemodEps);
    }
}

Tensor demod_for_dense(const Tensor& dense, const Tensor& s) {
    const int64_t n = s.dim(0);
    Tensor out({n, dense.dim(0)});
    for (int64_t ni = 0; ni < n; ++ni) demod_row(dense, s.data() + ni * s.dim(1), out.data() + ni * dense.dim(0));
    return out;
}

Tensor apply_demod(const Tensor& x, const Tensor& demod) {
    // demod is [N,Cout] or [Cout]
    const int64_t n = x.dim(0), c = x.dim(1), hw = x.dim(2) * x.dim(3);
    Tensor out(x.shape());
    const double* xd = x.data();
    double* od = out.data();
    const bool per_sample = demod.rank() == 2;
    for (int64_t ni = 0; ni < n; ++ni) {
        for (int64_t ci = 0; ci < c; ++ci) {
            const double dv = per_sample ? demod.at(ni, ci) : demod[ci];
            const double* xp = xd + (ni * c + ci) * hw;
            double* op = od + (ni * c + ci) * hw;
            for (int64_t p = 0; p < hw; ++p) op[p] = dv * xp[p];
        }
    }
    return out;
}

Tensor add_bias(const Tensor& x, const Tensor& bias) {
    const int64_t n = x.dim(0), c = x.dim(1), hw = x.dim(2) * x.dim(3);
    Tensor out(x.shape());
    const double* xd = x.data();
    double* od = out.data();
    for (int64_t ni = 0; ni < n; ++ni) {
        for (int64_t ci = 0; ci < c; ++ci) {
            const double b = bias[ci];
            const double* xp = xd + (ni * c + ci) * hw;
            double* op = od + (ni * c + ci) * hw;
            for (int64_t p = 0; p < hw; ++p) op[p] = xp[p] + b;
        }
    }
    return out;
}

}  // namespace

Tensor compute_demod(const Tensor& w_dw, const Tensor& w_pw, const Tensor& s) {
    if (s.rank() != 2 || s.dim(1) != w_dw.dim(0)) {
        throw std::invalid_argument("compute_demod: styles " + s.shape_str() +
                                    " must be [N,Cin] for w_dw " + w_dw.shape_str());
    }
    return demod_for_dense(compose_dense(w_dw, w_pw), s);
}

Tensor compute_demod_trainable(const Tensor& w_dw, const Tensor& w_pw, const Tensor& p_demod) {
    if (p_demod.rank() != 1 || p_demod.dim(0) != w_dw.dim(0)) {
        throw std::invalid_argument("compute_demod_trainable: p_demod " + p_demod.shape_str() +
                                    " must be [Cin] for w_dw " + w_dw.shape_str());
    }
    const Tensor dense = compose_dense(w_dw, w_pw);
    Tensor out({dense.dim(0)});
    demod_row(dense, p_demod.data(), out.data());
    return out;
}

Tensor ds_modconv_forward(const Tensor& x, const Tensor& style, const DsModConvParams& params,
                          const Tensor& noise, double noise_scale, ArithCounter* counter) {
    params.validate();
    if (x.rank() != 4 || x.dim(1) != params.in_channels()) {
        throw std::invalid_argument("ds_modconv_forward: input " + x.shape_str() +
                                    " does not provide the expected " +
                                    std::to_string(params.in_channels()) + " channels");
    }

    const int64_t n = x.dim(0);
    const int64_t cin = params.in_channels(), cout = params.out_channels();
    const int64_t hw = x.dim(2) * x.dim(3);
    const int64_t style_dim = params.affine_w.dim(1);

    const Tensor s = linear(style, params.affine_w, params.affine_b);
    Tensor y = modulate(x, s);
    y = conv2d_depthwise(y, params.w_dw, 1);
    y = conv2d_pointwise(y, params.w_pw);

    for (const Tensor& scale : params.post_scales) {
        Tensor scaled(y.shape());
        for (int64_t ni = 0; ni < n; ++ni)
            for (int64_t ci = 0; ci < cout; ++ci)
                for (int64_t p = 0; p < hw; ++p)
                    scaled.data()[(ni * cout + ci) * hw + p] =
                        scale[ci] * y.data()[(ni * cout + ci) * hw + p];
        y = std::move(scaled);
        if (counter) counter->muls += static_cast<uint64_t>(n) * cout * hw;
    }

    if (counter) {
        counter->muls += static_cast<uint64_t>(n) * cin * style_dim;  // affine
        counter->adds += static_cast<uint64_t>(n) * cin * style_dim;
        counter->muls += static_cast<uint64_t>(n) * cin * hw;  // modulation
        counter->muls += static_cast<uint64_t>(n) * cin * 9 * hw;  // depthwise
        counter->adds += static_cast<uint64_t>(n) * cin * 9 * hw;
        counter->muls += static_cast<uint64_t>(n) * cout * cin * hw;  // pointwise
        counter->adds += static_cast<uint64_t>(n) * cout * cin * hw;
    }

    switch (params.demod_mode) {
        case DemodMode::style: {
            const Tensor d = compute_demod(params.w_dw, params.w_pw, s);
            y = apply_demod(y, d);
            if (counter) {
                counter->muls += static_cast<uint64_t>(n) * (cout * cin * 9 * 2 + cout * hw);
                counter->adds += static_cast<uint64_t>(n) * cout * cin * 9;
            }
            break;
        }
        case DemodMode::trainable: {
            const Tensor d = compute_demod_trainable(params.w_dw, params.w_pw, params.p_demod);
            y = apply_demod(y, d);
            if (counter) {
                counter->muls += static_cast<uint64_t>(cout) * cin * 9 * 2 +
                                 static_cast<uint64_t>(n) * cout * hw;
                counter->adds += static_cast<uint64_t>(cout) * cin * 9;
            }
            break;
        }
        case DemodMode::none:
        case DemodMode::fused:
            break;
    }

    y = add_bias(y, params.bias);
    if (counter) counter->adds += static_cast<uint64_t>(n) * cout * hw;

    if (noise.numel() > 0) {
        y = noise_inject(y, noise, noise_scale);
        if (counter) {
            counter->muls += static_cast<uint64_t>(n) * cout * hw;
            counter->adds += static_cast<uint64_t>(n) * cout * hw;
        }
    }
    if (params.apply_activation) {
        y = leaky_relu(y, params.activation_slope);
        if (counter) counter->muls += static_cast<uint64_t>(n) * cout * hw;
    }
    return y;
}

Tensor modconv_dense_forward(const Tensor& x, const Tensor& style,
                             const DenseModConvParams& params, const Tensor& noise,
                             double noise_scale) {
    if (params.demod_mode != DemodMode::style && params.demod_mode != DemodMode::none) {
        throw std::invalid_argument(
            "modconv_dense_forward: only style and none demodulation are supported, got " +
            std::string(to_string(params.demod_mode)));
    }
    if (x.rank() != 4 || x.dim(1) != params.w_dense.dim(1)) {
        throw std::invalid_argument("modconv_dense_forward: input " + x.shape_str() +
                                    " does not match kernel " + params.w_dense.shape_str());
    }
    const int pad = static_cast<int>((params.w_dense.dim(2) - 1) / 2);

    const Tensor s = linear(style, params.affine_w, params.affine_b);
    Tensor y = modulate(x, s);
    y = conv2d_dense(y, params.w_dense, 1, pad);
    if (params.demod_mode == DemodMode::style) {
        y = apply_demod(y, demod_for_dense(params.w_dense, s));
    }
    y = add_bias(y, params.bias);
    if (noise.numel() > 0) y = noise_inject(y, noise, noise_scale);
    if (params.apply_activation) y = leaky_relu(y, params.activation_slope);
    return y;
}

}  // namespace wsg
