// SPDX-License-Identifier: Apache-2.0
#include "wsg/distill.hpp"

#include <cmath>

namespace wsg {

namespace {

double mean_abs_diff(const Tensor& a, const Tensor& b) {
    double acc = 0.0;
    for (int64_t i = 0; i < a.numel(); ++i) acc += std::abs(a[i] - b[i]);
    return acc / static_cast<double>(a.numel());
}

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

/// f(t) = -log(1+exp(-t))
double f_log_sigmoid(double t) { return -softplus(-t); }

void check_scores(const Tensor& s, const char* who) {
    if (s.rank() != 1 || s.numel() < 1) {
        throw std::invalid_argument(std::string(who) + ": scores must be a non-empty [N] tensor, got " +
                                    s.shape_str());
    }
}

}  // namespace

std::vector<FeatureExtractor::Feature> IdentityExtractor::extract(const Tensor& img) const {
    return {{"identity", img}};
}

AvgPoolExtractor::AvgPoolExtractor(std::vector<int64_t> factors) : factors_(std::move(factors)) {
    if (factors_.empty()) throw std::invalid_argument("AvgPoolExtractor: no factors");
}

std::vector<FeatureExtractor::Feature> AvgPoolExtractor::extract(const Tensor& img) const {
    std::vector<Feature> out;
    for (int64_t f : factors_) {
        out.push_back({"pool" + std::to_string(f), resize_to(img, img.dim(2) / f)});
    }
    return out;
}

void LossWeights::validate() const {
    if (lambda_pix < 0 || lambda_perc < 0 || lambda_gan < 0 || gamma < 0) {
        throw std::invalid_argument("LossWeights: weights must be non-negative");
    }
}

double pixel_distillation_loss(const WaveletPyramid& student,
                               const std::vector<Tensor>& teacher_pyramid,
                               PixelLossBreakdown* breakdown) {
    if (student.levels.size() != teacher_pyramid.size()) {
        throw std::invalid_argument(
            "pixel_distillation_loss: student has " + std::to_string(student.levels.size()) +
            " levels, teacher pyramid has " + std::to_string(teacher_pyramid.size()));
    }
    double wavelet_term = 0.0, pixel_term = 0.0;
    for (size_t i = 0; i < student.levels.size(); ++i) {
        const WaveletImage& f = student.levels[i].wavelet;
        const Tensor& t = teacher_pyramid[i];
        const WaveletImage t_w = dwt2(t);
        if (!f.coeffs.same_shape(t_w.coeffs)) {
            throw std::invalid_argument("pixel_distillation_loss: level " + std::to_string(i) +
                                        " shape mismatch, student " + f.coeffs.shape_str() +
                                        " vs teacher DWT " + t_w.coeffs.shape_str());
        }
        wavelet_term += mean_abs_diff(f.coeffs, t_w.coeffs);
        pixel_term += mean_abs_diff(idwt2(f), t);
    }
    if (breakdown) {
        breakdown->wavelet_term = wavelet_term;
        breakdown->pixel_term = pixel_term;
    }
    return wavelet_term + pixel_term;
}

Tensor resize_to(const Tensor& img, int64_t size) {
    if (img.rank() != 4 || img.dim(2) != img.dim(3)) {
        throw std::invalid_argument("resize_to: expected a square [N,C,H,H] image, got " +
                                    img.shape_str());
    }
    const int64_t n = img.dim(0), c = img.dim(1), h = img.dim(2);
    if (size < 1) throw std::invalid_argument("resize_to: size must be >= 1");
    if (h == size) return img;

    Tensor out({n, c, size, size});
    if (h % size == 0) {
        const int64_t f = h / size;
        const double inv = 1.0 / static_cast<double>(f * f);
        for (int64_t ni = 0; ni < n; ++ni)
            for (int64_t ci = 0; ci < c; ++ci)
                for (int64_t i = 0; i < size; ++i)
                    for (int64_t j = 0; j < size; ++j) {
                        double acc = 0.0;
                        for (int64_t r = 0; r < f; ++r)
                            for (int64_t s = 0; s < f; ++s)
                                acc += img.at(ni, ci, i * f + r, j * f + s);
                        out.at(ni, ci, i, j) = acc * inv;
                    }
    } else if (size % h == 0) {
        const int64_t f = size / h;
        for (int64_t ni = 0; ni < n; ++ni)
            for (int64_t ci = 0; ci < c; ++ci)
                for (int64_t i = 0; i < size; ++i)
                    for (int64_t j = 0; j < size; ++j)
                        out.at(ni, ci, i, j) = img.at(ni, ci, i / f, j / f);
    } else {
        throw std::invalid_argument("resize_to: " + std::to_string(h) + " -> " +
                                    std::to_string(size) +
                                    " is not an integer shrink or growth factor");
    }
    return out;
}

double perceptual_loss(const FeatureExtractor& extractor, const Tensor& img_s,
                       const Tensor& img_t) {
    const Tensor s256 = resize_to(img_s, 256);
    const Tensor t256 = resize_to(img_t, 256);
    const auto fs = extractor.extract(s256);
    const auto ft = extractor.extract(t256);
    if (fs.size() != ft.size()) {
        throw std::invalid_argument("perceptual_loss: extractor returned " +
                                    std::to_string(fs.size()) + " layers for one image and " +
                                    std::to_string(ft.size()) + " for the other");
    }
    double total = 0.0;
    for (size_t l = 0; l < fs.size(); ++l) {
        if (fs[l].layer != ft[l].layer || !fs[l].value.same_shape(ft[l].value)) {
            throw std::invalid_argument("perceptual_loss: extractor layer lists differ at index " +
                                        std::to_string(l) + " ('" + fs[l].layer + "' vs '" +
                                        ft[l].layer + "')");
        }
        double acc = 0.0;
        const Tensor& a = fs[l].value;
        const Tensor& b = ft[l].value;
        for (int64_t i = 0; i < a.numel(); ++i) {
            const double d = a[i] - b[i];
            acc += d * d;
        }
        total += std::sqrt(acc / static_cast<double>(a.numel()));
    }
    return total;
}

double generator_gan_loss(const Tensor& scores_fake, GanLossForm form) {
    check_scores(scores_fake, "generator_gan_loss");
    double acc = 0.0;
    for (int64_t i = 0; i < scores_fake.numel(); ++i) {
        acc += form == GanLossForm::log_sigmoid ? f_log_sigmoid(-scores_fake[i])
                                                : softplus(-scores_fake[i]);
    }
    return acc / static_cast<double>(scores_fake.numel());
}

double discriminator_gan_loss(const Tensor& scores_real, const Tensor& scores_fake,
                              const Tensor& r1_grad_sqnorms, double gamma) {
    check_scores(scores_real, "discriminator_gan_loss");
    check_scores(scores_fake, "discriminator_gan_loss");
    check_scores(r1_grad_sqnorms, "discriminator_gan_loss");
    double real = 0.0, fake = 0.0, r1 = 0.0;
    for (int64_t i = 0; i < scores_real.numel(); ++i) real += f_log_sigmoid(-scores_real[i]);
    for (int64_t i = 0; i < scores_fake.numel(); ++i) fake += f_log_sigmoid(scores_fake[i]);
    for (int64_t i = 0; i < r1_grad_sqnorms.numel(); ++i) r1 += r1_grad_sqnorms[i];
    real /= static_cast<double>(scores_real.numel());
    fake /= static_cast<double>(scores_fake.numel());
    r1 /= static_cast<double>(r1_grad_sqnorms.numel());
    return real + fake + 0.5 * gamma * r1;
}

Objective full_objective(const ObjectiveParts& parts, const LossWeights& weights) {
    weights.validate();
    Objective o;
    o.student = weights.lambda_pix * parts.pixel + weights.lambda_perc * parts.perceptual +
                weights.lambda_gan * parts.generator_gan;
    o.discriminator = parts.discriminator;
    return o;
}

Triplet make_triplet(const Generator& teacher, const Tensor& z,
                     const std::vector<Tensor>& noises) {
    Triplet t;
    t.style = teacher.mapping_forward(z);
    t.noise = noises;
    const Tensor img = teacher.synthesis_final(t.style, noises);
    WaveletPyramid pyr = build_pyramid(img, teacher.config().num_blocks());
    for (auto& level : pyr.levels) t.teacher_pyramid.push_back(std::move(level.pixels));
    return t;
}

}  // namespace wsg
