// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>
#include <string>
#include <vector>

#include "wsg/graph.hpp"
#include "wsg/wavelet.hpp"

namespace wsg {

// Forward-only implementations of the distillation objectives. Reductions
// are means rather than sums so loss magnitudes do not depend on resolution.

/// One paired training sample: the style vector, the shared noise tensors
/// and the teacher's image rendered at every student head resolution.
struct Triplet {
    Tensor style;
    std::vector<Tensor> noise;
    std::vector<Tensor> teacher_pyramid;  // pixel-domain, coarse to fine
};

/// Pluggable image -> named feature stack used by the perceptual loss. The
/// layer list must be fixed and extraction deterministic.
class FeatureExtractor {
public:
    struct Feature {
        std::string layer;
        Tensor value;
    };

    virtual ~FeatureExtractor() = default;
    virtual std::vector<Feature> extract(const Tensor& img) const = 0;
};

/// Single layer: the image itself.
class IdentityExtractor final : public FeatureExtractor {
public:
    std::vector<Feature> extract(const Tensor& img) const override;
};

/// One layer per pooling factor; each layer is the image mean-pooled by that
/// (power-of-two) factor. A stand-in feature stack with the right shape of
/// interface where no pretrained network is available.
class AvgPoolExtractor final : public FeatureExtractor {
public:
    explicit AvgPoolExtractor(std::vector<int64_t> factors = {1, 2, 4, 8});
    std::vector<Feature> extract(const Tensor& img) const override;

private:
    std::vector<int64_t> factors_;
};

struct LossWeights {
    double lambda_pix = 1.0;
    double lambda_perc = 1.0;
    double lambda_gan = 0.1;
    double gamma = 0.0;  // R1 coefficient

    void validate() const;
};

struct PixelLossBreakdown {
    double wavelet_term = 0.0;
    double pixel_term = 0.0;
};

/// sum_i ( mean|F_i - dwt2(T_i)| + mean|idwt2(F_i) - T_i| ) over pyramid
/// levels; F_i are the student's wavelet predictions, T_i the teacher's
/// pixel-domain images at matching sizes.
double pixel_distillation_loss(const WaveletPyramid& student,
                               const std::vector<Tensor>& teacher_pyramid,
                               PixelLossBreakdown* breakdown = nullptr);

/// Resizes a square image to size x size: mean-pool for integer shrink
/// factors, pixel replication for integer growth factors.
Tensor resize_to(const Tensor& img, int64_t size);

/// sum_l rms(phi_l(s) - phi_l(t)) after resizing both images to 256x256.
double perceptual_loss(const FeatureExtractor& extractor, const Tensor& img_s,
                       const Tensor& img_t);

/// Which per-score function the generator loss applies. The printed form is
/// f(t) = -log(1+exp(-t)) evaluated at -score (unbounded below); the
/// softplus variant is the conventional non-saturating log(1+exp(-score)).
/// They satisfy variant(s) == -printed_f(s) pointwise.
enum class GanLossForm { log_sigmoid, softplus };

double generator_gan_loss(const Tensor& scores_fake,
                          GanLossForm form = GanLossForm::log_sigmoid);

/// mean f(-real) + mean f(fake) + (gamma/2) * mean(r1_grad_sqnorms), with the
/// printed f. The R1 gradient square norms are an input; this module stays
/// autodiff-free.
double discriminator_gan_loss(const Tensor& scores_real, const Tensor& scores_fake,
                              const Tensor& r1_grad_sqnorms, double gamma);

struct ObjectiveParts {
    double pixel = 0.0;
    double perceptual = 0.0;
    double generator_gan = 0.0;
    double discriminator = 0.0;
};

struct Objective {
    double student = 0.0;
    double discriminator = 0.0;
};

/// student = l1*pixel + l2*perceptual + l3*generator_gan; discriminator
/// passes through.
Objective full_objective(const ObjectiveParts& parts, const LossWeights& weights);

/// Runs the teacher end to end and builds the pixel pyramid matched to its
/// head resolutions.
Triplet make_triplet(const Generator& teacher, const Tensor& z,
                     const std::vector<Tensor>& noises);

}  // namespace wsg
