// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "wsg/modconv.hpp"
#include "wsg/tensor.hpp"
#include "wsg/wavelet.hpp"

namespace wsg {

enum class GeneratorVariant {
    mobile,          ///< separable modulated convs + IDWT upscale, executable
    dense_baseline,  ///< StyleGAN2-like dense graph, structural (counting/oracles)
};

const char* to_string(GeneratorVariant v);
GeneratorVariant variant_from_string(const std::string& s);

/// Structural description of a generator. `channels` maps trunk feature
/// resolution to width: the mobile trunk runs at base..target/2 (each block's
/// prediction head reconstructs to twice its feature resolution), the dense
/// baseline trunk at base..target.
struct GeneratorConfig {
    GeneratorVariant variant = GeneratorVariant::mobile;
    int64_t style_dim = 512;
    int mapping_layers = 8;
    int64_t base_resolution = 4;
    int64_t target_resolution = 0;
    std::map<int64_t, int64_t> channels;

    void validate() const;
    bool operator==(const GeneratorConfig&) const = default;

    /// Number of synthesis blocks, log2(target/base).
    int num_blocks() const;
    /// Feature resolution of block k (0-based): base * 2^k.
    int64_t feature_resolution(int block) const { return base_resolution << block; }
    int64_t width_at(int64_t resolution) const;

    /// StyleGAN2 config-f width table clipped to the variant's trunk range.
    static GeneratorConfig make_default(GeneratorVariant variant, int64_t target_resolution);

    std::string to_json() const;
    static GeneratorConfig from_json(const std::string& text);
};

/// One named parameter of the graph, in container order.
struct ParamSpec {
    std::string name;
    std::vector<int64_t> shape;
    enum class Init { normal_fan_in, normal_unit, zero, one } init;
};

/// Canonical parameter list for a config; order defines both the container
/// blob layout and the RNG draw order of init_random.
std::vector<ParamSpec> enumerate_parameters(const GeneratorConfig& config, DemodMode demod_mode);

/// Serialized generator: a manifest of named entries plus one contiguous
/// blob of doubles. File format (all integers little-endian):
///
///   bytes 0..3   magic "MSGW"
///   bytes 4..7   u32 format version (currently 1)
///   bytes 8..15  u64 manifest length in bytes
///   manifest     UTF-8 JSON: format_version, config, demod_mode,
///                params: [{name, shape, byte_offset}], blob_bytes
///   blob         raw IEEE-754 doubles, little-endian, in manifest order
struct WeightContainer {
    struct Entry {
        std::string name;
        std::vector<int64_t> shape;
        int64_t byte_offset = 0;  // into the blob

        int64_t numel() const;
    };

    GeneratorConfig config;
    DemodMode demod_mode = DemodMode::trainable;
    std::vector<Entry> entries;
    std::vector<double> blob;

    bool has(const std::string& name) const;
    const Entry& find(const std::string& name) const;
    Tensor get(const std::string& name) const;
    void set(const std::string& name, const Tensor& value);

    /// Appends a new entry at the end of the blob.
    void append(const std::string& name, const Tensor& value);
    /// Removes entries whose name ends with `suffix` and repacks the blob.
    void remove_matching(const std::string& suffix);
    /// Removes the named entries and repacks the blob.
    void remove_entries(const std::vector<std::string>& names);

    int64_t total_scalars() const { return static_cast<int64_t>(blob.size()); }
};

WeightContainer init_random(const GeneratorConfig& config, uint64_t seed,
                            DemodMode demod_mode = DemodMode::trainable);
void save_weights(const WeightContainer& container, const std::string& path);
WeightContainer load_weights(const std::string& path);

/// One executable synthesis block. The first block has no upscale stage and
/// runs its single trunk conv at the base resolution; later blocks regroup
/// channels 4:1 through the IDWT, then apply the post-IDWT conv and the main
/// conv. Every block ends in a 12-channel wavelet prediction head.
struct SynthesisBlock {
    bool has_upscale = false;
    DsModConvParams conv_post;  // unused when !has_upscale
    double conv_post_noise_scale = 0.0;
    DsModConvParams conv_main;
    double conv_main_noise_scale = 0.0;
    DsModConvParams head;
    int64_t in_channels = 0;
    int64_t out_channels = 0;
    int64_t feature_resolution = 0;
};

/// Where synthesis consumes a noise tensor.
struct NoiseSite {
    std::string name;      // e.g. "b2.conv_post"
    int64_t resolution;    // spatial extent of the [N,1,res,res] tensor
};

enum class SynthesisMode { final_image, pyramid };

/// A loaded, immutable generator. Forward calls allocate their own
/// activations, so one instance can serve concurrent callers.
class Generator {
public:
    static Generator from_container(const WeightContainer& container);

    const GeneratorConfig& config() const { return config_; }
    DemodMode demod_mode() const { return demod_mode_; }
    const std::vector<SynthesisBlock>& blocks() const { return blocks_; }
    const std::vector<NoiseSite>& noise_sites() const { return noise_sites_; }

    /// pixel_norm then mapping_layers x (linear + leaky-relu 0.2).
    Tensor mapping_forward(const Tensor& z) const;

    /// Runs one block: returns the block's output features (at the block's
    /// feature resolution) and its 12-channel wavelet prediction.
    std::pair<Tensor, WaveletImage> block_forward(int block_index, const Tensor& x,
                                                  const Tensor& style,
                                                  const std::vector<Tensor>& block_noises,
                                                  ArithCounter* counter = nullptr) const;

    /// Final image [N,3,R,R]: inverse transform of the last head only.
    Tensor synthesis_final(const Tensor& style, const std::vector<Tensor>& noises,
                           ArithCounter* counter = nullptr) const;

    /// All heads' wavelet predictions with their reconstructions, coarse to
    /// fine; the finest reconstruction equals synthesis_final bit for bit.
    WaveletPyramid synthesis_pyramid(const Tensor& style, const std::vector<Tensor>& noises,
                                     ArithCounter* counter = nullptr) const;

private:
    void run_blocks(const Tensor& style, const std::vector<Tensor>& noises,
                    WaveletPyramid* pyramid_out, Tensor* final_out, ArithCounter* counter) const;
    void check_noises(const std::vector<Tensor>& noises, int64_t batch) const;

    GeneratorConfig config_;
    DemodMode demod_mode_ = DemodMode::trainable;
    std::vector<std::pair<Tensor, Tensor>> mapping_;  // (weight, bias) per layer
    Tensor const_input_;                              // [C0, base, base]
    std::vector<SynthesisBlock> blocks_;
    std::vector<NoiseSite> noise_sites_;
};

/// Draws z and one noise tensor per site from the seed (z first, then the
/// sites coarse to fine), runs mapping + synthesis, clamps to [-1,1].
Tensor generate(const Generator& g, uint64_t seed);

/// Same drawing scheme, exposing the raw synthesis outputs.
struct GenerateSample {
    Tensor z;
    Tensor style;
    std::vector<Tensor> noises;
};
GenerateSample draw_sample(const Generator& g, uint64_t seed);

Tensor clamp_image(const Tensor& img);

}  // namespace wsg
