// SPDX-License-Identifier: Apache-2.0
#include "wsg/graph.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "wsg/kernels.hpp"
#include "wsg/rng.hpp"

namespace wsg {

using ordered_json = nlohmann::ordered_json;

const char* to_string(GeneratorVariant v) {
    return v == GeneratorVariant::mobile ? "mobile" : "dense_baseline";
}

GeneratorVariant variant_from_string(const std::string& s) {
    if (s == "mobile") return GeneratorVariant::mobile;
    if (s == "dense_baseline") return GeneratorVariant::dense_baseline;
    throw std::invalid_argument("unknown generator variant '" + s + "'");
}

namespace {

bool is_pow2(int64_t v) { return v >= 1 && (v & (v - 1)) == 0; }

int64_t ilog2(int64_t v) {
    int64_t r = 0;
    while (v > 1) {
        v >>= 1;
        ++r;
    }
    return r;
}

}  // namespace

void GeneratorConfig::validate() const {
    if (style_dim < 1) throw std::invalid_argument("config: style_dim must be >= 1");
    if (mapping_layers < 1) throw std::invalid_argument("config: mapping_layers must be >= 1");
    if (!is_pow2(base_resolution) || base_resolution < 2) {
        throw std::invalid_argument("config: base_resolution must be a power of two >= 2");
    }
    if (!is_pow2(target_resolution) || target_resolution < 2 * base_resolution) {
        throw std::invalid_argument(
            "config: target_resolution must be a power of two >= 2*base_resolution, got " +
            std::to_string(target_resolution));
    }
    const int64_t trunk_top =
        variant == GeneratorVariant::mobile ? target_resolution / 2 : target_resolution;
    for (int64_t r = base_resolution; r <= trunk_top; r *= 2) {
        auto it = channels.find(r);
        if (it == channels.end()) {
            throw std::invalid_argument("config: missing channel width for resolution " +
                                        std::to_string(r));
        }
        if (it->second < 1) throw std::invalid_argument("config: channel widths must be >= 1");
        if (variant == GeneratorVariant::mobile && it->second % 4 != 0) {
            throw std::invalid_argument("config: mobile widths must be divisible by 4 (IDWT "
                                        "regroups channels), resolution " +
                                        std::to_string(r) + " has " + std::to_string(it->second));
        }
    }
}

int GeneratorConfig::num_blocks() const {
    return static_cast<int>(ilog2(target_resolution / base_resolution));
}

int64_t GeneratorConfig::width_at(int64_t resolution) const {
    auto it = channels.find(resolution);
    if (it == channels.end()) {
        throw std::invalid_argument("config: no channel width for resolution " +
                                    std::to_string(resolution));
    }
    return it->second;
}

GeneratorConfig GeneratorConfig::make_default(GeneratorVariant variant,
                                              int64_t target_resolution) {
    // StyleGAN2 config-f width schedule.
    static const std::map<int64_t, int64_t> kWidths = {
        {4, 512}, {8, 512},   {16, 512},  {32, 512},  {64, 512},
        {128, 256}, {256, 128}, {512, 64}, {1024, 32},
    };
    GeneratorConfig cfg;
    cfg.variant = variant;
    cfg.target_resolution = target_resolution;
    const int64_t trunk_top =
        variant == GeneratorVariant::mobile ? target_resolution / 2 : target_resolution;
    for (int64_t r = cfg.base_resolution; r <= trunk_top; r *= 2) cfg.channels[r] = kWidths.at(r);
    cfg.validate();
    return cfg;
}

namespace {

ordered_json config_to_ojson(const GeneratorConfig& cfg) {
    ordered_json j;
    j["variant"] = to_string(cfg.variant);
    j["style_dim"] = cfg.style_dim;
    j["mapping_layers"] = cfg.mapping_layers;
    j["base_resolution"] = cfg.base_resolution;
    j["target_resolution"] = cfg.target_resolution;
    ordered_json ch = ordered_json::object();
    for (const auto& [res, width] : cfg.channels) ch[std::to_string(res)] = width;
    j["channels"] = ch;
    return j;
}

GeneratorConfig config_from_ojson(const ordered_json& j) {
    GeneratorConfig cfg;
    cfg.variant = variant_from_string(j.at("variant").get<std::string>());
    cfg.style_dim = j.value("style_dim", int64_t{512});
    cfg.mapping_layers = j.value("mapping_layers", 8);
    cfg.base_resolution = j.value("base_resolution", int64_t{4});
    cfg.target_resolution = j.at("target_resolution").get<int64_t>();
    if (j.contains("channels")) {
        for (const auto& [key, val] : j.at("channels").items()) {
            cfg.channels[std::stoll(key)] = val.get<int64_t>();
        }
    } else {
        cfg = GeneratorConfig::make_default(cfg.variant, cfg.target_resolution);
    }
    cfg.validate();
    return cfg;
}

}  // namespace

std::string GeneratorConfig::to_json() const { return config_to_ojson(*this).dump(2); }

GeneratorConfig GeneratorConfig::from_json(const std::string& text) {
    return config_from_ojson(ordered_json::parse(text));
}

// ---------------------------------------------------------------------------
// Parameter enumeration

namespace {

void push_ds_conv(std::vector<ParamSpec>& out, const std::string& prefix, int64_t cin,
                  int64_t cout, int64_t style_dim, bool with_demod_params, bool with_noise) {
    using Init = ParamSpec::Init;
    out.push_back({prefix + ".dw", {cin, 1, 3, 3}, Init::normal_fan_in});
    out.push_back({prefix + ".pw", {cout, cin, 1, 1}, Init::normal_fan_in});
    out.push_back({prefix + ".bias", {cout}, Init::zero});
    out.push_back({prefix + ".affine_w", {cin, style_dim}, Init::normal_fan_in});
    out.push_back({prefix + ".affine_b", {cin}, Init::one});
    if (with_demod_params) out.push_back({prefix + ".p_demod", {cin}, Init::one});
    if (with_noise) out.push_back({prefix + ".noise_scale", {1}, Init::zero});
}

void push_dense_conv(std::vector<ParamSpec>& out, const std::string& prefix, int64_t cin,
                     int64_t cout, int64_t k, int64_t style_dim, bool with_noise) {
    using Init = ParamSpec::Init;
    out.push_back({prefix + ".weight", {cout, cin, k, k}, Init::normal_fan_in});
    out.push_back({prefix + ".bias", {cout}, Init::zero});
    out.push_back({prefix + ".affine_w", {cin, style_dim}, Init::normal_fan_in});
    out.push_back({prefix + ".affine_b", {cin}, Init::one});
    if (with_noise) out.push_back({prefix + ".noise_scale", {1}, Init::zero});
}

}  // namespace

std::vector<ParamSpec> enumerate_parameters(const GeneratorConfig& cfg, DemodMode demod_mode) {
    cfg.validate();
    if (cfg.variant == GeneratorVariant::dense_baseline && demod_mode != DemodMode::style) {
        throw std::invalid_argument(
            "dense_baseline graphs use style demodulation; got demod_mode " +
            std::string(to_string(demod_mode)));
    }
    using Init = ParamSpec::Init;
    std::vector<ParamSpec> out;

    for (int i = 0; i < cfg.mapping_layers; ++i) {
        const std::string p = "mapping." + std::to_string(i);
        out.push_back({p + ".weight", {cfg.style_dim, cfg.style_dim}, Init::normal_fan_in});
        out.push_back({p + ".bias", {cfg.style_dim}, Init::zero});
    }

    const int64_t c0 = cfg.width_at(cfg.base_resolution);
    out.push_back({"const_input", {c0, cfg.base_resolution, cfg.base_resolution},
                   Init::normal_unit});

    const bool trainable = demod_mode == DemodMode::trainable;
    if (cfg.variant == GeneratorVariant::mobile) {
        for (int k = 0; k < cfg.num_blocks(); ++k) {
            const std::string b = "b" + std::to_string(k + 1);
            const int64_t res = cfg.feature_resolution(k);
            const int64_t cout = cfg.width_at(res);
            if (k == 0) {
                push_ds_conv(out, b + ".conv_main", c0, cout, cfg.style_dim, trainable, true);
            } else {
                const int64_t cin_post = cfg.width_at(res / 2) / 4;
                push_ds_conv(out, b + ".conv_post", cin_post, cout, cfg.style_dim, trainable,
                             true);
                push_ds_conv(out, b + ".conv_main", cout, cout, cfg.style_dim, trainable, true);
            }
            push_ds_conv(out, b + ".head", cout, 12, cfg.style_dim, false, false);
        }
    } else {
        const int n_blocks = cfg.num_blocks() + 1;  // trunk runs base..target
        for (int k = 0; k < n_blocks; ++k) {
            const std::string b = "b" + std::to_string(k + 1);
            const int64_t res = cfg.base_resolution << k;
            const int64_t cout = cfg.width_at(res);
            if (k == 0) {
                push_dense_conv(out, b + ".conv", cout, cout, 3, cfg.style_dim, true);
            } else {
                const int64_t cin = cfg.width_at(res / 2);
                push_dense_conv(out, b + ".conv0_up", cin, cout, 3, cfg.style_dim, true);
                push_dense_conv(out, b + ".conv1", cout, cout, 3, cfg.style_dim, true);
            }
            push_dense_conv(out, b + ".to_rgb", cout, 3, 1, cfg.style_dim, false);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// WeightContainer

int64_t WeightContainer::Entry::numel() const {
    int64_t n = 1;
    for (int64_t e : shape) n *= e;
    return n;
}

bool WeightContainer::has(const std::string& name) const {
    for (const auto& e : entries)
        if (e.name == name) return true;
    return false;
}

const WeightContainer::Entry& WeightContainer::find(const std::string& name) const {
    for (const auto& e : entries)
        if (e.name == name) return e;
    throw std::invalid_argument("weight container: no parameter named '" + name + "'");
}

Tensor WeightContainer::get(const std::string& name) const {
    const Entry& e = find(name);
    const int64_t off = e.byte_offset / static_cast<int64_t>(sizeof(double));
    std::vector<double> data(blob.begin() + off, blob.begin() + off + e.numel());
    return Tensor(e.shape, std::move(data));
}

void WeightContainer::set(const std::string& name, const Tensor& value) {
    const Entry& e = find(name);
    if (value.shape() != e.shape) {
        throw std::invalid_argument("weight container: shape " + value.shape_str() +
                                    " does not match entry '" + name + "' " +
                                    Tensor::shape_to_string(e.shape));
    }
    std::copy(value.data(), value.data() + value.numel(),
              blob.begin() + e.byte_offset / static_cast<int64_t>(sizeof(double)));
}

void WeightContainer::append(const std::string& name, const Tensor& value) {
    if (has(name)) throw std::invalid_argument("weight container: duplicate parameter '" + name + "'");
    Entry e;
    e.name = name;
    e.shape = value.shape();
    e.byte_offset = static_cast<int64_t>(blob.size() * sizeof(double));
    entries.push_back(std::move(e));
    blob.insert(blob.end(), value.data(), value.data() + value.numel());
}

namespace {

template <typename Pred>
void repack_without(WeightContainer& wc, Pred drop) {
    std::vector<WeightContainer::Entry> kept;
    std::vector<double> packed;
    for (const auto& e : wc.entries) {
        if (drop(e.name)) continue;
        WeightContainer::Entry ne = e;
        ne.byte_offset = static_cast<int64_t>(packed.size() * sizeof(double));
        const int64_t off = e.byte_offset / static_cast<int64_t>(sizeof(double));
        packed.insert(packed.end(), wc.blob.begin() + off, wc.blob.begin() + off + e.numel());
        kept.push_back(std::move(ne));
    }
    wc.entries = std::move(kept);
    wc.blob = std::move(packed);
}

}  // namespace

void WeightContainer::remove_matching(const std::string& suffix) {
    repack_without(*this, [&](const std::string& name) {
        return name.size() >= suffix.size() &&
               name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0;
    });
}

void WeightContainer::remove_entries(const std::vector<std::string>& names) {
    repack_without(*this, [&](const std::string& name) {
        return std::find(names.begin(), names.end(), name) != names.end();
    });
}

WeightContainer init_random(const GeneratorConfig& cfg, uint64_t seed, DemodMode demod_mode) {
    if (cfg.variant == GeneratorVariant::dense_baseline) demod_mode = DemodMode::style;
    const std::vector<ParamSpec> specs = enumerate_parameters(cfg, demod_mode);

    WeightContainer wc;
    wc.config = cfg;
    wc.demod_mode = demod_mode;
    Rng rng(seed);
    for (const ParamSpec& s : specs) {
        Tensor t(s.shape);
        switch (s.init) {
            case ParamSpec::Init::normal_fan_in: {
                int64_t fan_in = 1;
                for (size_t i = 1; i < s.shape.size(); ++i) fan_in *= s.shape[i];
                const double std = 1.0 / std::sqrt(static_cast<double>(fan_in));
                for (int64_t i = 0; i < t.numel(); ++i) t[i] = std * rng.normal();
                break;
            }
            case ParamSpec::Init::normal_unit:
                for (int64_t i = 0; i < t.numel(); ++i) t[i] = rng.normal();
                break;
            case ParamSpec::Init::zero:
                break;
            case ParamSpec::Init::one:
                for (int64_t i = 0; i < t.numel(); ++i) t[i] = 1.0;
                break;
        }
        wc.append(s.name, t);
    }
    return wc;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

constexpr char kMagic[4] = {'M', 'S', 'G', 'W'};
constexpr uint32_t kFormatVersion = 1;

void append_u32_le(std::string& out, uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void append_u64_le(std::string& out, uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

uint32_t read_u32_le(const unsigned char* p) {
    return static_cast<uint32_t>(p[0]) | static_cast<uint32_t>(p[1]) << 8 |
           static_cast<uint32_t>(p[2]) << 16 | static_cast<uint32_t>(p[3]) << 24;
}

uint64_t read_u64_le(const unsigned char* p) {
    uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
    return v;
}

}  // namespace

void save_weights(const WeightContainer& wc, const std::string& path) {
    ordered_json manifest;
    manifest["format_version"] = kFormatVersion;
    manifest["config"] = config_to_ojson(wc.config);
    manifest["demod_mode"] = to_string(wc.demod_mode);
    ordered_json params = ordered_json::array();
    for (const auto& e : wc.entries) {
        ordered_json pe;
        pe["name"] = e.name;
        pe["shape"] = e.shape;
        pe["byte_offset"] = e.byte_offset;
        params.push_back(pe);
    }
    manifest["params"] = params;
    manifest["blob_bytes"] = wc.blob.size() * sizeof(double);
    const std::string mtext = manifest.dump();

    std::string header;
    header.append(kMagic, 4);
    append_u32_le(header, kFormatVersion);
    append_u64_le(header, mtext.size());

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("save_weights: cannot open '" + path + "' for writing");
    f.write(header.data(), static_cast<std::streamsize>(header.size()));
    f.write(mtext.data(), static_cast<std::streamsize>(mtext.size()));
    if (!wc.blob.empty()) {
        if constexpr (std::endian::native == std::endian::little) {
            f.write(reinterpret_cast<const char*>(wc.blob.data()),
                    static_cast<std::streamsize>(wc.blob.size() * sizeof(double)));
        } else {
            for (double d : wc.blob) {
                uint64_t bits;
                std::memcpy(&bits, &d, 8);
                std::string le;
                append_u64_le(le, bits);
                f.write(le.data(), 8);
            }
        }
    }
    if (!f) throw std::runtime_error("save_weights: write to '" + path + "' failed");
}

WeightContainer load_weights(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("load_weights: cannot open '" + path + "'");
    std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());

    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
    if (bytes.size() < 16 || std::memcmp(p, kMagic, 4) != 0) {
        throw std::runtime_error("load_weights: '" + path + "' is not a MSGW weight container");
    }
    const uint32_t version = read_u32_le(p + 4);
    if (version != kFormatVersion) {
        throw std::runtime_error("load_weights: unsupported container version " +
                                 std::to_string(version));
    }
    const uint64_t mlen = read_u64_le(p + 8);
    if (16 + mlen > bytes.size()) {
        throw std::runtime_error("load_weights: manifest length exceeds file size");
    }
    const ordered_json manifest = ordered_json::parse(bytes.substr(16, mlen));

    WeightContainer wc;
    wc.config = config_from_ojson(manifest.at("config"));
    wc.demod_mode = demod_mode_from_string(manifest.at("demod_mode").get<std::string>());

    const uint64_t blob_bytes = manifest.at("blob_bytes").get<uint64_t>();
    const size_t blob_start = 16 + mlen;
    if (blob_start + blob_bytes != bytes.size()) {
        throw std::runtime_error(
            "load_weights: blob length mismatch (manifest says " + std::to_string(blob_bytes) +
            " bytes, file holds " + std::to_string(bytes.size() - blob_start) + ")");
    }
    if (blob_bytes % sizeof(double) != 0) {
        throw std::runtime_error("load_weights: blob length is not a multiple of 8");
    }
    wc.blob.resize(blob_bytes / sizeof(double));
    if constexpr (std::endian::native == std::endian::little) {
        std::memcpy(wc.blob.data(), bytes.data() + blob_start, blob_bytes);
    } else {
        for (size_t i = 0; i < wc.blob.size(); ++i) {
            const uint64_t bits =
                read_u64_le(reinterpret_cast<const unsigned char*>(bytes.data()) + blob_start +
                            8 * i);
            std::memcpy(&wc.blob[i], &bits, 8);
        }
    }

    int64_t expected_offset = 0;
    for (const auto& pe : manifest.at("params")) {
        WeightContainer::Entry e;
        e.name = pe.at("name").get<std::string>();
        e.shape = pe.at("shape").get<std::vector<int64_t>>();
        e.byte_offset = pe.at("byte_offset").get<int64_t>();
        if (e.byte_offset != expected_offset) {
            throw std::runtime_error("load_weights: parameter '" + e.name +
                                     "' is not contiguous in the blob");
        }
        expected_offset += e.numel() * static_cast<int64_t>(sizeof(double));
        wc.entries.push_back(std::move(e));
    }
    if (expected_offset != static_cast<int64_t>(blob_bytes)) {
        throw std::runtime_error("load_weights: blob length " + std::to_string(blob_bytes) +
                                 " does not equal the sum of entry sizes " +
                                 std::to_string(expected_offset));
    }
    return wc;
}

// ---------------------------------------------------------------------------
// Generator

namespace {

// post_scale entries are accepted in addition to the canonical set; they are
// what the constant-folding pass removes.
bool parse_post_scale(const std::string& name, std::string& conv_prefix, int& index) {
    const size_t pos = name.rfind(".post_scale");
    if (pos == std::string::npos) return false;
    const std::string idx = name.substr(pos + 11);
    if (idx.empty() || idx.find_first_not_of("0123456789") != std::string::npos) return false;
    conv_prefix = name.substr(0, pos);
    index = std::stoi(idx);
    return true;
}

}  // namespace

Generator Generator::from_container(const WeightContainer& wc) {
    wc.config.validate();
    if (wc.config.variant != GeneratorVariant::mobile) {
        throw std::invalid_argument(
            "Generator: the dense_baseline variant is structural (complexity accounting only); "
            "forward execution supports the mobile variant");
    }

    // Validate the container against the canonical parameter list.
    const std::vector<ParamSpec> specs = enumerate_parameters(wc.config, wc.demod_mode);
    std::map<std::string, std::vector<int64_t>> expected;
    for (const auto& s : specs) expected[s.name] = s.shape;
    std::map<std::string, std::vector<std::pair<int, std::string>>> scale_chains;
    for (const auto& e : wc.entries) {
        auto it = expected.find(e.name);
        if (it != expected.end()) {
            if (e.shape != it->second) {
                throw std::invalid_argument("Generator: parameter '" + e.name + "' has shape " +
                                            Tensor::shape_to_string(e.shape) + ", expected " +
                                            Tensor::shape_to_string(it->second));
            }
            expected.erase(it);
            continue;
        }
        std::string prefix;
        int idx = 0;
        if (parse_post_scale(e.name, prefix, idx)) {
            scale_chains[prefix].emplace_back(idx, e.name);
            continue;
        }
        throw std::invalid_argument("Generator: unknown parameter '" + e.name + "'");
    }
    if (!expected.empty()) {
        throw std::invalid_argument("Generator: container is missing parameter '" +
                                    expected.begin()->first + "'");
    }

    Generator g;
    g.config_ = wc.config;
    g.demod_mode_ = wc.demod_mode;

    for (int i = 0; i < wc.config.mapping_layers; ++i) {
        const std::string p = "mapping." + std::to_string(i);
        g.mapping_.emplace_back(wc.get(p + ".weight"), wc.get(p + ".bias"));
    }
    g.const_input_ = wc.get("const_input");

    auto load_scales = [&](const std::string& prefix) {
        std::vector<Tensor> scales;
        auto it = scale_chains.find(prefix);
        if (it != scale_chains.end()) {
            std::sort(it->second.begin(), it->second.end());
            for (const auto& [idx, name] : it->second) scales.push_back(wc.get(name));
        }
        return scales;
    };

    auto load_ds = [&](const std::string& prefix, DemodMode mode, bool activation) {
        DsModConvParams p;
        p.w_dw = wc.get(prefix + ".dw");
        p.w_pw = wc.get(prefix + ".pw");
        p.bias = wc.get(prefix + ".bias");
        p.affine_w = wc.get(prefix + ".affine_w");
        p.affine_b = wc.get(prefix + ".affine_b");
        if (mode == DemodMode::trainable) p.p_demod = wc.get(prefix + ".p_demod");
        p.demod_mode = mode;
        p.apply_activation = activation;
        p.post_scales = load_scales(prefix);
        p.validate();
        return p;
    };

    const int64_t c0 = wc.config.width_at(wc.config.base_resolution);
    for (int k = 0; k < wc.config.num_blocks(); ++k) {
        const std::string b = "b" + std::to_string(k + 1);
        SynthesisBlock blk;
        blk.feature_resolution = wc.config.feature_resolution(k);
        blk.out_channels = wc.config.width_at(blk.feature_resolution);
        blk.has_upscale = k > 0;
        if (blk.has_upscale) {
            blk.in_channels = wc.config.width_at(blk.feature_resolution / 2);
            blk.conv_post = load_ds(b + ".conv_post", wc.demod_mode, true);
            blk.conv_post_noise_scale = wc.get(b + ".conv_post.noise_scale")[0];
            g.noise_sites_.push_back({b + ".conv_post", blk.feature_resolution});
        } else {
            blk.in_channels = c0;
            g.noise_sites_.push_back({b + ".conv_main", blk.feature_resolution});
        }
        blk.conv_main = load_ds(b + ".conv_main", wc.demod_mode, true);
        blk.conv_main_noise_scale = wc.get(b + ".conv_main.noise_scale")[0];
        if (blk.has_upscale) g.noise_sites_.push_back({b + ".conv_main", blk.feature_resolution});
        blk.head = load_ds(b + ".head", DemodMode::none, false);
        g.blocks_.push_back(std::move(blk));
    }
    return g;
}

Tensor Generator::mapping_forward(const Tensor& z) const {
    if (z.rank() != 2 || z.dim(1) != config_.style_dim) {
        throw std::invalid_argument("mapping_forward: z " + z.shape_str() + " must be [N," +
                                    std::to_string(config_.style_dim) + "]");
    }
    Tensor y = pixel_norm(z);
    for (const auto& [w, b] : mapping_) {
        y = linear(y, w, b);
        y = leaky_relu(y, 0.2);
    }
    return y;
}

void Generator::check_noises(const std::vector<Tensor>& noises, int64_t batch) const {
    if (noises.empty()) return;
    if (noises.size() != noise_sites_.size()) {
        std::string sites;
        for (const auto& s : noise_sites_) {
            if (!sites.empty()) sites += ", ";
            sites += s.name + "@" + std::to_string(s.resolution) + "x" +
                     std::to_string(s.resolution);
        }
        throw std::invalid_argument("synthesis: expected " +
                                    std::to_string(noise_sites_.size()) + " noise tensors (" +
                                    sites + "), got " + std::to_string(noises.size()));
    }
    for (size_t i = 0; i < noises.size(); ++i) {
        const auto& s = noise_sites_[i];
        const Tensor& t = noises[i];
        if (t.rank() != 4 || t.dim(0) != batch || t.dim(1) != 1 || t.dim(2) != s.resolution ||
            t.dim(3) != s.resolution) {
            throw std::invalid_argument("synthesis: noise " + std::to_string(i) + " has shape " +
                                        t.shape_str() + ", site " + s.name + " expects [N,1," +
                                        std::to_string(s.resolution) + "," +
                                        std::to_string(s.resolution) + "]");
        }
    }
}

namespace {

Tensor trunk_forward(const SynthesisBlock& blk, const Tensor& x, const Tensor& style,
                     const std::vector<Tensor>& block_noises, ArithCounter* counter) {
    const Tensor empty;
    size_t ni = 0;
    auto next_noise = [&]() -> const Tensor& {
        if (block_noises.empty()) return empty;
        return block_noises.at(ni++);
    };

    Tensor y = x;
    if (blk.has_upscale) {
        y = idwt2_addonly(WaveletImage{y});
        y = ds_modconv_forward(y, style, blk.conv_post, next_noise(), blk.conv_post_noise_scale,
                               counter);
    }
    return ds_modconv_forward(y, style, blk.conv_main, next_noise(), blk.conv_main_noise_scale,
                              counter);
}

}  // namespace

std::pair<Tensor, WaveletImage> Generator::block_forward(int block_index, const Tensor& x,
                                                         const Tensor& style,
                                                         const std::vector<Tensor>& block_noises,
                                                         ArithCounter* counter) const {
    const SynthesisBlock& blk = blocks_.at(static_cast<size_t>(block_index));
    if (x.dim(1) != blk.in_channels) {
        throw std::invalid_argument("block_forward: input " + x.shape_str() + " must provide " +
                                    std::to_string(blk.in_channels) + " channels");
    }
    Tensor y = trunk_forward(blk, x, style, block_noises, counter);
    WaveletImage head{ds_modconv_forward(y, style, blk.head, Tensor(), 0.0, counter)};
    return {std::move(y), std::move(head)};
}

void Generator::run_blocks(const Tensor& style, const std::vector<Tensor>& noises,
                           WaveletPyramid* pyramid_out, Tensor* final_out,
                           ArithCounter* counter) const {
    if (style.rank() != 2 || style.dim(1) != config_.style_dim) {
        throw std::invalid_argument("synthesis: style " + style.shape_str() + " must be [N," +
                                    std::to_string(config_.style_dim) + "]");
    }
    const int64_t n = style.dim(0);
    check_noises(noises, n);

    // Broadcast the learned constant over the batch.
    const int64_t c0 = const_input_.dim(0), b = config_.base_resolution;
    Tensor x({n, c0, b, b});
    for (int64_t s = 0; s < n; ++s)
        std::copy(const_input_.data(), const_input_.data() + const_input_.numel(),
                  x.data() + s * const_input_.numel());

    size_t noise_cursor = 0;
    for (int k = 0; k < static_cast<int>(blocks_.size()); ++k) {
        const SynthesisBlock& blk = blocks_[static_cast<size_t>(k)];
        const size_t sites = blk.has_upscale ? 2 : 1;
        std::vector<Tensor> block_noises;
        if (!noises.empty()) {
            block_noises.assign(noises.begin() + static_cast<int64_t>(noise_cursor),
                                noises.begin() + static_cast<int64_t>(noise_cursor + sites));
        }
        noise_cursor += sites;

        x = trunk_forward(blk, x, style, block_noises, counter);

        // In final-image mode the auxiliary heads are skipped; only the last
        // block's prediction head runs.
        const bool last = k + 1 == static_cast<int>(blocks_.size());
        if (pyramid_out == nullptr && !last) continue;

        WaveletImage head{ds_modconv_forward(x, style, blk.head, Tensor(), 0.0, counter)};
        if (pyramid_out) {
            Tensor recon = idwt2_addonly(head);
            if (last && final_out) *final_out = recon;
            pyramid_out->levels.push_back(PyramidLevel{std::move(head), std::move(recon)});
        } else if (last && final_out) {
            *final_out = idwt2_addonly(head);
        }
    }
}

Tensor Generator::synthesis_final(const Tensor& style, const std::vector<Tensor>& noises,
                                  ArithCounter* counter) const {
    Tensor out;
    run_blocks(style, noises, nullptr, &out, counter);
    return out;
}

WaveletPyramid Generator::synthesis_pyramid(const Tensor& style, const std::vector<Tensor>& noises,
                                            ArithCounter* counter) const {
    WaveletPyramid pyr;
    run_blocks(style, noises, &pyr, nullptr, counter);
    return pyr;
}

GenerateSample draw_sample(const Generator& g, uint64_t seed) {
    Rng rng(seed);
    GenerateSample s;
    s.z = rng.normal_tensor({1, g.config().style_dim});
    for (const NoiseSite& site : g.noise_sites()) {
        s.noises.push_back(rng.normal_tensor({1, 1, site.resolution, site.resolution}));
    }
    s.style = g.mapping_forward(s.z);
    return s;
}

Tensor clamp_image(const Tensor& img) {
    Tensor out(img.shape());
    for (int64_t i = 0; i < img.numel(); ++i) out[i] = std::clamp(img[i], -1.0, 1.0);
    return out;
}

Tensor generate(const Generator& g, uint64_t seed) {
    const GenerateSample s = draw_sample(g, seed);
    return clamp_image(g.synthesis_final(s.style, s.noises));
}

}  // namespace wsg
