// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <thread>

#include "wsg/graph.hpp"
#include "wsg/kernels.hpp"
#include "wsg/png_io.hpp"
#include "wsg/rng.hpp"

using namespace wsg;
namespace fs = std::filesystem;

namespace {

GeneratorConfig tiny_config() {
    GeneratorConfig cfg;
    cfg.variant = GeneratorVariant::mobile;
    cfg.style_dim = 8;
    cfg.mapping_layers = 2;
    cfg.base_resolution = 4;
    cfg.target_resolution = 16;
    cfg.channels = {{4, 8}, {8, 4}};
    cfg.validate();
    return cfg;
}

// ---------------------------------------------------------------------------
// Straight-line scripted reimplementation of the tiny graph, plain loops
// only. Independent of the kernels/modconv/wavelet modules on purpose.

struct ScriptConv {
    Tensor dw, pw, bias, aw, ab, p_demod;
    double noise_scale = 0.0;
};

Tensor script_affine(const Tensor& style, const Tensor& aw, const Tensor& ab) {
    const int64_t n = style.dim(0), cin = aw.dim(0), d = aw.dim(1);
    Tensor s({n, cin});
    for (int64_t ni = 0; ni < n; ++ni)
        for (int64_t i = 0; i < cin; ++i) {
            double acc = ab[i];
            for (int64_t k = 0; k < d; ++k) acc += aw.at(i, k) * style.at(ni, k);
            s.at(ni, i) = acc;
        }
    return s;
}

// modulate -> depthwise 3x3 (pad 1) -> pointwise -> trainable demod -> bias
// -> noise -> leaky relu (trunk) or no demod/noise/activation (head)
Tensor script_conv(const Tensor& x, const Tensor& style, const ScriptConv& c, const Tensor& noise,
                   bool head) {
    const int64_t n = x.dim(0), cin = x.dim(1), h = x.dim(2), w = x.dim(3);
    const int64_t cout = c.pw.dim(0);
    const Tensor s = script_affine(style, c.aw, c.ab);

    Tensor xm({n, cin, h, w});
    for (int64_t ni = 0; ni < n; ++ni)
        for (int64_t i = 0; i < cin; ++i)
            for (int64_t y = 0; y < h; ++y)
                for (int64_t xx = 0; xx < w; ++xx)
                    xm.at(ni, i, y, xx) = s.at(ni, i) * x.at(ni, i, y, xx);

    Tensor xd({n, cin, h, w});
    for (int64_t ni = 0; ni < n; ++ni)
        for (int64_t i = 0; i < cin; ++i)
            for (int64_t y = 0; y < h; ++y)
                for (int64_t xx = 0; xx < w; ++xx) {
                    double acc = 0.0;
                    for (int64_t r = 0; r < 3; ++r)
                        for (int64_t q = 0; q < 3; ++q) {
                            const int64_t sy = y + r - 1, sx = xx + q - 1;
                            if (sy < 0 || sy >= h || sx < 0 || sx >= w) continue;
                            acc += c.dw.at(i, 0, r, q) * xm.at(ni, i, sy, sx);
                        }
                    xd.at(ni, i, y, xx) = acc;
                }

    Tensor xp({n, cout, h, w});
    for (int64_t ni = 0; ni < n; ++ni)
        for (int64_t j = 0; j < cout; ++j)
            for (int64_t y = 0; y < h; ++y)
                for (int64_t xx = 0; xx < w; ++xx) {
                    double acc = 0.0;
                    for (int64_t i = 0; i < cin; ++i)
                        acc += c.pw.at(j, i, 0, 0) * xd.at(ni, i, y, xx);
                    xp.at(ni, j, y, xx) = acc;
                }

    if (!head) {
        // Eq-style demodulation from the trainable constants.
        for (int64_t j = 0; j < cout; ++j) {
            double sum = 0.0;
            for (int64_t i = 0; i < cin; ++i)
                for (int64_t r = 0; r < 3; ++r)
                    for (int64_t q = 0; q < 3; ++q) {
                        const double tap = c.p_demod[i] * c.pw.at(j, i, 0, 0) * c.dw.at(i, 0, r, q);
                        sum += tap * tap;
                    }
            const double demod = 1.0 / std::sqrt(sum + 1e-8);
            for (int64_t ni = 0; ni < n; ++ni)
                for (int64_t y = 0; y < h; ++y)
                    for (int64_t xx = 0; xx < w; ++xx) xp.at(ni, j, y, xx) *= demod;
        }
    }

    for (int64_t ni = 0; ni < n; ++ni)
        for (int64_t j = 0; j < cout; ++j)
            for (int64_t y = 0; y < h; ++y)
                for (int64_t xx = 0; xx < w; ++xx) {
                    double v = xp.at(ni, j, y, xx) + c.bias[j];
                    if (!head && noise.numel() > 0)
                        v += c.noise_scale * noise.at(ni, 0, y, xx);
                    if (!head) v = v >= 0.0 ? v : 0.2 * v;
                    xp.at(ni, j, y, xx) = v;
                }
    return xp;
}

Tensor script_idwt(const Tensor& coeffs) {
    const int64_t n = coeffs.dim(0), c4 = coeffs.dim(1), hh = coeffs.dim(2), hw = coeffs.dim(3);
    const int64_t c = c4 / 4;
    Tensor out({n, c, 2 * hh, 2 * hw});
    for (int64_t ni = 0; ni < n; ++ni)
        for (int64_t ci = 0; ci < c; ++ci)
            for (int64_t i = 0; i < hh; ++i)
                for (int64_t j = 0; j < hw; ++j) {
                    const double ll = coeffs.at(ni, 4 * ci + 0, i, j);
                    const double hl = coeffs.at(ni, 4 * ci + 1, i, j);
                    const double lh = coeffs.at(ni, 4 * ci + 2, i, j);
                    const double hhv = coeffs.at(ni, 4 * ci + 3, i, j);
                    out.at(ni, ci, 2 * i, 2 * j) = ll + hl + lh + hhv;
                    out.at(ni, ci, 2 * i, 2 * j + 1) = ll - hl + lh - hhv;
                    out.at(ni, ci, 2 * i + 1, 2 * j) = ll + hl - lh - hhv;
                    out.at(ni, ci, 2 * i + 1, 2 * j + 1) = ll - hl - lh + hhv;
                }
    return out;
}

ScriptConv script_load(const WeightContainer& wc, const std::string& prefix, bool head) {
    ScriptConv c;
    c.dw = wc.get(prefix + ".dw");
    c.pw = wc.get(prefix + ".pw");
    c.bias = wc.get(prefix + ".bias");
    c.aw = wc.get(prefix + ".affine_w");
    c.ab = wc.get(prefix + ".affine_b");
    if (!head) {
        c.p_demod = wc.get(prefix + ".p_demod");
        c.noise_scale = wc.get(prefix + ".noise_scale")[0];
    }
    return c;
}

// Full scripted forward of the two-block tiny config: z -> style -> const ->
// b1.conv_main -> b2.idwt -> b2.conv_post -> b2.conv_main -> b2.head -> idwt.
Tensor script_forward(const WeightContainer& wc, const Tensor& z,
                      const std::vector<Tensor>& noises) {
    const GeneratorConfig& cfg = wc.config;
    const int64_t n = z.dim(0), d = cfg.style_dim;

    Tensor style({n, d});
    for (int64_t ni = 0; ni < n; ++ni) {
        double sq = 0.0;
        for (int64_t i = 0; i < d; ++i) sq += z.at(ni, i) * z.at(ni, i);
        const double inv = 1.0 / std::sqrt(sq / double(d) + 1e-8);
        for (int64_t i = 0; i < d; ++i) style.at(ni, i) = z.at(ni, i) * inv;
    }
    for (int layer = 0; layer < cfg.mapping_layers; ++layer) {
        const Tensor w = wc.get("mapping." + std::to_string(layer) + ".weight");
        const Tensor b = wc.get("mapping." + std::to_string(layer) + ".bias");
        Tensor next({n, d});
        for (int64_t ni = 0; ni < n; ++ni)
            for (int64_t o = 0; o < d; ++o) {
                double acc = b[o];
                for (int64_t i = 0; i < d; ++i) acc += w.at(o, i) * style.at(ni, i);
                next.at(ni, o) = acc >= 0.0 ? acc : 0.2 * acc;
            }
        style = next;
    }

    const Tensor cst = wc.get("const_input");
    const int64_t c0 = cst.shape()[0], b0 = cst.shape()[1];
    Tensor x({n, c0, b0, b0});
    for (int64_t ni = 0; ni < n; ++ni)
        for (int64_t i = 0; i < cst.numel(); ++i) x[ni * cst.numel() + i] = cst[i];

    x = script_conv(x, style, script_load(wc, "b1.conv_main", false), noises.at(0), false);
    x = script_idwt(x);
    x = script_conv(x, style, script_load(wc, "b2.conv_post", false), noises.at(1), false);
    x = script_conv(x, style, script_load(wc, "b2.conv_main", false), noises.at(2), false);
    const Tensor head =
        script_conv(x, style, script_load(wc, "b2.head", true), Tensor(), true);
    return script_idwt(head);
}

}  // namespace

TEST_CASE("config validation") {
    GeneratorConfig cfg = tiny_config();
    CHECK(cfg.num_blocks() == 2);

    cfg.target_resolution = 24;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg.target_resolution = 16;

    cfg.channels[4] = 10;  // not divisible by 4
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg.channels[4] = 8;

    cfg.channels.erase(8);
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("config json round trip") {
    const GeneratorConfig cfg = tiny_config();
    const GeneratorConfig back = GeneratorConfig::from_json(cfg.to_json());
    CHECK(cfg == back);

    const GeneratorConfig dense = GeneratorConfig::make_default(GeneratorVariant::dense_baseline,
                                                                1024);
    CHECK(dense.channels.at(1024) == 32);
    CHECK(dense.num_blocks() == 8);
}

TEST_CASE("default mapping depth is eight layers") {
    const auto cfg = GeneratorConfig::make_default(GeneratorVariant::mobile, 64);
    CHECK(cfg.mapping_layers == 8);
    const auto specs = enumerate_parameters(cfg, DemodMode::trainable);
    int mapping_weights = 0;
    for (const auto& s : specs)
        if (s.name.rfind("mapping.", 0) == 0 && s.name.find(".weight") != std::string::npos)
            ++mapping_weights;
    CHECK(mapping_weights == 8);
}

TEST_CASE("container save/load round trip is bit-identical") {
    const WeightContainer wc = init_random(tiny_config(), 42);
    const fs::path path = fs::temp_directory_path() / "wsg_test_container.msgw";
    save_weights(wc, path.string());
    const WeightContainer back = load_weights(path.string());

    CHECK(back.config == wc.config);
    CHECK(back.demod_mode == wc.demod_mode);
    REQUIRE(back.entries.size() == wc.entries.size());
    REQUIRE(back.blob.size() == wc.blob.size());
    for (size_t i = 0; i < wc.blob.size(); ++i) {
        CHECK(std::memcmp(&back.blob[i], &wc.blob[i], 8) == 0);
    }

    // saving the loaded container again reproduces the file byte for byte
    const fs::path path2 = fs::temp_directory_path() / "wsg_test_container2.msgw";
    save_weights(back, path2.string());
    std::ifstream f1(path, std::ios::binary), f2(path2, std::ios::binary);
    const std::string b1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
    const std::string b2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
    CHECK(b1 == b2);
    CHECK(b1.substr(0, 4) == "MSGW");
    fs::remove(path);
    fs::remove(path2);
}

TEST_CASE("corrupted containers are rejected") {
    const WeightContainer wc = init_random(tiny_config(), 42);
    const fs::path path = fs::temp_directory_path() / "wsg_test_corrupt.msgw";
    save_weights(wc, path.string());

    SUBCASE("truncated blob") {
        std::ifstream in(path, std::ios::binary);
        std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        in.close();
        bytes.resize(bytes.size() - 16);
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        out << bytes;
        out.close();
        CHECK_THROWS_AS(load_weights(path.string()), std::runtime_error);
    }
    SUBCASE("bad magic") {
        std::fstream f(path, std::ios::binary | std::ios::in | std::ios::out);
        f.seekp(0);
        f.write("XXXX", 4);
        f.close();
        CHECK_THROWS_AS(load_weights(path.string()), std::runtime_error);
    }
    fs::remove(path);
}

TEST_CASE("manifest entries match the parameter enumeration exactly") {
    const GeneratorConfig cfg = tiny_config();
    const auto specs = enumerate_parameters(cfg, DemodMode::trainable);
    const WeightContainer wc = init_random(cfg, 1);
    REQUIRE(wc.entries.size() == specs.size());
    for (size_t i = 0; i < specs.size(); ++i) {
        CHECK(wc.entries[i].name == specs[i].name);
        CHECK(wc.entries[i].shape == specs[i].shape);
    }
    // missing parameter is rejected
    WeightContainer broken = wc;
    broken.remove_matching("b2.head.bias");
    CHECK_THROWS_AS(Generator::from_container(broken), std::invalid_argument);
    // unknown parameter is rejected
    WeightContainer extra = wc;
    extra.append("b2.head.mystery", Tensor({1}));
    CHECK_THROWS_AS(Generator::from_container(extra), std::invalid_argument);
}

TEST_CASE("init_random is deterministic in the seed") {
    const GeneratorConfig cfg = tiny_config();
    const WeightContainer a = init_random(cfg, 9);
    const WeightContainer b = init_random(cfg, 9);
    const WeightContainer c = init_random(cfg, 10);
    CHECK(a.blob == b.blob);
    CHECK(a.blob != c.blob);

    // documented init: style-affine bias 1, p_demod 1, plain biases 0
    const Tensor ab = a.get("b1.conv_main.affine_b");
    for (int64_t i = 0; i < ab.numel(); ++i) CHECK(ab[i] == 1.0);
    const Tensor pd = a.get("b1.conv_main.p_demod");
    for (int64_t i = 0; i < pd.numel(); ++i) CHECK(pd[i] == 1.0);
    const Tensor bias = a.get("b1.conv_main.bias");
    for (int64_t i = 0; i < bias.numel(); ++i) CHECK(bias[i] == 0.0);
}

TEST_CASE("mapping_forward: z = 0 propagates the biases") {
    const GeneratorConfig cfg = tiny_config();
    WeightContainer wc = init_random(cfg, 3);
    Rng rng(77);
    wc.set("mapping.0.bias", rng.normal_tensor({cfg.style_dim}));
    wc.set("mapping.1.bias", rng.normal_tensor({cfg.style_dim}));
    const Generator g = Generator::from_container(wc);

    const Tensor z({1, cfg.style_dim});
    const Tensor got = g.mapping_forward(z);

    Tensor expect = z;  // pixel_norm(0) == 0
    for (int layer = 0; layer < 2; ++layer) {
        expect = ref::linear(expect, wc.get("mapping." + std::to_string(layer) + ".weight"),
                             wc.get("mapping." + std::to_string(layer) + ".bias"));
        expect = leaky_relu(expect, 0.2);
    }
    CHECK(bitwise_equal(got, expect));

    CHECK_THROWS_AS(g.mapping_forward(Tensor({1, cfg.style_dim + 1})), std::invalid_argument);
}

TEST_CASE("block shapes: channel flow and spatial doubling") {
    GeneratorConfig cfg;
    cfg.variant = GeneratorVariant::mobile;
    cfg.style_dim = 16;
    cfg.mapping_layers = 2;
    cfg.base_resolution = 4;
    cfg.target_resolution = 32;
    cfg.channels = {{4, 64}, {8, 32}, {16, 16}};
    const WeightContainer wc = init_random(cfg, 5);
    const Generator g = Generator::from_container(wc);

    Rng rng(6);
    const Tensor style = g.mapping_forward(rng.normal_tensor({1, 16}));
    // feed block 1 (index 1): input 64ch @ 8x8? block 1 takes block 0's output (64 @ 4x4)
    const Tensor x = rng.normal_tensor({1, 64, 4, 4});
    const auto [features, head] = g.block_forward(1, x, style, {});
    CHECK(features.shape() == std::vector<int64_t>{1, 32, 8, 8});
    CHECK(head.coeffs.shape() == std::vector<int64_t>{1, 12, 8, 8});

    // zero head weights -> zero wavelet prediction
    WeightContainer wz = wc;
    wz.set("b2.head.pw", Tensor({12, 32, 1, 1}));
    wz.set("b2.head.bias", Tensor({12}));
    const Generator gz = Generator::from_container(wz);
    const auto [f2, h2] = gz.block_forward(1, x, style, {});
    for (int64_t i = 0; i < h2.coeffs.numel(); ++i) CHECK(h2.coeffs[i] == 0.0);

    // wrong channel count is rejected
    CHECK_THROWS_AS(g.block_forward(1, rng.normal_tensor({1, 60, 4, 4}), style, {}),
                    std::invalid_argument);
}

TEST_CASE("synthesis pyramid sizes and final equals finest bitwise") {
    GeneratorConfig cfg;
    cfg.variant = GeneratorVariant::mobile;
    cfg.style_dim = 32;
    cfg.mapping_layers = 3;
    cfg.base_resolution = 4;
    cfg.target_resolution = 64;
    cfg.channels = {{4, 32}, {8, 32}, {16, 16}, {32, 8}};
    const Generator g = Generator::from_container(init_random(cfg, 21));

    const GenerateSample s = draw_sample(g, 5);
    const WaveletPyramid pyr = g.synthesis_pyramid(s.style, s.noises);
    REQUIRE(pyr.levels.size() == 4);
    CHECK(pyr.levels[0].pixels.dim(2) == 8);
    CHECK(pyr.levels[1].pixels.dim(2) == 16);
    CHECK(pyr.levels[2].pixels.dim(2) == 32);
    CHECK(pyr.levels[3].pixels.dim(2) == 64);
    for (const auto& level : pyr.levels) CHECK(level.wavelet.coeffs.dim(1) == 12);

    const Tensor final_img = g.synthesis_final(s.style, s.noises);
    CHECK(bitwise_equal(final_img, pyr.levels.back().pixels));

    // same draw twice is identical
    const GenerateSample s2 = draw_sample(g, 5);
    CHECK(bitwise_equal(g.synthesis_final(s2.style, s2.noises), final_img));
}

TEST_CASE("noise count mismatch lists the expected sites") {
    const Generator g = Generator::from_container(init_random(tiny_config(), 2));
    const GenerateSample s = draw_sample(g, 1);
    REQUIRE(g.noise_sites().size() == 3);  // b1.conv_main, b2.conv_post, b2.conv_main
    std::vector<Tensor> short_noises(s.noises.begin(), s.noises.begin() + 2);
    try {
        (void)g.synthesis_final(s.style, short_noises);
        FAIL("expected a noise-count error");
    } catch (const std::invalid_argument& e) {
        const std::string msg = e.what();
        CHECK(msg.find("b1.conv_main@4x4") != std::string::npos);
        CHECK(msg.find("b2.conv_post@8x8") != std::string::npos);
        CHECK(msg.find("expected 3") != std::string::npos);
    }
    // empty noise list means zeros
    CHECK_NOTHROW(g.synthesis_final(s.style, {}));
}

TEST_CASE("full tiny-graph forward matches the scripted reimplementation") {
    const GeneratorConfig cfg = tiny_config();
    const WeightContainer wc = init_random(cfg, 123);
    const Generator g = Generator::from_container(wc);

    const GenerateSample s = draw_sample(g, 99);
    const Tensor engine = g.synthesis_final(s.style, s.noises);
    const Tensor scripted = script_forward(wc, s.z, s.noises);
    CHECK(engine.shape() == scripted.shape());
    CHECK(max_abs_diff(engine, scripted) <= 1e-10);
}

TEST_CASE("generate: clamped range, shape, determinism, seed sensitivity") {
    const Generator g = Generator::from_container(init_random(tiny_config(), 31));
    const Tensor a = generate(g, 1);
    CHECK(a.shape() == std::vector<int64_t>{1, 3, 16, 16});
    for (int64_t i = 0; i < a.numel(); ++i) {
        CHECK(a[i] >= -1.0);
        CHECK(a[i] <= 1.0);
    }
    CHECK(bitwise_equal(generate(g, 1), a));

    const Tensor b = generate(g, 2);
    int64_t differing = 0;
    for (int64_t i = 0; i < a.numel(); ++i)
        if (a[i] != b[i]) ++differing;
    CHECK(static_cast<double>(differing) / static_cast<double>(a.numel()) >= 0.01);
}

TEST_CASE("concurrent forwards on one generator agree with the serial result") {
    const Generator g = Generator::from_container(init_random(tiny_config(), 55));
    const GenerateSample s1 = draw_sample(g, 11);
    const GenerateSample s2 = draw_sample(g, 12);
    const Tensor serial1 = g.synthesis_final(s1.style, s1.noises);
    const Tensor serial2 = g.synthesis_final(s2.style, s2.noises);

    Tensor out1, out2;
    std::thread t1([&] { out1 = g.synthesis_final(s1.style, s1.noises); });
    std::thread t2([&] { out2 = g.synthesis_final(s2.style, s2.noises); });
    t1.join();
    t2.join();
    CHECK(bitwise_equal(out1, serial1));
    CHECK(bitwise_equal(out2, serial2));
}

TEST_CASE("png byte mapping is round-half-up on [-1,1]") {
    Tensor img({1, 3, 1, 2});
    img.at(0, 0, 0, 0) = -1.0;             // -> 0
    img.at(0, 0, 0, 1) = 1.0;              // -> 255
    img.at(0, 1, 0, 0) = 0.0;              // 127.5 rounds up -> 128
    img.at(0, 1, 0, 1) = -1.0 + 2.0 / 255.0;  // maps to 1.0 -> byte 1
    img.at(0, 2, 0, 0) = 2.0;              // clamped -> 255
    img.at(0, 2, 0, 1) = -3.0;             // clamped -> 0
    const std::vector<unsigned char> rgb = image_to_rgb8(img);
    // interleaved RGB, row-major
    CHECK(rgb[0] == 0);    // (0,0) R
    CHECK(rgb[1] == 128);  // (0,0) G
    CHECK(rgb[2] == 255);  // (0,0) B
    CHECK(rgb[3] == 255);  // (0,1) R
    CHECK(rgb[4] == 1);    // (0,1) G
    CHECK(rgb[5] == 0);    // (0,1) B
}

TEST_CASE("dense_baseline containers enumerate but do not execute") {
    const auto cfg = GeneratorConfig::make_default(GeneratorVariant::dense_baseline, 16);
    const WeightContainer wc = init_random(cfg, 4);
    CHECK(wc.demod_mode == DemodMode::style);
    CHECK(wc.has("b1.conv.weight"));
    CHECK(wc.has("b3.conv0_up.weight"));
    CHECK(wc.has("b3.to_rgb.weight"));
    CHECK_THROWS_AS(Generator::from_container(wc), std::invalid_argument);
}
