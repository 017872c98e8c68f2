// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "wsg/kernels.hpp"
#include "wsg/rng.hpp"
#include "wsg/tensor.hpp"

using namespace wsg;

TEST_CASE("tensor shape and data length agree") {
    CHECK_THROWS_AS(Tensor({2, 3}, {1.0, 2.0}), std::invalid_argument);
    CHECK_THROWS_AS(Tensor({2, 0}), std::invalid_argument);
    Tensor t({2, 3});
    CHECK(t.numel() == 6);
    CHECK(t.shape_str() == "[2,3]");
}

TEST_CASE("rng streams are reproducible and seed-dependent") {
    Rng a(42), b(42), c(43);
    for (int i = 0; i < 100; ++i) {
        const uint64_t va = a.next_u64();
        CHECK(va == b.next_u64());
    }
    bool differs = false;
    Rng a2(42);
    for (int i = 0; i < 100; ++i) differs = differs || (a2.next_u64() != c.next_u64());
    CHECK(differs);

    Rng n1(7), n2(7);
    for (int i = 0; i < 100; ++i) {
        const double u = n1.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        CHECK(u == n2.uniform());
    }
}

TEST_CASE("rng normal moments are sane") {
    Rng rng(5);
    double sum = 0.0, sq = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double v = rng.normal();
        sum += v;
        sq += v * v;
    }
    CHECK(std::abs(sum / n) < 0.02);
    CHECK(std::abs(sq / n - 1.0) < 0.02);
}

TEST_CASE("conv2d_dense definitional examples") {
    // all-ones 3x3 image and kernel, pad 1: center sums 9 taps, corners 4
    const Tensor x = Tensor::full({1, 1, 3, 3}, 1.0);
    const Tensor w = Tensor::full({1, 1, 3, 3}, 1.0);
    const Tensor y = conv2d_dense(x, w, 1, 1);
    CHECK(y.at(0, 0, 1, 1) == doctest::Approx(9.0));
    CHECK(y.at(0, 0, 0, 0) == doctest::Approx(4.0));
    CHECK(y.at(0, 0, 0, 2) == doctest::Approx(4.0));
    CHECK(y.at(0, 0, 2, 0) == doctest::Approx(4.0));
    CHECK(y.at(0, 0, 2, 2) == doctest::Approx(4.0));
}

TEST_CASE("conv2d_dense selector kernel picks one channel") {
    Rng rng(1);
    const Tensor x = rng.normal_tensor({1, 3, 4, 4});
    Tensor w({1, 3, 1, 1});
    w.at(0, 1, 0, 0) = 1.0;  // select channel 1
    const Tensor y = conv2d_dense(x, w, 1, 0);
    for (int64_t h = 0; h < 4; ++h)
        for (int64_t c = 0; c < 4; ++c) CHECK(y.at(0, 0, h, c) == x.at(0, 1, h, c));
}

TEST_CASE("conv2d_dense equals the serial reference bitwise") {
    Rng rng(2);
    const Tensor x = rng.normal_tensor({1, 2, 5, 5});
    const Tensor w = rng.normal_tensor({3, 2, 3, 3});
    for (int pad : {0, 1, 2}) {
        for (int stride : {1, 2}) {
            const Tensor a = conv2d_dense(x, w, stride, pad);
            const Tensor b = ref::conv2d_dense(x, w, stride, pad);
            CHECK(bitwise_equal(a, b));
        }
    }
}

TEST_CASE("conv2d_dense rejects channel mismatch with both shapes named") {
    const Tensor x({1, 3, 5, 5});
    const Tensor w({4, 2, 3, 3});
    try {
        (void)conv2d_dense(x, w, 1, 1);
        FAIL("expected a shape error");
    } catch (const std::invalid_argument& e) {
        const std::string msg = e.what();
        CHECK(msg.find("[1,3,5,5]") != std::string::npos);
        CHECK(msg.find("[4,2,3,3]") != std::string::npos);
    }
}

TEST_CASE("conv2d_dense is linear") {
    Rng rng(3);
    const Tensor x = rng.normal_tensor({1, 2, 6, 6});
    const Tensor y = rng.normal_tensor({1, 2, 6, 6});
    const Tensor w = rng.normal_tensor({2, 2, 3, 3});
    const double a = 1.7, b = -0.4;

    Tensor mix({1, 2, 6, 6});
    for (int64_t i = 0; i < mix.numel(); ++i) mix[i] = a * x[i] + b * y[i];
    const Tensor lhs = conv2d_dense(mix, w, 1, 1);
    const Tensor cx = conv2d_dense(x, w, 1, 1);
    const Tensor cy = conv2d_dense(y, w, 1, 1);
    Tensor rhs({1, 2, 6, 6});
    for (int64_t i = 0; i < rhs.numel(); ++i) rhs[i] = a * cx[i] + b * cy[i];
    CHECK(max_rel_diff(lhs, rhs) <= 1e-10);
}

TEST_CASE("conv2d_depthwise basics") {
    Rng rng(4);
    const int64_t c = 3;
    // identity kernel: center tap one
    Tensor w({c, 1, 3, 3});
    for (int64_t i = 0; i < c; ++i) w.at(i, 0, 1, 1) = 1.0;
    const Tensor x = rng.normal_tensor({2, c, 5, 5});
    CHECK(bitwise_equal(conv2d_depthwise(x, w, 1), x));

    // channel isolation
    Tensor xz({1, c, 4, 4});
    for (int64_t h = 0; h < 4; ++h)
        for (int64_t v = 0; v < 4; ++v) xz.at(0, 1, h, v) = 1.0 + h + v;
    const Tensor wr = rng.normal_tensor({c, 1, 3, 3});
    const Tensor y = conv2d_depthwise(xz, wr, 1);
    for (int64_t h = 0; h < 4; ++h)
        for (int64_t v = 0; v < 4; ++v) {
            CHECK(y.at(0, 0, h, v) == 0.0);
            CHECK(y.at(0, 2, h, v) == 0.0);
        }

    CHECK_THROWS_AS(conv2d_depthwise(x, rng.normal_tensor({c + 1, 1, 3, 3}), 1),
                    std::invalid_argument);
    CHECK_THROWS_AS(conv2d_depthwise(x, wr, 0), std::invalid_argument);
}

TEST_CASE("depthwise equals dense with a block-diagonal kernel") {
    Rng rng(5);
    const int64_t c = 4;
    const Tensor x = rng.normal_tensor({1, c, 6, 6});
    const Tensor w = rng.normal_tensor({c, 1, 3, 3});
    Tensor dense({c, c, 3, 3});
    for (int64_t i = 0; i < c; ++i)
        for (int64_t r = 0; r < 3; ++r)
            for (int64_t s = 0; s < 3; ++s) dense.at(i, i, r, s) = w.at(i, 0, r, s);
    CHECK(max_abs_diff(conv2d_depthwise(x, w, 1), ref::conv2d_dense(x, dense, 1, 1)) <= 1e-12);
}

TEST_CASE("pointwise conv identity and channel sum") {
    Rng rng(6);
    const int64_t c = 5;
    const Tensor x = rng.normal_tensor({1, c, 3, 3});
    Tensor eye({c, c, 1, 1});
    for (int64_t i = 0; i < c; ++i) eye.at(i, i, 0, 0) = 1.0;
    CHECK(bitwise_equal(conv2d_pointwise(x, eye), x));

    const Tensor ones = Tensor::full({1, c, 1, 1}, 1.0);
    const Tensor sums = conv2d_pointwise(x, ones);
    for (int64_t h = 0; h < 3; ++h)
        for (int64_t v = 0; v < 3; ++v) {
            double expect = 0.0;
            for (int64_t i = 0; i < c; ++i) expect += x.at(0, i, h, v);
            CHECK(sums.at(0, 0, h, v) == doctest::Approx(expect).epsilon(1e-12));
        }
}

TEST_CASE("pointwise equals dense with a 1x1 kernel") {
    Rng rng(7);
    const Tensor x = rng.normal_tensor({2, 3, 4, 4});
    const Tensor w = rng.normal_tensor({5, 3, 1, 1});
    CHECK(max_abs_diff(conv2d_pointwise(x, w), ref::conv2d_dense(x, w, 1, 0)) <= 1e-12);
}

TEST_CASE("linear examples and oracle") {
    // identity weight, zero bias
    Tensor eye({3, 3});
    for (int64_t i = 0; i < 3; ++i) eye.at(i, i) = 1.0;
    Rng rng(8);
    const Tensor x = rng.normal_tensor({2, 3});
    CHECK(bitwise_equal(linear(x, eye, Tensor({3})), x));

    // hand arithmetic: [1,2] * [[1,1]] + [0.5] = [3.5]
    const Tensor x2({1, 2}, {1.0, 2.0});
    const Tensor w2({1, 2}, {1.0, 1.0});
    const Tensor b2({1}, {0.5});
    CHECK(linear(x2, w2, b2).at(0, 0) == 3.5);

    const Tensor xw = rng.normal_tensor({3, 7});
    const Tensor ww = rng.normal_tensor({4, 7});
    const Tensor bw = rng.normal_tensor({4});
    CHECK(bitwise_equal(linear(xw, ww, bw), ref::linear(xw, ww, bw)));
}

TEST_CASE("leaky_relu") {
    const Tensor x({1, 4}, {-1.0, 3.0, 0.0, -2.5});
    const Tensor y = leaky_relu(x, 0.2);
    CHECK(y[0] == doctest::Approx(-0.2));
    CHECK(y[1] == 3.0);
    CHECK(y[2] == 0.0);
    CHECK(y[3] == doctest::Approx(-0.5));
    CHECK(bitwise_equal(leaky_relu(x, 1.0), x));  // slope 1 is the identity
}

TEST_CASE("noise_inject") {
    Rng rng(9);
    const Tensor x = rng.normal_tensor({1, 3, 4, 4});
    const Tensor noise = rng.normal_tensor({1, 1, 4, 4});
    CHECK(bitwise_equal(noise_inject(x, noise, 0.0), x));

    const Tensor zeros({1, 3, 4, 4});
    const Tensor broadcast = noise_inject(zeros, noise, 1.0);
    for (int64_t c = 0; c < 3; ++c)
        for (int64_t h = 0; h < 4; ++h)
            for (int64_t w = 0; w < 4; ++w)
                CHECK(broadcast.at(0, c, h, w) == noise.at(0, 0, h, w));

    const double scale = 0.37;
    const Tensor y = noise_inject(x, noise, scale);
    for (int64_t c = 0; c < 3; ++c)
        for (int64_t h = 0; h < 4; ++h)
            for (int64_t w = 0; w < 4; ++w)
                CHECK(y.at(0, c, h, w) == x.at(0, c, h, w) + scale * noise.at(0, 0, h, w));
}

TEST_CASE("pixel_norm") {
    const Tensor zero({2, 8});
    CHECK(bitwise_equal(pixel_norm(zero), zero));

    const Tensor one({1, 1}, {3.0});
    const double v = pixel_norm(one).at(0, 0);
    CHECK(v > 0.0);
    CHECK(v == doctest::Approx(1.0).epsilon(1e-6));

    Rng rng(10);
    const Tensor x = rng.normal_tensor({4, 16});
    const Tensor y = pixel_norm(x);
    for (int64_t n = 0; n < 4; ++n) {
        double sq = 0.0;
        for (int64_t c = 0; c < 16; ++c) sq += y.at(n, c) * y.at(n, c);
        CHECK(std::sqrt(sq / 16.0) == doctest::Approx(1.0).epsilon(1e-6));
    }
}

TEST_CASE("kernels are bit-deterministic across thread counts") {
    Rng rng(11);
    const Tensor x = rng.normal_tensor({2, 8, 16, 16});
    const Tensor w = rng.normal_tensor({8, 8, 3, 3});
#ifdef _OPENMP
    const int saved = omp_get_max_threads();
    omp_set_num_threads(1);
    const Tensor a = conv2d_dense(x, w, 1, 1);
    omp_set_num_threads(2);
    const Tensor b = conv2d_dense(x, w, 1, 1);
    omp_set_num_threads(saved);
    CHECK(bitwise_equal(a, b));
#else
    CHECK(bitwise_equal(conv2d_dense(x, w, 1, 1), conv2d_dense(x, w, 1, 1)));
#endif
}

TEST_CASE("kernel outputs stay finite for finite inputs") {
    Rng rng(12);
    const Tensor x = rng.normal_tensor({1, 4, 8, 8}, 0.0, 100.0);
    const Tensor w = rng.normal_tensor({4, 4, 3, 3}, 0.0, 100.0);
    CHECK(all_finite(conv2d_dense(x, w, 1, 1)));
    CHECK(all_finite(leaky_relu(x, 0.2)));
}
