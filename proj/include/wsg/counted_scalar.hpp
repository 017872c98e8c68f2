// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <atomic>
#include <cstdint>

namespace wsg {

/// Drop-in scalar that tallies arithmetic by kind. Instantiating a templated
/// kernel with it turns the kernel into its own operation counter; the
/// wavelet suite uses this to prove the add-only synthesis path performs
/// zero multiplications.
struct CountedScalar {
    double v = 0.0;

    CountedScalar() = default;
    CountedScalar(double x) : v(x) {}  // NOLINT: intentionally implicit

    static inline std::atomic<uint64_t> adds{0};
    static inline std::atomic<uint64_t> muls{0};
    static inline std::atomic<uint64_t> divs{0};

    static void reset() {
        adds = 0;
        muls = 0;
        divs = 0;
    }

    friend CountedScalar operator+(CountedScalar a, CountedScalar b) {
        adds.fetch_add(1, std::memory_order_relaxed);
        return {a.v + b.v};
    }
    friend CountedScalar operator-(CountedScalar a, CountedScalar b) {
        adds.fetch_add(1, std::memory_order_relaxed);
        return {a.v - b.v};
    }
    friend CountedScalar operator*(CountedScalar a, CountedScalar b) {
        muls.fetch_add(1, std::memory_order_relaxed);
        return {a.v * b.v};
    }
    friend CountedScalar operator/(CountedScalar a, CountedScalar b) {
        divs.fetch_add(1, std::memory_order_relaxed);
        return {a.v / b.v};
    }
};

}  // namespace wsg
