// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace wsg {

/// Dense N-dimensional array of doubles in row-major order.
/// Images use N,C,H,W layout; vectors use N,C.
class Tensor {
public:
    Tensor() = default;

    explicit Tensor(std::vector<int64_t> shape)
        : shape_(std::move(shape)), data_(checked_numel(shape_), 0.0) {}

    Tensor(std::vector<int64_t> shape, std::vector<double> data)
        : shape_(std::move(shape)), data_(std::move(data)) {
        if (static_cast<int64_t>(data_.size()) != checked_numel(shape_)) {
            throw std::invalid_argument("Tensor: data length " + std::to_string(data_.size()) +
                                        " does not match shape " + shape_to_string(shape_));
        }
    }

    static Tensor full(std::vector<int64_t> shape, double value) {
        Tensor t(std::move(shape));
        for (double& v : t.data_) v = value;
        return t;
    }

    const std::vector<int64_t>& shape() const { return shape_; }
    size_t rank() const { return shape_.size(); }
    int64_t dim(size_t i) const { return shape_.at(i); }
    int64_t numel() const { return static_cast<int64_t>(data_.size()); }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::vector<double>& storage() { return data_; }
    const std::vector<double>& storage() const { return data_; }

    double& operator[](int64_t i) { return data_[static_cast<size_t>(i)]; }
    double operator[](int64_t i) const { return data_[static_cast<size_t>(i)]; }

    // rank-4 accessors, N,C,H,W
    double& at(int64_t n, int64_t c, int64_t h, int64_t w) {
        return data_[static_cast<size_t>(((n * shape_[1] + c) * shape_[2] + h) * shape_[3] + w)];
    }
    double at(int64_t n, int64_t c, int64_t h, int64_t w) const {
        return data_[static_cast<size_t>(((n * shape_[1] + c) * shape_[2] + h) * shape_[3] + w)];
    }

    // rank-2 accessors, N,C
    double& at(int64_t n, int64_t c) { return data_[static_cast<size_t>(n * shape_[1] + c)]; }
    double at(int64_t n, int64_t c) const { return data_[static_cast<size_t>(n * shape_[1] + c)]; }

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

    std::string shape_str() const { return shape_to_string(shape_); }

    static std::string shape_to_string(const std::vector<int64_t>& s) {
        std::ostringstream os;
        os << '[';
        for (size_t i = 0; i < s.size(); ++i) {
            if (i) os << ',';
            os << s[i];
        }
        os << ']';
        return os.str();
    }

private:
    static int64_t checked_numel(const std::vector<int64_t>& shape) {
        int64_t n = 1;
        for (int64_t e : shape) {
            if (e < 1) {
                throw std::invalid_argument("Tensor: every extent must be >= 1, got " +
                                            shape_to_string(shape));
            }
            n *= e;
        }
        return n;
    }

    std::vector<int64_t> shape_;
    std::vector<double> data_;
};

/// True if shapes and every stored bit agree (distinguishes -0.0 from 0.0, NaNs compare by bits).
bool bitwise_equal(const Tensor& a, const Tensor& b);

/// Largest absolute elementwise difference; shapes must agree.
double max_abs_diff(const Tensor& a, const Tensor& b);

/// max_i |a_i - b_i| / max(1, |b_i|)
double max_rel_diff(const Tensor& a, const Tensor& b);

bool all_finite(const Tensor& t);

}  // namespace wsg
