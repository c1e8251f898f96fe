#pragma once
// N-dimensional double tensor with an optional gradient buffer. Layout is
// channels-last throughout: activations are [B, H, W, C], conv weights are
// [KH, KW, Cin, Cout] so the innermost (contiguous) axis is always the one
// the SIMD kernels stream over.

#include <cstdint>
#include <string>
#include <vector>

#include "remnet/rng.hpp"

namespace remnet {

class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<std::int64_t> shape, bool requires_grad = false);

    static Tensor zeros(std::vector<std::int64_t> shape, bool requires_grad = false);
    static Tensor full(std::vector<std::int64_t> shape, double value, bool requires_grad = false);
    static Tensor from_data(std::vector<std::int64_t> shape, std::vector<double> values,
                            bool requires_grad = false);
    static Tensor randn(std::vector<std::int64_t> shape, Rng& rng, double stddev = 1.0,
                        bool requires_grad = false);

    const std::vector<std::int64_t>& shape() const { return shape_; }
    std::int64_t dim(std::size_t i) const { return shape_[i]; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t numel() const { return data_.size(); }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::vector<double>& values() { return data_; }
    const std::vector<double>& values() const { return data_; }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    bool requires_grad() const { return requires_grad_; }
    void set_requires_grad(bool flag);
    bool has_grad() const { return !grad_.empty(); }
    // Allocates (zeroed) on first touch.
    std::vector<double>& grad();
    const std::vector<double>& grad() const { return grad_; }
    double* grad_data() { return grad().data(); }
    void zero_grad();

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
    std::string shape_str() const;

private:
    std::vector<std::int64_t> shape_;
    std::vector<double> data_;
    std::vector<double> grad_;
    bool requires_grad_ = false;
};

std::size_t shape_numel(const std::vector<std::int64_t>& shape);

}  // namespace remnet
