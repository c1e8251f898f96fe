#pragma once
// Stateful layers: parameters plus the forward caches their backward needs.
// A layer instance is exclusive during a training step; backward must follow
// the forward whose caches it consumes.

#include <string>
#include <vector>

#include "remnet/ops.hpp"
#include "remnet/tensor.hpp"

namespace remnet::nn {

struct ParamRef {
    std::string name;
    Tensor* tensor = nullptr;
    bool trainable = true;  // running stats are saved but not stepped
};

class Conv2d {
public:
    Conv2d() = default;
    Conv2d(int kh, int kw, int cin, int cout, int stride,
           ops::Padding pad = ops::Padding::Same, bool with_bias = true);

    void init(Rng& rng);
    // Takes the input by value: temporaries move into the backward cache,
    // retained inputs copy at the call site.
    Tensor forward(Tensor x, bool keep_cache = true);
    Tensor backward(const Tensor& gout);
    void collect(const std::string& prefix, std::vector<ParamRef>& out);

    Tensor weight;
    Tensor bias;
    ops::ConvSpec spec;
    bool has_bias = true;

private:
    Tensor input_cache_;
};

class BatchNorm2d {
public:
    BatchNorm2d() = default;
    explicit BatchNorm2d(int channels, double eps = 1e-5, double momentum = 0.9);

    Tensor forward(const Tensor& x, bool training, bool keep_cache = true);
    Tensor backward(const Tensor& gout);
    void collect(const std::string& prefix, std::vector<ParamRef>& out);

    Tensor gamma, beta;
    Tensor running_mean, running_var;
    double eps = 1e-5;
    double momentum = 0.9;

private:
    ops::BatchNormCache cache_;
};

class PReLU {
public:
    PReLU() = default;
    explicit PReLU(int channels, double initial_slope = 0.25);

    Tensor forward(Tensor x, bool keep_cache = true);
    Tensor backward(const Tensor& gout);
    void collect(const std::string& prefix, std::vector<ParamRef>& out);

    Tensor slope;

private:
    Tensor input_cache_;
};

class AvgPool {
public:
    AvgPool() = default;
    explicit AvgPool(int kernel) : kernel_(kernel) {}

    Tensor forward(const Tensor& x);
    Tensor backward(const Tensor& gout);
    int kernel() const { return kernel_; }

private:
    int kernel_ = 1;
    std::vector<std::int64_t> in_shape_;
};

}  // namespace remnet::nn
