#include "remnet/layers.hpp"

#include <cmath>
#include <stdexcept>

namespace remnet::nn {

Conv2d::Conv2d(int kh, int kw, int cin, int cout, int stride, ops::Padding pad, bool with_bias)
    : weight(Tensor({kh, kw, cin, cout}, true)), has_bias(with_bias) {
    spec.kh = kh;
    spec.kw = kw;
    spec.stride = stride;
    spec.pad = pad;
    if (has_bias) bias = Tensor({cout}, true);
}

void Conv2d::init(Rng& rng) {
    const double fan_in =
        static_cast<double>(spec.kh) * spec.kw * static_cast<double>(weight.dim(2));
    const double stddev = std::sqrt(2.0 / fan_in);
    for (double& v : weight.values()) v = rng.next_gaussian() * stddev;
    if (has_bias) std::fill(bias.values().begin(), bias.values().end(), 0.0);
}

Tensor Conv2d::forward(Tensor x, bool keep_cache) {
    if (keep_cache) {
        input_cache_ = std::move(x);
        return ops::conv2d_forward(input_cache_, weight, has_bias ? &bias : nullptr, spec);
    }
    return ops::conv2d_forward(x, weight, has_bias ? &bias : nullptr, spec);
}

Tensor Conv2d::backward(const Tensor& gout) {
    if (input_cache_.numel() == 0) throw std::logic_error("conv2d backward without forward cache");
    return ops::conv2d_backward(input_cache_, weight, spec, gout, weight.grad_data(),
                                has_bias ? bias.grad_data() : nullptr);
}

void Conv2d::collect(const std::string& prefix, std::vector<ParamRef>& out) {
    out.push_back({prefix + ".weight", &weight, true});
    if (has_bias) out.push_back({prefix + ".bias", &bias, true});
}

BatchNorm2d::BatchNorm2d(int channels, double eps_, double momentum_)
    : gamma(Tensor::full({channels}, 1.0, true)),
      beta(Tensor({channels}, true)),
      running_mean(Tensor({channels})),
      running_var(Tensor({channels})),
      eps(eps_),
      momentum(momentum_) {}

Tensor BatchNorm2d::forward(const Tensor& x, bool training, bool keep_cache) {
    return ops::batch_norm_forward(x, gamma, beta, running_mean, running_var, training, eps,
                                   momentum, keep_cache ? &cache_ : nullptr);
}

Tensor BatchNorm2d::backward(const Tensor& gout) {
    if (cache_.x_hat.numel() == 0) {
        throw std::logic_error("batch_norm backward without forward cache");
    }
    return ops::batch_norm_backward(cache_, gamma, gout, gamma.grad_data(), beta.grad_data());
}

void BatchNorm2d::collect(const std::string& prefix, std::vector<ParamRef>& out) {
    out.push_back({prefix + ".gamma", &gamma, true});
    out.push_back({prefix + ".beta", &beta, true});
    out.push_back({prefix + ".running_mean", &running_mean, false});
    out.push_back({prefix + ".running_var", &running_var, false});
}

PReLU::PReLU(int channels, double initial_slope)
    : slope(Tensor::full({channels}, initial_slope, true)) {}

Tensor PReLU::forward(Tensor x, bool keep_cache) {
    if (keep_cache) {
        input_cache_ = std::move(x);
        return ops::prelu_forward(input_cache_, slope);
    }
    return ops::prelu_forward(x, slope);
}

Tensor PReLU::backward(const Tensor& gout) {
    if (input_cache_.numel() == 0) throw std::logic_error("prelu backward without forward cache");
    return ops::prelu_backward(input_cache_, slope, gout, slope.grad_data());
}

void PReLU::collect(const std::string& prefix, std::vector<ParamRef>& out) {
    out.push_back({prefix + ".slope", &slope, true});
}

Tensor AvgPool::forward(const Tensor& x) {
    in_shape_ = x.shape();
    return ops::avg_pool_forward(x, kernel_);
}

Tensor AvgPool::backward(const Tensor& gout) {
    if (in_shape_.empty()) throw std::logic_error("avg_pool backward without forward cache");
    return ops::avg_pool_backward(in_shape_, kernel_, gout);
}

}  // namespace remnet::nn
