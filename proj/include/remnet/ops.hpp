#pragma once
// Differentiable op set. Forward functions are pure; backward functions take
// whatever the forward cached and accumulate parameter gradients into raw
// arrays owned by the caller. All activation tensors are [B, H, W, C]; conv
// weights are [KH, KW, Cin, Cout].

#include <cstdint>
#include <vector>

#include "remnet/tensor.hpp"

namespace remnet::ops {

enum class Padding { Same, Valid };

struct ConvSpec {
    int kh = 1;
    int kw = 1;
    int stride = 1;
    Padding pad = Padding::Same;
};

// Same-padding uses the ceil(in/stride) convention with the extra pixel of
// padding (when the total is odd) placed at the end.
int conv_out_dim(int in, int k, int stride, Padding pad);
int conv_pad_before(int in, int k, int stride, Padding pad);

Tensor conv2d_forward(const Tensor& x, const Tensor& w, const Tensor* bias, const ConvSpec& spec);
// Returns grad wrt input; accumulates into gw/gb when non-null (sized like w / bias).
Tensor conv2d_backward(const Tensor& x, const Tensor& w, const ConvSpec& spec, const Tensor& gout,
                       double* gw, double* gb);

struct BatchNormCache {
    Tensor x_hat;
    std::vector<double> inv_std;  // per channel
};

// training=true normalizes by batch statistics and updates the running stats
// in place; training=false normalizes by the running stats. cache may be null
// when no backward pass will follow.
Tensor batch_norm_forward(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                          Tensor& running_mean, Tensor& running_var, bool training, double eps,
                          double momentum, BatchNormCache* cache);
// Training-mode backward (through the batch statistics).
Tensor batch_norm_backward(const BatchNormCache& cache, const Tensor& gamma, const Tensor& gout,
                           double* dgamma, double* dbeta);

Tensor prelu_forward(const Tensor& x, const Tensor& slope);
Tensor prelu_backward(const Tensor& x, const Tensor& slope, const Tensor& gout, double* dslope);

Tensor avg_pool_forward(const Tensor& x, int kernel);
Tensor avg_pool_backward(const std::vector<std::int64_t>& in_shape, int kernel, const Tensor& gout);

// Row-wise stable softmax on [B, N].
Tensor softmax_forward(const Tensor& logits);
Tensor softmax_backward(const Tensor& probs, const Tensor& gprobs);

// [B,H,W,Ca] ++ [B,H,W,Cb] -> [B,H,W,Ca+Cb]
Tensor concat_channels(const Tensor& a, const Tensor& b);
// Splits gout of a concat back onto the two inputs (accumulating).
void concat_channels_backward(const Tensor& gout, Tensor& ga, Tensor& gb);

}  // namespace remnet::ops
