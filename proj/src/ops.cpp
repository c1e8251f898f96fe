#include "remnet/ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

#include "remnet/kernels.hpp"

namespace remnet::ops {

namespace {

void require(bool cond, const char* msg) {
    if (!cond) throw std::invalid_argument(msg);
}

}  // namespace

int conv_out_dim(int in, int k, int stride, Padding pad) {
    if (pad == Padding::Same) {
        return (in + stride - 1) / stride;
    }
    return (in - k) / stride + 1;
}

int conv_pad_before(int in, int k, int stride, Padding pad) {
    if (pad == Padding::Valid) return 0;
    const int out = conv_out_dim(in, k, stride, pad);
    const int total = std::max((out - 1) * stride + k - in, 0);
    return total / 2;
}

Tensor conv2d_forward(const Tensor& x, const Tensor& w, const Tensor* bias, const ConvSpec& spec) {
    require(x.rank() == 4, "conv2d: input must be [B,H,W,C]");
    require(w.rank() == 4, "conv2d: weights must be [KH,KW,Cin,Cout]");
    require(w.dim(0) == spec.kh && w.dim(1) == spec.kw, "conv2d: kernel size mismatch");
    require(w.dim(2) == x.dim(3), "conv2d: input channel mismatch");
    const int B = static_cast<int>(x.dim(0));
    const int H = static_cast<int>(x.dim(1));
    const int W = static_cast<int>(x.dim(2));
    const int Cin = static_cast<int>(x.dim(3));
    const int Cout = static_cast<int>(w.dim(3));
    if (bias != nullptr) {
        require(bias->rank() == 1 && bias->dim(0) == Cout, "conv2d: bias size mismatch");
    }
    if (spec.pad == Padding::Valid) {
        require(H >= spec.kh && W >= spec.kw, "conv2d: input smaller than kernel");
    }
    const int HO = conv_out_dim(H, spec.kh, spec.stride, spec.pad);
    const int WO = conv_out_dim(W, spec.kw, spec.stride, spec.pad);
    const int ph = conv_pad_before(H, spec.kh, spec.stride, spec.pad);
    const int pw = conv_pad_before(W, spec.kw, spec.stride, spec.pad);

    Tensor out({B, HO, WO, Cout});
    const double* xd = x.data();
    const double* wd = w.data();
    double* od = out.data();

#pragma omp parallel for collapse(2) schedule(static)
    for (int b = 0; b < B; ++b) {
        for (int ho = 0; ho < HO; ++ho) {
            double* orow = od + (static_cast<std::size_t>(b) * HO + ho) * WO * Cout;
            if (bias != nullptr) {
                for (int wo = 0; wo < WO; ++wo) {
                    std::memcpy(orow + static_cast<std::size_t>(wo) * Cout, bias->data(),
                                sizeof(double) * Cout);
                }
            }
            for (int kh = 0; kh < spec.kh; ++kh) {
                const int hi = ho * spec.stride - ph + kh;
                if (hi < 0 || hi >= H) continue;
                kern::conv_row_fwd(xd + (static_cast<std::size_t>(b) * H + hi) * W * Cin, W,
                                   wd + static_cast<std::size_t>(kh) * spec.kw * Cin * Cout,
                                   spec.kw, spec.stride, pw, orow, WO, Cin, Cout);
            }
        }
    }
    return out;
}

Tensor conv2d_backward(const Tensor& x, const Tensor& w, const ConvSpec& spec, const Tensor& gout,
                       double* gw, double* gb) {
    const int B = static_cast<int>(x.dim(0));
    const int H = static_cast<int>(x.dim(1));
    const int W = static_cast<int>(x.dim(2));
    const int Cin = static_cast<int>(x.dim(3));
    const int Cout = static_cast<int>(w.dim(3));
    const int HO = static_cast<int>(gout.dim(1));
    const int WO = static_cast<int>(gout.dim(2));
    require(gout.dim(0) == B && gout.dim(3) == Cout, "conv2d backward: gout shape mismatch");
    const int ph = conv_pad_before(H, spec.kh, spec.stride, spec.pad);
    const int pw = conv_pad_before(W, spec.kw, spec.stride, spec.pad);

    Tensor gin({B, H, W, Cin});
    const double* xd = x.data();
    const double* wd = w.data();
    const double* gd = gout.data();
    double* gid = gin.data();

    // Transposed weights [KH][KW][Cout][Cin] keep the input-gradient kernel
    // contiguous over ci.
    std::vector<double> w_t(w.numel());
    for (int kh = 0; kh < spec.kh; ++kh) {
        for (int kw = 0; kw < spec.kw; ++kw) {
            const std::size_t base = (static_cast<std::size_t>(kh) * spec.kw + kw) *
                                     static_cast<std::size_t>(Cin) * Cout;
            for (int ci = 0; ci < Cin; ++ci) {
                for (int co = 0; co < Cout; ++co) {
                    w_t[base + static_cast<std::size_t>(co) * Cin + ci] =
                        wd[base + static_cast<std::size_t>(ci) * Cout + co];
                }
            }
        }
    }

#pragma omp parallel for schedule(static)
    for (int b = 0; b < B; ++b) {
        for (int ho = 0; ho < HO; ++ho) {
            const double* grow = gd + (static_cast<std::size_t>(b) * HO + ho) * WO * Cout;
            for (int kh = 0; kh < spec.kh; ++kh) {
                const int hi = ho * spec.stride - ph + kh;
                if (hi < 0 || hi >= H) continue;
                kern::conv_row_bwd_in(grow, WO,
                                      w_t.data() +
                                          static_cast<std::size_t>(kh) * spec.kw * Cin * Cout,
                                      spec.kw, spec.stride, pw,
                                      gid + (static_cast<std::size_t>(b) * H + hi) * W * Cin, W,
                                      Cin, Cout);
            }
        }
    }

    if (gw != nullptr) {
        // Each kernel row of gw is owned by exactly one iteration, so the
        // parallel loop is write-disjoint and the accumulation order per
        // element is fixed regardless of thread count.
#pragma omp parallel for schedule(static)
        for (int kh = 0; kh < spec.kh; ++kh) {
            double* gwrow = gw + static_cast<std::size_t>(kh) * spec.kw * Cin * Cout;
            for (int b = 0; b < B; ++b) {
                for (int ho = 0; ho < HO; ++ho) {
                    const int hi = ho * spec.stride - ph + kh;
                    if (hi < 0 || hi >= H) continue;
                    kern::conv_row_bwd_w(
                        xd + (static_cast<std::size_t>(b) * H + hi) * W * Cin, W,
                        gd + (static_cast<std::size_t>(b) * HO + ho) * WO * Cout, WO, spec.stride,
                        pw, gwrow, spec.kw, Cin, Cout);
                }
            }
        }
    }

    if (gb != nullptr) {
        const std::size_t rows = static_cast<std::size_t>(B) * HO * WO;
        for (std::size_t r = 0; r < rows; ++r) {
            kern::acc(gd + r * Cout, gb, Cout);
        }
    }
    return gin;
}

Tensor batch_norm_forward(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                          Tensor& running_mean, Tensor& running_var, bool training, double eps,
                          double momentum, BatchNormCache* cache) {
    require(x.rank() == 4, "batch_norm: input must be [B,H,W,C]");
    const int C = static_cast<int>(x.dim(3));
    require(gamma.numel() == static_cast<std::size_t>(C) &&
                beta.numel() == static_cast<std::size_t>(C),
            "batch_norm: channel count mismatch");
    const std::size_t rows = x.numel() / static_cast<std::size_t>(C);
    if (training && x.dim(0) == 0) {
        throw std::invalid_argument("batch_norm: zero batch in training mode");
    }

    std::vector<double> mean(C, 0.0), var(C, 0.0);
    if (training) {
        std::vector<double> sum(C, 0.0), sum_sq(C, 0.0);
        for (std::size_t r = 0; r < rows; ++r) {
            kern::acc(x.data() + r * C, sum.data(), C);
            kern::acc_sq(x.data() + r * C, sum_sq.data(), C);
        }
        const double inv_m = 1.0 / static_cast<double>(rows);
        for (int c = 0; c < C; ++c) {
            mean[c] = sum[c] * inv_m;
            // Population variance; clamped at zero against rounding.
            var[c] = std::max(sum_sq[c] * inv_m - mean[c] * mean[c], 0.0);
            running_mean[c] = momentum * running_mean[c] + (1.0 - momentum) * mean[c];
            running_var[c] = momentum * running_var[c] + (1.0 - momentum) * var[c];
        }
    } else {
        for (int c = 0; c < C; ++c) {
            mean[c] = running_mean[c];
            var[c] = running_var[c];
        }
    }

    std::vector<double> inv_std(C);
    std::vector<double> a(C), b(C);
    for (int c = 0; c < C; ++c) {
        inv_std[c] = 1.0 / std::sqrt(var[c] + eps);
        a[c] = gamma[c] * inv_std[c];
        b[c] = beta[c] - mean[c] * a[c];
    }

    Tensor out(std::vector<std::int64_t>(x.shape()));
    for (std::size_t r = 0; r < rows; ++r) {
        kern::fma_row(x.data() + r * C, a.data(), b.data(), out.data() + r * C, C);
    }

    if (cache != nullptr) {
        cache->x_hat = Tensor(std::vector<std::int64_t>(x.shape()));
        std::vector<double> ha(C), hb(C);
        for (int c = 0; c < C; ++c) {
            ha[c] = inv_std[c];
            hb[c] = -mean[c] * inv_std[c];
        }
        for (std::size_t r = 0; r < rows; ++r) {
            kern::fma_row(x.data() + r * C, ha.data(), hb.data(), cache->x_hat.data() + r * C, C);
        }
        cache->inv_std = std::move(inv_std);
    }
    return out;
}

Tensor batch_norm_backward(const BatchNormCache& cache, const Tensor& gamma, const Tensor& gout,
                           double* dgamma, double* dbeta) {
    const Tensor& x_hat = cache.x_hat;
    require(x_hat.same_shape(gout), "batch_norm backward: shape mismatch");
    const int C = static_cast<int>(x_hat.dim(3));
    const std::size_t rows = x_hat.numel() / static_cast<std::size_t>(C);
    const double m = static_cast<double>(rows);

    std::vector<double> sum_g(C, 0.0), sum_gx(C, 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
        const double* g = gout.data() + r * C;
        const double* xh = x_hat.data() + r * C;
        for (int c = 0; c < C; ++c) {
            sum_g[c] += g[c];
            sum_gx[c] += g[c] * xh[c];
        }
    }
    if (dgamma != nullptr) {
        for (int c = 0; c < C; ++c) dgamma[c] += sum_gx[c];
    }
    if (dbeta != nullptr) {
        for (int c = 0; c < C; ++c) dbeta[c] += sum_g[c];
    }

    // dx = gamma * inv_std / m * (m*g - sum_g - x_hat * sum_gx)
    Tensor gin(std::vector<std::int64_t>(x_hat.shape()));
    std::vector<double> k(C);
    for (int c = 0; c < C; ++c) k[c] = gamma[c] * cache.inv_std[c] / m;
    for (std::size_t r = 0; r < rows; ++r) {
        const double* g = gout.data() + r * C;
        const double* xh = x_hat.data() + r * C;
        double* gi = gin.data() + r * C;
        for (int c = 0; c < C; ++c) {
            gi[c] = k[c] * (m * g[c] - sum_g[c] - xh[c] * sum_gx[c]);
        }
    }
    return gin;
}

Tensor prelu_forward(const Tensor& x, const Tensor& slope) {
    require(x.rank() == 4, "prelu: input must be [B,H,W,C]");
    const int C = static_cast<int>(x.dim(3));
    require(slope.numel() == static_cast<std::size_t>(C), "prelu: slope length mismatch");
    Tensor out(std::vector<std::int64_t>(x.shape()));
    const std::size_t rows = x.numel() / static_cast<std::size_t>(C);
    for (std::size_t r = 0; r < rows; ++r) {
        const double* xi = x.data() + r * C;
        double* oi = out.data() + r * C;
        for (int c = 0; c < C; ++c) {
            oi[c] = xi[c] > 0.0 ? xi[c] : slope[c] * xi[c];
        }
    }
    return out;
}

Tensor prelu_backward(const Tensor& x, const Tensor& slope, const Tensor& gout, double* dslope) {
    const int C = static_cast<int>(x.dim(3));
    Tensor gin(std::vector<std::int64_t>(x.shape()));
    const std::size_t rows = x.numel() / static_cast<std::size_t>(C);
    for (std::size_t r = 0; r < rows; ++r) {
        const double* xi = x.data() + r * C;
        const double* g = gout.data() + r * C;
        double* gi = gin.data() + r * C;
        for (int c = 0; c < C; ++c) {
            if (xi[c] > 0.0) {
                gi[c] = g[c];
            } else {
                gi[c] = g[c] * slope[c];
                if (dslope != nullptr) dslope[c] += g[c] * xi[c];
            }
        }
    }
    return gin;
}

Tensor avg_pool_forward(const Tensor& x, int kernel) {
    require(x.rank() == 4, "avg_pool: input must be [B,H,W,C]");
    const int B = static_cast<int>(x.dim(0));
    const int H = static_cast<int>(x.dim(1));
    const int W = static_cast<int>(x.dim(2));
    const int C = static_cast<int>(x.dim(3));
    require(kernel > 0 && H % kernel == 0 && W % kernel == 0,
            "avg_pool: dimensions not divisible by kernel");
    const int HO = H / kernel;
    const int WO = W / kernel;
    const double inv = 1.0 / (static_cast<double>(kernel) * kernel);
    Tensor out({B, HO, WO, C});
    for (int b = 0; b < B; ++b) {
        for (int ho = 0; ho < HO; ++ho) {
            for (int wo = 0; wo < WO; ++wo) {
                double* orow = out.data() + ((static_cast<std::size_t>(b) * HO + ho) * WO + wo) * C;
                for (int kh = 0; kh < kernel; ++kh) {
                    for (int kw = 0; kw < kernel; ++kw) {
                        const int hi = ho * kernel + kh;
                        const int wi = wo * kernel + kw;
                        kern::acc(x.data() + ((static_cast<std::size_t>(b) * H + hi) * W + wi) * C,
                                  orow, C);
                    }
                }
                kern::scale(inv, orow, C);
            }
        }
    }
    return out;
}

Tensor avg_pool_backward(const std::vector<std::int64_t>& in_shape, int kernel,
                         const Tensor& gout) {
    const int B = static_cast<int>(in_shape[0]);
    const int H = static_cast<int>(in_shape[1]);
    const int W = static_cast<int>(in_shape[2]);
    const int C = static_cast<int>(in_shape[3]);
    const int HO = H / kernel;
    const int WO = W / kernel;
    const double inv = 1.0 / (static_cast<double>(kernel) * kernel);
    Tensor gin({B, H, W, C});
    for (int b = 0; b < B; ++b) {
        for (int ho = 0; ho < HO; ++ho) {
            for (int wo = 0; wo < WO; ++wo) {
                const double* grow =
                    gout.data() + ((static_cast<std::size_t>(b) * HO + ho) * WO + wo) * C;
                for (int kh = 0; kh < kernel; ++kh) {
                    for (int kw = 0; kw < kernel; ++kw) {
                        const int hi = ho * kernel + kh;
                        const int wi = wo * kernel + kw;
                        kern::axpy(inv, grow,
                                   gin.data() +
                                       ((static_cast<std::size_t>(b) * H + hi) * W + wi) * C,
                                   C);
                    }
                }
            }
        }
    }
    return gin;
}

Tensor softmax_forward(const Tensor& logits) {
    require(logits.rank() == 2, "softmax: input must be [B,N]");
    const int B = static_cast<int>(logits.dim(0));
    const int N = static_cast<int>(logits.dim(1));
    Tensor out({B, N});
    for (int b = 0; b < B; ++b) {
        const double* row = logits.data() + static_cast<std::size_t>(b) * N;
        double* orow = out.data() + static_cast<std::size_t>(b) * N;
        double mx = row[0];
        for (int i = 1; i < N; ++i) mx = std::max(mx, row[i]);
        double total = 0.0;
        for (int i = 0; i < N; ++i) {
            orow[i] = std::exp(row[i] - mx);
            total += orow[i];
        }
        const double inv = 1.0 / total;
        for (int i = 0; i < N; ++i) orow[i] *= inv;
    }
    return out;
}

Tensor softmax_backward(const Tensor& probs, const Tensor& gprobs) {
    const int B = static_cast<int>(probs.dim(0));
    const int N = static_cast<int>(probs.dim(1));
    Tensor gin({B, N});
    for (int b = 0; b < B; ++b) {
        const double* p = probs.data() + static_cast<std::size_t>(b) * N;
        const double* g = gprobs.data() + static_cast<std::size_t>(b) * N;
        double* gi = gin.data() + static_cast<std::size_t>(b) * N;
        const double gp = kern::dot(g, p, N);
        for (int i = 0; i < N; ++i) gi[i] = p[i] * (g[i] - gp);
    }
    return gin;
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
    require(a.rank() == 4 && b.rank() == 4, "concat: inputs must be [B,H,W,C]");
    require(a.dim(0) == b.dim(0) && a.dim(1) == b.dim(1) && a.dim(2) == b.dim(2),
            "concat: spatial shape mismatch");
    const std::size_t rows = a.numel() / static_cast<std::size_t>(a.dim(3));
    const int Ca = static_cast<int>(a.dim(3));
    const int Cb = static_cast<int>(b.dim(3));
    Tensor out({a.dim(0), a.dim(1), a.dim(2), static_cast<std::int64_t>(Ca + Cb)});
    for (std::size_t r = 0; r < rows; ++r) {
        double* orow = out.data() + r * (Ca + Cb);
        std::memcpy(orow, a.data() + r * Ca, sizeof(double) * Ca);
        std::memcpy(orow + Ca, b.data() + r * Cb, sizeof(double) * Cb);
    }
    return out;
}

void concat_channels_backward(const Tensor& gout, Tensor& ga, Tensor& gb) {
    const int Ca = static_cast<int>(ga.dim(3));
    const int Cb = static_cast<int>(gb.dim(3));
    const std::size_t rows = ga.numel() / static_cast<std::size_t>(Ca);
    for (std::size_t r = 0; r < rows; ++r) {
        const double* grow = gout.data() + r * (Ca + Cb);
        kern::acc(grow, ga.data() + r * Ca, Ca);
        kern::acc(grow + Ca, gb.data() + r * Cb, Cb);
    }
}

}  // namespace remnet::ops
