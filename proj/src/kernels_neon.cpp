// NEON kernels for aarch64, 2-wide double lanes. Mirrors the scalar loop
// structure; compiled only on arm64 targets.

#include "remnet/kernels.hpp"

#include <arm_neon.h>

#include <algorithm>
#include <cmath>

namespace remnet::kern {
namespace {

double n_dot(const double* x, const double* y, std::size_t n) {
    float64x2_t a0 = vdupq_n_f64(0.0);
    float64x2_t a1 = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        a0 = vfmaq_f64(a0, vld1q_f64(x + i), vld1q_f64(y + i));
        a1 = vfmaq_f64(a1, vld1q_f64(x + i + 2), vld1q_f64(y + i + 2));
    }
    for (; i + 2 <= n; i += 2) {
        a0 = vfmaq_f64(a0, vld1q_f64(x + i), vld1q_f64(y + i));
    }
    double acc = vaddvq_f64(a0) + vaddvq_f64(a1);
    for (; i < n; ++i) acc += x[i] * y[i];
    return acc;
}

// Elementwise kernels stay mul-then-add (no fused op) so they are bitwise
// identical to the scalar reference; reductions may fuse.
void n_axpy(double a, const double* x, double* y, std::size_t n) {
    float64x2_t va = vdupq_n_f64(a);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        vst1q_f64(y + i, vaddq_f64(vld1q_f64(y + i), vmulq_f64(va, vld1q_f64(x + i))));
    }
    for (; i < n; ++i) y[i] += a * x[i];
}

void n_sub(const double* x, const double* y, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        vst1q_f64(out + i, vsubq_f64(vld1q_f64(x + i), vld1q_f64(y + i)));
    }
    for (; i < n; ++i) out[i] = x[i] - y[i];
}

void n_scale(double a, double* x, std::size_t n) {
    float64x2_t va = vdupq_n_f64(a);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        vst1q_f64(x + i, vmulq_f64(vld1q_f64(x + i), va));
    }
    for (; i < n; ++i) x[i] *= a;
}

void n_acc(const double* x, double* acc, std::size_t n) {
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        vst1q_f64(acc + i, vaddq_f64(vld1q_f64(acc + i), vld1q_f64(x + i)));
    }
    for (; i < n; ++i) acc[i] += x[i];
}

void n_acc_sq(const double* x, double* acc, std::size_t n) {
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        float64x2_t vx = vld1q_f64(x + i);
        vst1q_f64(acc + i, vaddq_f64(vld1q_f64(acc + i), vmulq_f64(vx, vx)));
    }
    for (; i < n; ++i) acc[i] += x[i] * x[i];
}

double n_sum(const double* x, std::size_t n) {
    float64x2_t a0 = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) a0 = vaddq_f64(a0, vld1q_f64(x + i));
    double acc = vaddvq_f64(a0);
    for (; i < n; ++i) acc += x[i];
    return acc;
}

double n_sum_sq(const double* x, std::size_t n) {
    float64x2_t a0 = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        float64x2_t v = vld1q_f64(x + i);
        a0 = vfmaq_f64(a0, v, v);
    }
    double acc = vaddvq_f64(a0);
    for (; i < n; ++i) acc += x[i] * x[i];
    return acc;
}

double n_sum_abs(const double* x, std::size_t n) {
    float64x2_t a0 = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) a0 = vaddq_f64(a0, vabsq_f64(vld1q_f64(x + i)));
    double acc = vaddvq_f64(a0);
    for (; i < n; ++i) acc += std::fabs(x[i]);
    return acc;
}

void n_fma_row(const double* x, const double* a, const double* b, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        vst1q_f64(out + i,
                  vaddq_f64(vmulq_f64(vld1q_f64(x + i), vld1q_f64(a + i)), vld1q_f64(b + i)));
    }
    for (; i < n; ++i) out[i] = x[i] * a[i] + b[i];
}

int floor_div(int a, int b) {
    return a >= 0 ? a / b : -((-a + b - 1) / b);
}

void tap_bounds(int k, int w_dim, int stride, int pad_w, int wo_dim, int* begin, int* end) {
    *begin = std::max(0, floor_div(pad_w - k + stride - 1, stride));
    *end = std::min(wo_dim, floor_div(w_dim - 1 + pad_w - k, stride) + 1);
}

// Row kernels keep the scalar (kw, ci) accumulation order per output element
// and stay unfused in forward/weight-gradient for bitwise parity.
void n_conv_row_fwd(const double* x_row, int w_dim, const double* w_row, int kw, int stride,
                    int pad_w, double* o_row, int wo_dim, int cin, int cout) {
    for (int k = 0; k < kw; ++k) {
        int wo_begin, wo_end;
        tap_bounds(k, w_dim, stride, pad_w, wo_dim, &wo_begin, &wo_end);
        for (int ci = 0; ci < cin; ++ci) {
            const double* w = w_row + (static_cast<std::size_t>(k) * cin + ci) * cout;
            const double* x = x_row + static_cast<std::size_t>(ci) +
                              static_cast<std::size_t>(wo_begin * stride - pad_w + k) * cin;
            const std::size_t x_step = static_cast<std::size_t>(stride) * cin;
            double* out = o_row + static_cast<std::size_t>(wo_begin) * cout;
            for (int wo = wo_begin; wo < wo_end; ++wo, x += x_step, out += cout) {
                const float64x2_t xv = vdupq_n_f64(*x);
                int co = 0;
                for (; co + 2 <= cout; co += 2) {
                    float64x2_t acc = vld1q_f64(out + co);
                    acc = vaddq_f64(acc, vmulq_f64(xv, vld1q_f64(w + co)));
                    vst1q_f64(out + co, acc);
                }
                for (; co < cout; ++co) out[co] += *x * w[co];
            }
        }
    }
}

void n_conv_row_bwd_in(const double* g_row, int wo_dim, const double* w_t_row, int kw,
                       int stride, int pad_w, double* gi_row, int w_dim, int cin, int cout) {
    for (int k = 0; k < kw; ++k) {
        int wo_begin, wo_end;
        tap_bounds(k, w_dim, stride, pad_w, wo_dim, &wo_begin, &wo_end);
        const double* wt = w_t_row + static_cast<std::size_t>(k) * cout * cin;
        const double* g = g_row + static_cast<std::size_t>(wo_begin) * cout;
        double* gi0 = gi_row + static_cast<std::size_t>(wo_begin * stride - pad_w + k) * cin;
        const std::size_t gi_step = static_cast<std::size_t>(stride) * cin;
        for (int wo = wo_begin; wo < wo_end; ++wo, g += cout, gi0 += gi_step) {
            int ci = 0;
            for (; ci + 2 <= cin; ci += 2) {
                float64x2_t acc = vld1q_f64(gi0 + ci);
                const double* wr = wt + ci;
                for (int co = 0; co < cout; ++co, wr += cin) {
                    acc = vfmaq_f64(acc, vdupq_n_f64(g[co]), vld1q_f64(wr));
                }
                vst1q_f64(gi0 + ci, acc);
            }
            for (; ci < cin; ++ci) {
                double acc = gi0[ci];
                const double* wr = wt + ci;
                for (int co = 0; co < cout; ++co, wr += cin) acc += g[co] * *wr;
                gi0[ci] = acc;
            }
        }
    }
}

void n_conv_row_bwd_w(const double* x_row, int w_dim, const double* g_row, int wo_dim, int stride,
                      int pad_w, double* gw_row, int kw, int cin, int cout) {
    for (int k = 0; k < kw; ++k) {
        int wo_begin, wo_end;
        tap_bounds(k, w_dim, stride, pad_w, wo_dim, &wo_begin, &wo_end);
        for (int ci = 0; ci < cin; ++ci) {
            double* gwr = gw_row + (static_cast<std::size_t>(k) * cin + ci) * cout;
            const double* g = g_row + static_cast<std::size_t>(wo_begin) * cout;
            const double* x = x_row + static_cast<std::size_t>(ci) +
                              static_cast<std::size_t>(wo_begin * stride - pad_w + k) * cin;
            const std::size_t x_step = static_cast<std::size_t>(stride) * cin;
            for (int wo = wo_begin; wo < wo_end; ++wo, g += cout, x += x_step) {
                const float64x2_t xv = vdupq_n_f64(*x);
                int co = 0;
                for (; co + 2 <= cout; co += 2) {
                    float64x2_t acc = vld1q_f64(gwr + co);
                    acc = vaddq_f64(acc, vmulq_f64(xv, vld1q_f64(g + co)));
                    vst1q_f64(gwr + co, acc);
                }
                for (; co < cout; ++co) gwr[co] += *x * g[co];
            }
        }
    }
}

}  // namespace

const KernelTable& neon_table() {
    static const KernelTable table = {
        "neon", n_dot, n_axpy, n_sub, n_scale, n_acc, n_acc_sq,
        n_sum, n_sum_sq, n_sum_abs, n_fma_row,
        n_conv_row_fwd, n_conv_row_bwd_in, n_conv_row_bwd_w,
    };
    return table;
}

}  // namespace remnet::kern
