#include "remnet/kernels.hpp"

#include <cmath>

namespace remnet::kern {
namespace {

double s_dot(const double* x, const double* y, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
    return acc;
}

void s_axpy(double a, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void s_sub(const double* x, const double* y, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = x[i] - y[i];
}

void s_scale(double a, double* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) x[i] *= a;
}

void s_acc(const double* x, double* acc, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) acc[i] += x[i];
}

void s_acc_sq(const double* x, double* acc, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) acc[i] += x[i] * x[i];
}

double s_sum(const double* x, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i];
    return acc;
}

double s_sum_sq(const double* x, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i] * x[i];
    return acc;
}

double s_sum_abs(const double* x, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += std::fabs(x[i]);
    return acc;
}

void s_fma_row(const double* x, const double* a, const double* b, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = x[i] * a[i] + b[i];
}

// Per output element, tap contributions accumulate in (kw, ci) order; the
// SIMD variants preserve that order per lane.
void s_conv_row_fwd(const double* x_row, int w_dim, const double* w_row, int kw, int stride,
                    int pad_w, double* o_row, int wo_dim, int cin, int cout) {
    for (int wo = 0; wo < wo_dim; ++wo) {
        double* out = o_row + static_cast<std::size_t>(wo) * cout;
        for (int k = 0; k < kw; ++k) {
            const int wi = wo * stride - pad_w + k;
            if (wi < 0 || wi >= w_dim) continue;
            const double* x = x_row + static_cast<std::size_t>(wi) * cin;
            const double* w = w_row + static_cast<std::size_t>(k) * cin * cout;
            for (int ci = 0; ci < cin; ++ci) {
                const double xv = x[ci];
                const double* wr = w + static_cast<std::size_t>(ci) * cout;
                for (int co = 0; co < cout; ++co) out[co] += xv * wr[co];
            }
        }
    }
}

void s_conv_row_bwd_in(const double* g_row, int wo_dim, const double* w_t_row, int kw,
                       int stride, int pad_w, double* gi_row, int w_dim, int cin, int cout) {
    for (int wo = 0; wo < wo_dim; ++wo) {
        const double* g = g_row + static_cast<std::size_t>(wo) * cout;
        for (int k = 0; k < kw; ++k) {
            const int wi = wo * stride - pad_w + k;
            if (wi < 0 || wi >= w_dim) continue;
            double* gi = gi_row + static_cast<std::size_t>(wi) * cin;
            const double* wt = w_t_row + static_cast<std::size_t>(k) * cout * cin;
            for (int co = 0; co < cout; ++co) {
                const double gv = g[co];
                const double* wr = wt + static_cast<std::size_t>(co) * cin;
                for (int ci = 0; ci < cin; ++ci) gi[ci] += gv * wr[ci];
            }
        }
    }
}

void s_conv_row_bwd_w(const double* x_row, int w_dim, const double* g_row, int wo_dim, int stride,
                      int pad_w, double* gw_row, int kw, int cin, int cout) {
    for (int wo = 0; wo < wo_dim; ++wo) {
        const double* g = g_row + static_cast<std::size_t>(wo) * cout;
        for (int k = 0; k < kw; ++k) {
            const int wi = wo * stride - pad_w + k;
            if (wi < 0 || wi >= w_dim) continue;
            const double* x = x_row + static_cast<std::size_t>(wi) * cin;
            double* gw = gw_row + static_cast<std::size_t>(k) * cin * cout;
            for (int ci = 0; ci < cin; ++ci) {
                const double xv = x[ci];
                double* gwr = gw + static_cast<std::size_t>(ci) * cout;
                for (int co = 0; co < cout; ++co) gwr[co] += xv * g[co];
            }
        }
    }
}

}  // namespace

const KernelTable& scalar_table() {
    static const KernelTable table = {
        "scalar", s_dot, s_axpy, s_sub, s_scale, s_acc, s_acc_sq,
        s_sum, s_sum_sq, s_sum_abs, s_fma_row,
        s_conv_row_fwd, s_conv_row_bwd_in, s_conv_row_bwd_w,
    };
    return table;
}

}  // namespace remnet::kern
