// AVX2+FMA kernels, 4-wide double lanes. This TU is compiled with
// -mavx2 -mfma; the dispatcher only installs the table when the CPU
// reports AVX2 support.

#include "remnet/kernels.hpp"

#include <immintrin.h>

#include <algorithm>
#include <cmath>

namespace remnet::kern {
namespace {

double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d sh = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

int floor_div(int a, int b) {
    return a >= 0 ? a / b : -((-a + b - 1) / b);
}

// Output positions wo for which wi = wo*stride - pad + k lies in [0, w_dim).
void tap_bounds(int k, int w_dim, int stride, int pad_w, int wo_dim, int* begin, int* end) {
    *begin = std::max(0, floor_div(pad_w - k + stride - 1, stride));
    *end = std::min(wo_dim, floor_div(w_dim - 1 + pad_w - k, stride) + 1);
}

double v_dot(const double* x, const double* y, std::size_t n) {
    __m256d a0 = _mm256_setzero_pd();
    __m256d a1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        a0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), a0);
        a1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4), a1);
    }
    for (; i + 4 <= n; i += 4) {
        a0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), a0);
    }
    double acc = hsum(_mm256_add_pd(a0, a1));
    for (; i < n; ++i) acc += x[i] * y[i];
    return acc;
}

// Elementwise kernels stay mul-then-add (no FMA) so they are bitwise
// identical to the scalar reference; reductions may fuse since their
// accumulation order already differs.
void v_axpy(double a, const double* x, double* y, std::size_t n) {
    __m256d va = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d vy = _mm256_loadu_pd(y + i);
        vy = _mm256_add_pd(vy, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
        _mm256_storeu_pd(y + i, vy);
    }
    for (; i < n; ++i) y[i] += a * x[i];
}

void v_sub(const double* x, const double* y, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(out + i, _mm256_sub_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    }
    for (; i < n; ++i) out[i] = x[i] - y[i];
}

void v_scale(double a, double* x, std::size_t n) {
    __m256d va = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(x + i, _mm256_mul_pd(_mm256_loadu_pd(x + i), va));
    }
    for (; i < n; ++i) x[i] *= a;
}

void v_acc(const double* x, double* acc, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(acc + i, _mm256_add_pd(_mm256_loadu_pd(acc + i), _mm256_loadu_pd(x + i)));
    }
    for (; i < n; ++i) acc[i] += x[i];
}

void v_acc_sq(const double* x, double* acc, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d vx = _mm256_loadu_pd(x + i);
        _mm256_storeu_pd(acc + i,
                         _mm256_add_pd(_mm256_loadu_pd(acc + i), _mm256_mul_pd(vx, vx)));
    }
    for (; i < n; ++i) acc[i] += x[i] * x[i];
}

double v_sum(const double* x, std::size_t n) {
    __m256d a0 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) a0 = _mm256_add_pd(a0, _mm256_loadu_pd(x + i));
    double acc = hsum(a0);
    for (; i < n; ++i) acc += x[i];
    return acc;
}

double v_sum_sq(const double* x, std::size_t n) {
    __m256d a0 = _mm256_setzero_pd();
    __m256d a1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256d v0 = _mm256_loadu_pd(x + i);
        __m256d v1 = _mm256_loadu_pd(x + i + 4);
        a0 = _mm256_fmadd_pd(v0, v0, a0);
        a1 = _mm256_fmadd_pd(v1, v1, a1);
    }
    for (; i + 4 <= n; i += 4) {
        __m256d v0 = _mm256_loadu_pd(x + i);
        a0 = _mm256_fmadd_pd(v0, v0, a0);
    }
    double acc = hsum(_mm256_add_pd(a0, a1));
    for (; i < n; ++i) acc += x[i] * x[i];
    return acc;
}

double v_sum_abs(const double* x, std::size_t n) {
    const __m256d mask = _mm256_castsi256_pd(_mm256_set1_epi64x(0x7fffffffffffffffLL));
    __m256d a0 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        a0 = _mm256_add_pd(a0, _mm256_and_pd(_mm256_loadu_pd(x + i), mask));
    }
    double acc = hsum(a0);
    for (; i < n; ++i) acc += std::fabs(x[i]);
    return acc;
}

void v_fma_row(const double* x, const double* a, const double* b, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d r = _mm256_add_pd(_mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(a + i)),
                                  _mm256_loadu_pd(b + i));
        _mm256_storeu_pd(out + i, r);
    }
    for (; i < n; ++i) out[i] = x[i] * a[i] + b[i];
}

// Forward row kernel, register-blocked over four output positions: the
// accumulators for a 4-wide wo block stay in registers across the whole
// (kw, ci) tap loop and each weight vector is loaded once per block. Per
// output element the contributions still arrive in (kw, ci) order with
// unfused products, bitwise identical to the scalar reference.
void v_conv_row_fwd(const double* x_row, int w_dim, const double* w_row, int kw, int stride,
                    int pad_w, double* o_row, int wo_dim, int cin, int cout) {
    // Output positions where every tap of the kernel row is in bounds.
    const int safe_begin = std::max(0, floor_div(pad_w + stride - 1, stride));
    const int safe_end = std::min(wo_dim, floor_div(w_dim - kw + pad_w, stride) + 1);

    auto edge_span = [&](int wo_from, int wo_to) {
        for (int k = 0; k < kw; ++k) {
            int wo_begin, wo_end;
            tap_bounds(k, w_dim, stride, pad_w, wo_dim, &wo_begin, &wo_end);
            wo_begin = std::max(wo_begin, wo_from);
            wo_end = std::min(wo_end, wo_to);
            for (int ci = 0; ci < cin; ++ci) {
                const double* w = w_row + (static_cast<std::size_t>(k) * cin + ci) * cout;
                for (int wo = wo_begin; wo < wo_end; ++wo) {
                    const double xv = x_row[static_cast<std::size_t>(wo * stride - pad_w + k) *
                                                cin +
                                            ci];
                    double* out = o_row + static_cast<std::size_t>(wo) * cout;
                    const __m256d xvv = _mm256_set1_pd(xv);
                    int co = 0;
                    for (; co + 4 <= cout; co += 4) {
                        __m256d acc = _mm256_loadu_pd(out + co);
                        acc = _mm256_add_pd(acc, _mm256_mul_pd(xvv, _mm256_loadu_pd(w + co)));
                        _mm256_storeu_pd(out + co, acc);
                    }
                    for (; co < cout; ++co) out[co] += xv * w[co];
                }
            }
        }
    };

    if (safe_end <= safe_begin) {
        edge_span(0, wo_dim);
        return;
    }
    edge_span(0, safe_begin);

    const std::size_t x_step = static_cast<std::size_t>(stride) * cin;
    int wo = safe_begin;
    for (; wo + 4 <= safe_end; wo += 4) {
        const double* xbase = x_row + static_cast<std::size_t>(wo * stride - pad_w) * cin;
        double* out = o_row + static_cast<std::size_t>(wo) * cout;
        int co = 0;
        for (; co + 4 <= cout; co += 4) {
            __m256d a0 = _mm256_loadu_pd(out + co);
            __m256d a1 = _mm256_loadu_pd(out + co + cout);
            __m256d a2 = _mm256_loadu_pd(out + co + 2 * cout);
            __m256d a3 = _mm256_loadu_pd(out + co + 3 * cout);
            const double* w = w_row + co;
            const double* xk = xbase;
            for (int k = 0; k < kw; ++k, xk += cin) {
                const double* xc = xk;
                for (int ci = 0; ci < cin; ++ci, w += cout, ++xc) {
                    const __m256d wv = _mm256_loadu_pd(w);
                    a0 = _mm256_add_pd(a0, _mm256_mul_pd(_mm256_set1_pd(xc[0]), wv));
                    a1 = _mm256_add_pd(a1, _mm256_mul_pd(_mm256_set1_pd(xc[x_step]), wv));
                    a2 = _mm256_add_pd(a2, _mm256_mul_pd(_mm256_set1_pd(xc[2 * x_step]), wv));
                    a3 = _mm256_add_pd(a3, _mm256_mul_pd(_mm256_set1_pd(xc[3 * x_step]), wv));
                }
            }
            _mm256_storeu_pd(out + co, a0);
            _mm256_storeu_pd(out + co + cout, a1);
            _mm256_storeu_pd(out + co + 2 * cout, a2);
            _mm256_storeu_pd(out + co + 3 * cout, a3);
        }
        for (; co < cout; ++co) {
            double s0 = out[co], s1 = out[co + cout], s2 = out[co + 2 * cout],
                   s3 = out[co + 3 * cout];
            const double* w = w_row + co;
            const double* xk = xbase;
            for (int k = 0; k < kw; ++k, xk += cin) {
                const double* xc = xk;
                for (int ci = 0; ci < cin; ++ci, w += cout, ++xc) {
                    const double wv = *w;
                    s0 += xc[0] * wv;
                    s1 += xc[x_step] * wv;
                    s2 += xc[2 * x_step] * wv;
                    s3 += xc[3 * x_step] * wv;
                }
            }
            out[co] = s0;
            out[co + cout] = s1;
            out[co + 2 * cout] = s2;
            out[co + 3 * cout] = s3;
        }
    }
    if (wo < safe_end) edge_span(wo, safe_end);
    edge_span(safe_end, wo_dim);
}

// Input-gradient row kernel over transposed weights [KW][Cout][Cin]: the
// gi row rides in memory with contiguous ci vectors, broadcast g per co.
// A reduction over cout, so reordering tolerance applies.
void v_conv_row_bwd_in(const double* g_row, int wo_dim, const double* w_t_row, int kw,
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
            for (; ci + 4 <= cin; ci += 4) {
                __m256d acc = _mm256_loadu_pd(gi0 + ci);
                const double* wr = wt + ci;
                for (int co = 0; co < cout; ++co, wr += cin) {
                    acc = _mm256_fmadd_pd(_mm256_set1_pd(g[co]), _mm256_loadu_pd(wr), acc);
                }
                _mm256_storeu_pd(gi0 + ci, acc);
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

// Weight-gradient row kernel: a reduction over wo per gw element, run with
// four interleaved accumulators, so results match scalar to reordering
// tolerance only (like every reduction here).
void v_conv_row_bwd_w(const double* x_row, int w_dim, const double* g_row, int wo_dim, int stride,
                      int pad_w, double* gw_row, int kw, int cin, int cout) {
    const std::size_t x_step = static_cast<std::size_t>(stride) * cin;
    for (int k = 0; k < kw; ++k) {
        int wo_begin, wo_end;
        tap_bounds(k, w_dim, stride, pad_w, wo_dim, &wo_begin, &wo_end);
        if (wo_end <= wo_begin) continue;
        const int span = wo_end - wo_begin;
        for (int ci = 0; ci < cin; ++ci) {
            double* gwr = gw_row + (static_cast<std::size_t>(k) * cin + ci) * cout;
            const double* g0 = g_row + static_cast<std::size_t>(wo_begin) * cout;
            const double* x0 = x_row + static_cast<std::size_t>(ci) +
                               static_cast<std::size_t>(wo_begin * stride - pad_w + k) * cin;
            int co = 0;
            for (; co + 4 <= cout; co += 4) {
                __m256d a0 = _mm256_setzero_pd();
                __m256d a1 = _mm256_setzero_pd();
                __m256d a2 = _mm256_setzero_pd();
                __m256d a3 = _mm256_setzero_pd();
                int i = 0;
                for (; i + 4 <= span; i += 4) {
                    const double* g = g0 + static_cast<std::size_t>(i) * cout + co;
                    const double* x = x0 + static_cast<std::size_t>(i) * x_step;
                    a0 = _mm256_fmadd_pd(_mm256_set1_pd(x[0]), _mm256_loadu_pd(g), a0);
                    a1 = _mm256_fmadd_pd(_mm256_set1_pd(x[x_step]), _mm256_loadu_pd(g + cout), a1);
                    a2 = _mm256_fmadd_pd(_mm256_set1_pd(x[2 * x_step]),
                                         _mm256_loadu_pd(g + 2 * cout), a2);
                    a3 = _mm256_fmadd_pd(_mm256_set1_pd(x[3 * x_step]),
                                         _mm256_loadu_pd(g + 3 * cout), a3);
                }
                for (; i < span; ++i) {
                    a0 = _mm256_fmadd_pd(_mm256_set1_pd(x0[static_cast<std::size_t>(i) * x_step]),
                                         _mm256_loadu_pd(g0 + static_cast<std::size_t>(i) * cout +
                                                         co),
                                         a0);
                }
                const __m256d total = _mm256_add_pd(_mm256_add_pd(a0, a1), _mm256_add_pd(a2, a3));
                _mm256_storeu_pd(gwr + co,
                                 _mm256_add_pd(_mm256_loadu_pd(gwr + co), total));
            }
            for (; co < cout; ++co) {
                double acc = 0.0;
                for (int i = 0; i < span; ++i) {
                    acc += x0[static_cast<std::size_t>(i) * x_step] *
                           g0[static_cast<std::size_t>(i) * cout + co];
                }
                gwr[co] += acc;
            }
        }
    }
}

}  // namespace

const KernelTable& avx2_table() {
    static const KernelTable table = {
        "avx2", v_dot, v_axpy, v_sub, v_scale, v_acc, v_acc_sq,
        v_sum, v_sum_sq, v_sum_abs, v_fma_row,
        v_conv_row_fwd, v_conv_row_bwd_in, v_conv_row_bwd_w,
    };
    return table;
}

}  // namespace remnet::kern
