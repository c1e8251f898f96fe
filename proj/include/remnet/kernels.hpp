#pragma once
// Data-parallel inner-loop kernels shared by the tensor ops.
//
// Every kernel has a scalar reference implementation plus optional SIMD
// variants (AVX2 on x86-64, NEON on aarch64) compiled in separate translation
// units. The active table is chosen once at startup from CPU capabilities and
// can be forced through the REMNET_KERNELS environment variable
// ("scalar", "avx2", "neon"). Scalar and SIMD variants agree to floating-point
// reordering tolerance; the equivalence suite pins that down.

#include <cstddef>

namespace remnet::kern {

struct KernelTable {
    const char* name;

    // sum_i x[i] * y[i]
    double (*dot)(const double* x, const double* y, std::size_t n);
    // y[i] += a * x[i]
    void (*axpy)(double a, const double* x, double* y, std::size_t n);
    // out[i] = x[i] - y[i]
    void (*sub)(const double* x, const double* y, double* out, std::size_t n);
    // x[i] *= a
    void (*scale)(double a, double* x, std::size_t n);
    // acc[i] += x[i]
    void (*acc)(const double* x, double* acc, std::size_t n);
    // acc[i] += x[i] * x[i]
    void (*acc_sq)(const double* x, double* acc, std::size_t n);
    double (*sum)(const double* x, std::size_t n);
    double (*sum_sq)(const double* x, std::size_t n);
    double (*sum_abs)(const double* x, std::size_t n);
    // out[i] = x[i] * a[i] + b[i]  (per-channel affine, used by batch norm)
    void (*fma_row)(const double* x, const double* a, const double* b,
                    double* out, std::size_t n);

    // Convolution row kernels: one call applies one kernel row (all taps kw,
    // all input channels) across a whole output row. Weights for the kernel
    // row are row-major [KW][Cin][Cout]; x_row/gi_row hold W*Cin values,
    // o_row/g_row hold WO*Cout. wi = wo*stride - pad_w + kw, out-of-range
    // taps are skipped.
    void (*conv_row_fwd)(const double* x_row, int w_dim, const double* w_row, int kw, int stride,
                         int pad_w, double* o_row, int wo_dim, int cin, int cout);
    // w_t_row is the transposed kernel row, row-major [KW][Cout][Cin].
    void (*conv_row_bwd_in)(const double* g_row, int wo_dim, const double* w_t_row, int kw,
                            int stride, int pad_w, double* gi_row, int w_dim, int cin, int cout);
    void (*conv_row_bwd_w)(const double* x_row, int w_dim, const double* g_row, int wo_dim,
                           int stride, int pad_w, double* gw_row, int kw, int cin, int cout);
};

const KernelTable& scalar_table();
#if REMNET_HAVE_AVX2_TU
const KernelTable& avx2_table();
#endif
#if REMNET_HAVE_NEON_TU
const KernelTable& neon_table();
#endif

// Table picked at first use; stable for the lifetime of the process.
const KernelTable& active();

inline double dot(const double* x, const double* y, std::size_t n) { return active().dot(x, y, n); }
inline void axpy(double a, const double* x, double* y, std::size_t n) { active().axpy(a, x, y, n); }
inline void sub(const double* x, const double* y, double* out, std::size_t n) { active().sub(x, y, out, n); }
inline void scale(double a, double* x, std::size_t n) { active().scale(a, x, n); }
inline void acc(const double* x, double* a, std::size_t n) { active().acc(x, a, n); }
inline void acc_sq(const double* x, double* a, std::size_t n) { active().acc_sq(x, a, n); }
inline double sum(const double* x, std::size_t n) { return active().sum(x, n); }
inline double sum_sq(const double* x, std::size_t n) { return active().sum_sq(x, n); }
inline double sum_abs(const double* x, std::size_t n) { return active().sum_abs(x, n); }
inline void fma_row(const double* x, const double* a, const double* b, double* out, std::size_t n) {
    active().fma_row(x, a, b, out, n);
}
inline void conv_row_fwd(const double* x_row, int w_dim, const double* w_row, int kw, int stride,
                         int pad_w, double* o_row, int wo_dim, int cin, int cout) {
    active().conv_row_fwd(x_row, w_dim, w_row, kw, stride, pad_w, o_row, wo_dim, cin, cout);
}
inline void conv_row_bwd_in(const double* g_row, int wo_dim, const double* w_t_row, int kw,
                            int stride, int pad_w, double* gi_row, int w_dim, int cin, int cout) {
    active().conv_row_bwd_in(g_row, wo_dim, w_t_row, kw, stride, pad_w, gi_row, w_dim, cin, cout);
}
inline void conv_row_bwd_w(const double* x_row, int w_dim, const double* g_row, int wo_dim,
                           int stride, int pad_w, double* gw_row, int kw, int cin, int cout) {
    active().conv_row_bwd_w(x_row, w_dim, g_row, wo_dim, stride, pad_w, gw_row, kw, cin, cout);
}

}  // namespace remnet::kern
