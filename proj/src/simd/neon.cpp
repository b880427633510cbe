#include "afem/simd.hpp"

#if defined(AFEM_HAVE_NEON)

#include <arm_neon.h>

#include <algorithm>
#include <cmath>

namespace afem::simd::neon {

double dot(const double* x, const double* y, std::size_t n) {
    float64x2_t a0 = vdupq_n_f64(0.0);
    float64x2_t a1 = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        a0 = vfmaq_f64(a0, vld1q_f64(x + i), vld1q_f64(y + i));
        a1 = vfmaq_f64(a1, vld1q_f64(x + i + 2), vld1q_f64(y + i + 2));
    }
    double s = vaddvq_f64(vaddq_f64(a0, a1));
    for (; i < n; ++i) s += x[i] * y[i];
    return s;
}

void axpy(double a, const double* x, double* y, std::size_t n) {
    const float64x2_t va = vdupq_n_f64(a);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, vld1q_f64(x + i)));
    for (; i < n; ++i) y[i] += a * x[i];
}

void xpby(const double* x, double b, double* y, std::size_t n) {
    const float64x2_t vb = vdupq_n_f64(b);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vfmaq_f64(vld1q_f64(x + i), vb, vld1q_f64(y + i)));
    for (; i < n; ++i) y[i] = x[i] + b * y[i];
}

void mul(const double* x, const double* y, double* z, std::size_t n) {
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) vst1q_f64(z + i, vmulq_f64(vld1q_f64(x + i), vld1q_f64(y + i)));
    for (; i < n; ++i) z[i] = x[i] * y[i];
}

double max_abs_diff(const double* x, const double* y, std::size_t n) {
    float64x2_t m = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) m = vmaxq_f64(m, vabdq_f64(vld1q_f64(x + i), vld1q_f64(y + i)));
    double r = vmaxvq_f64(m);
    for (; i < n; ++i) r = std::max(r, std::abs(x[i] - y[i]));
    return r;
}

void csr_spmv(const int* row_ptr, const int* cols, const double* vals, const double* x, double* y,
              std::size_t row_begin, std::size_t row_end) {
    for (std::size_t r = row_begin; r < row_end; ++r) {
        int k = row_ptr[r];
        const int end = row_ptr[r + 1];
        float64x2_t acc = vdupq_n_f64(0.0);
        for (; k + 2 <= end; k += 2) {
            const double xv[2] = {x[cols[k]], x[cols[k + 1]]};
            acc = vfmaq_f64(acc, vld1q_f64(vals + k), vld1q_f64(xv));
        }
        double s = vaddvq_f64(acc);
        for (; k < end; ++k) s += vals[k] * x[cols[k]];
        y[r] = s;
    }
}

} // namespace afem::simd::neon

#endif
