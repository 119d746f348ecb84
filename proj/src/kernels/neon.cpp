#include <arm_neon.h>

#include "ndsid/kernels.hpp"

namespace ndsid::kernels::neon {

double dot(std::span<const double> a, std::span<const double> b) {
    const std::size_t n = a.size();
    float64x2_t acc0 = vdupq_n_f64(0.0);
    float64x2_t acc1 = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc0 = vfmaq_f64(acc0, vld1q_f64(a.data() + i), vld1q_f64(b.data() + i));
        acc1 = vfmaq_f64(acc1, vld1q_f64(a.data() + i + 2), vld1q_f64(b.data() + i + 2));
    }
    double s = vaddvq_f64(vaddq_f64(acc0, acc1));
    for (; i < n; ++i) s += a[i] * b[i];
    return s;
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    const std::size_t n = x.size();
    const float64x2_t va = vdupq_n_f64(alpha);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2)
        vst1q_f64(y.data() + i, vfmaq_f64(vld1q_f64(y.data() + i), va, vld1q_f64(x.data() + i)));
    for (; i < n; ++i) y[i] += alpha * x[i];
}

double sum_sq_diff(std::span<const double> a, std::span<const double> b) {
    const std::size_t n = a.size();
    float64x2_t acc = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const float64x2_t d = vsubq_f64(vld1q_f64(a.data() + i), vld1q_f64(b.data() + i));
        acc = vfmaq_f64(acc, d, d);
    }
    double s = vaddvq_f64(acc);
    for (; i < n; ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

}  // namespace ndsid::kernels::neon
