#include "kernels.hpp"

#include <cmath>

namespace pip::kernels {

namespace {

constexpr int kLanes = 8;

inline float fold8(const float* acc) {
    return ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7]));
}

template <ActivationKind K>
inline float act_value(float v, float p) {
    if constexpr (K == ActivationKind::LeakyRelu) return v >= 0.0f ? v : p * v;
    if constexpr (K == ActivationKind::Sine) return std::sin(p * v);
    return std::exp(-v * v / (2.0f * p * p));
}

template <ActivationKind K>
inline float act_slope(float v, float p) {
    if constexpr (K == ActivationKind::LeakyRelu) return v >= 0.0f ? 1.0f : p;
    if constexpr (K == ActivationKind::Sine) return p * std::cos(p * v);
    const float a2 = p * p;
    return (-v / a2) * std::exp(-v * v / (2.0f * a2));
}

}  // namespace

void stat_reduce(const float* __restrict x, int64_t n, float& sum, float& sum_sq) {
    float s1[kLanes] = {0}, s2[kLanes] = {0};
    int64_t i = 0;
    for (; i + kLanes <= n; i += kLanes)
        for (int l = 0; l < kLanes; ++l) {
            const float v = x[i + l];
            s1[l] += v;
            s2[l] += v * v;
        }
    for (; i < n; ++i) {
        s1[0] += x[i];
        s2[0] += x[i] * x[i];
    }
    sum = fold8(s1);
    sum_sq = fold8(s2);
}

template <ActivationKind K>
void normact_fwd_store(const float* __restrict x, float* __restrict o, int64_t n, float a,
                       float b, float ap) {
    for (int64_t j = 0; j < n; ++j) o[j] = act_value<K>(x[j] * a + b, ap);
}

template <ActivationKind K>
void normact_bwd_reduce(const float* __restrict gc, const float* __restrict xc,
                        float* __restrict gv, int64_t n, float a, float b0, float ap, float m,
                        float& gsum, float& gdot) {
    float s1[kLanes] = {0}, s2[kLanes] = {0};
    int64_t i = 0;
    for (; i + kLanes <= n; i += kLanes)
        for (int l = 0; l < kLanes; ++l) {
            const float g = gc[i + l] * act_slope<K>(xc[i + l] * a + b0, ap);
            gv[i + l] = g;
            s1[l] += g;
            s2[l] += g * (xc[i + l] - m);
        }
    for (; i < n; ++i) {
        const float g = gc[i] * act_slope<K>(xc[i] * a + b0, ap);
        gv[i] = g;
        s1[0] += g;
        s2[0] += g * (xc[i] - m);
    }
    gsum = fold8(s1);
    gdot = fold8(s2);
}

void normact_bwd_store(const float* __restrict gv, const float* __restrict xc,
                       float* __restrict gxc, int64_t n, float si, float kx, float off,
                       bool fresh) {
    if (fresh)
        for (int64_t j = 0; j < n; ++j) gxc[j] = si * gv[j] + kx * xc[j] + off;
    else
        for (int64_t j = 0; j < n; ++j) gxc[j] += si * gv[j] + kx * xc[j] + off;
}

template void normact_fwd_store<ActivationKind::LeakyRelu>(const float*, float*, int64_t, float,
                                                           float, float);
template void normact_fwd_store<ActivationKind::Sine>(const float*, float*, int64_t, float, float,
                                                      float);
template void normact_fwd_store<ActivationKind::Gaussian>(const float*, float*, int64_t, float,
                                                          float, float);
template void normact_bwd_reduce<ActivationKind::LeakyRelu>(const float*, const float*, float*,
                                                            int64_t, float, float, float, float,
                                                            float&, float&);
template void normact_bwd_reduce<ActivationKind::Sine>(const float*, const float*, float*,
                                                       int64_t, float, float, float, float,
                                                       float&, float&);
template void normact_bwd_reduce<ActivationKind::Gaussian>(const float*, const float*, float*,
                                                           int64_t, float, float, float, float,
                                                           float&, float&);

}  // namespace pip::kernels
