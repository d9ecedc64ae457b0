#pragma once

// Internal vectorized row kernels shared by the elementwise ops. Kept in
// their own translation unit; reductions use 8 strided accumulator lanes
// folded in a fixed tree, so the summation order is deterministic and
// data-independent.

#include <cstdint>

#include "pip/tensor.hpp"

namespace pip::kernels {

// sum and sum of squares of x[0..n)
void stat_reduce(const float* x, int64_t n, float& sum, float& sum_sq);

// o[j] = act((x[j] * a + b)), the fused normalize+activate store pass
template <ActivationKind K>
void normact_fwd_store(const float* x, float* o, int64_t n, float a, float b, float ap);

// gv[j] = gc[j] * act'(x[j] * a + b0); also reduces sum(gv) and
// sum(gv * (x - m))
template <ActivationKind K>
void normact_bwd_reduce(const float* gc, const float* xc, float* gv, int64_t n, float a, float b0,
                        float ap, float m, float& gsum, float& gdot);

// gxc[j] (+)= si * gv[j] + kx * xc[j] + off
void normact_bwd_store(const float* gv, const float* xc, float* gxc, int64_t n, float si,
                       float kx, float off, bool fresh);

}  // namespace pip::kernels
