#include <algorithm>
#include <cmath>

#include "pip/tensor.hpp"

#include "kernels.hpp"

namespace pip {

namespace {

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    check(a.shape() == b.shape(), op, ": shape mismatch ", shape_str(a.shape()), " vs ",
          shape_str(b.shape()));
}

// Assign-or-accumulate into a parent's gradient. The functor must produce a
// value for every element (full coverage), so a fresh buffer can be
// assigned without a zero-fill pass.
template <typename F>
void add_into(detail::Node& parent, F&& contribution) {
    auto [g, fresh] = parent.grad_target();
    const size_t n = parent.data.size();
    if (fresh)
        for (size_t i = 0; i < n; ++i) g[i] = contribution(i);
    else
        for (size_t i = 0; i < n; ++i) g[i] += contribution(i);
}

// Reductions below use 8 strided accumulator lanes folded in a fixed tree;
// the summation order is deterministic (it never depends on the data), and
// the independent lanes let the loop vectorize.
constexpr int kLanes = 8;

inline float fold8(const float* acc) {
    return ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7]));
}

// term(i) is accumulated into out1; term2(i) into out2.
template <typename F1, typename F2>
inline void reduce2_lanes(int64_t n, F1&& term1, F2&& term2, float& out1, float& out2) {
    float a1[kLanes] = {0}, a2[kLanes] = {0};
    int64_t i = 0;
    for (; i + kLanes <= n; i += kLanes)
        for (int l = 0; l < kLanes; ++l) {
            a1[l] += term1(i + l);
            a2[l] += term2(i + l);
        }
    for (; i < n; ++i) {
        a1[0] += term1(i);
        a2[0] += term2(i);
    }
    out1 = fold8(a1);
    out2 = fold8(a2);
}

template <typename F>
inline float reduce_lanes(int64_t n, F&& term) {
    float acc[kLanes] = {0};
    int64_t i = 0;
    for (; i + kLanes <= n; i += kLanes)
        for (int l = 0; l < kLanes; ++l) acc[l] += term(i + l);
    for (; i < n; ++i) acc[0] += term(i);
    return fold8(acc);
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "add");
    auto out = detail::pool_take_uninit(a.data().size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] + b.data()[i];
    return Tensor::make_op(a.shape(), std::move(out), {a, b}, [](detail::Node& n) {
        for (int side = 0; side < 2; ++side) {
            auto& p = *n.parents[side];
            if (p.requires_grad) add_into(p, [&](size_t i) { return n.grad[i]; });
        }
    });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "sub");
    auto out = detail::pool_take_uninit(a.data().size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] - b.data()[i];
    return Tensor::make_op(a.shape(), std::move(out), {a, b}, [](detail::Node& n) {
        if (n.parents[0]->requires_grad)
            add_into(*n.parents[0], [&](size_t i) { return n.grad[i]; });
        if (n.parents[1]->requires_grad)
            add_into(*n.parents[1], [&](size_t i) { return -n.grad[i]; });
    });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "mul");
    auto out = detail::pool_take_uninit(a.data().size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * b.data()[i];
    return Tensor::make_op(a.shape(), std::move(out), {a, b}, [](detail::Node& n) {
        auto& pa = *n.parents[0];
        auto& pb = *n.parents[1];
        if (pa.requires_grad) add_into(pa, [&](size_t i) { return n.grad[i] * pb.data[i]; });
        if (pb.requires_grad) add_into(pb, [&](size_t i) { return n.grad[i] * pa.data[i]; });
    });
}

Tensor scale(const Tensor& a, float s) {
    auto out = detail::pool_take_uninit(a.data().size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * s;
    return Tensor::make_op(a.shape(), std::move(out), {a}, [s](detail::Node& n) {
        add_into(*n.parents[0], [&](size_t i) { return n.grad[i] * s; });
    });
}

Tensor sum(const Tensor& a) {
    const float* x = a.data().data();
    const float acc = reduce_lanes(static_cast<int64_t>(a.data().size()),
                                   [x](int64_t i) { return x[i]; });
    return Tensor::make_op({1}, {acc}, {a}, [](detail::Node& n) {
        const float go = n.grad[0];
        add_into(*n.parents[0], [go](size_t) { return go; });
    });
}

Tensor activation(const Tensor& input, ActivationKind kind, float param) {
    const auto& x = input.data();
    auto out = detail::pool_take_uninit(x.size());
    switch (kind) {
        case ActivationKind::LeakyRelu:
            for (size_t i = 0; i < x.size(); ++i) out[i] = x[i] >= 0.0f ? x[i] : param * x[i];
            break;
        case ActivationKind::Sine:
            for (size_t i = 0; i < x.size(); ++i) out[i] = std::sin(param * x[i]);
            break;
        case ActivationKind::Gaussian: {
            const float inv2a2 = 1.0f / (2.0f * param * param);
            for (size_t i = 0; i < x.size(); ++i) out[i] = std::exp(-x[i] * x[i] * inv2a2);
            break;
        }
    }
    return Tensor::make_op(input.shape(), std::move(out), {input}, [kind, param](detail::Node& n) {
        auto& p = *n.parents[0];
        switch (kind) {
            case ActivationKind::LeakyRelu:
                add_into(p, [&](size_t i) {
                    return n.grad[i] * (p.data[i] >= 0.0f ? 1.0f : param);
                });
                break;
            case ActivationKind::Sine:
                add_into(p, [&](size_t i) {
                    return n.grad[i] * param * std::cos(param * p.data[i]);
                });
                break;
            case ActivationKind::Gaussian: {
                const float inva2 = 1.0f / (param * param);
                add_into(p, [&](size_t i) {
                    return n.grad[i] * (-p.data[i] * inva2) * n.data[i];
                });
                break;
            }
        }
    });
}

Tensor sigmoid(const Tensor& input) {
    const auto& x = input.data();
    auto out = detail::pool_take_uninit(x.size());
    for (size_t i = 0; i < x.size(); ++i) out[i] = 1.0f / (1.0f + std::exp(-x[i]));
    return Tensor::make_op(input.shape(), std::move(out), {input}, [](detail::Node& n) {
        add_into(*n.parents[0],
                 [&](size_t i) { return n.grad[i] * n.data[i] * (1.0f - n.data[i]); });
    });
}

Tensor channel_norm(const Tensor& input, const Tensor& scale_t, const Tensor& shift_t) {
    check(input.ndim() == 3, "channel_norm expects CxHxW, got ", shape_str(input.shape()));
    const int C = input.dim(0);
    check(scale_t.numel() == C && shift_t.numel() == C, "channel_norm: scale/shift must have ", C,
          " entries");
    const int64_t P = static_cast<int64_t>(input.dim(1)) * input.dim(2);
    const auto& x = input.data();
    auto out = detail::pool_take_uninit(x.size());
    std::vector<float> mean(C), denom(C);
    constexpr float kEps = 1e-5f;
    for (int c = 0; c < C; ++c) {
        const float* xc = x.data() + c * P;
        float m = reduce_lanes(P, [xc](int64_t i) { return xc[i]; });
        m /= static_cast<float>(P);
        float var = reduce_lanes(P, [xc, m](int64_t i) {
            const float u = xc[i] - m;
            return u * u;
        });
        var /= static_cast<float>(P);
        const float d = std::sqrt(var) + kEps;
        mean[c] = m;
        denom[c] = d;
        const float s = scale_t.data()[c];
        const float b = shift_t.data()[c];
        const float inv_d = 1.0f / d;
        float* oc = out.data() + c * P;
        for (int64_t i = 0; i < P; ++i) oc[i] = (xc[i] - m) * inv_d * s + b;
    }
    return Tensor::make_op(
        input.shape(), std::move(out), {input, scale_t, shift_t},
        [mean, denom, P, C](detail::Node& n) {
            auto& px = *n.parents[0];
            auto& ps = *n.parents[1];
            auto& pb = *n.parents[2];
            float* gx = nullptr;
            bool fresh = false;
            if (px.requires_grad) {
                auto t = px.grad_target();
                gx = t.first;
                fresh = t.second;
            }
            for (int c = 0; c < C; ++c) {
                const float* xc = px.data.data() + c * P;
                const float* gc = n.grad.data() + c * P;
                const float m = mean[c], d = denom[c];
                const float s = ps.data[c];
                const float sigma = d - 1e-5f;
                float gsum = 0.0f, gdot = 0.0f;
                reduce2_lanes(
                    P, [gc](int64_t i) { return gc[i]; },
                    [gc, xc, m](int64_t i) { return gc[i] * (xc[i] - m); }, gsum, gdot);
                if (gx) {
                    float* gxc = gx + c * P;
                    const float inv_d = 1.0f / d;
                    const float gmean = gsum / static_cast<float>(P);
                    // The d(std)/dx term vanishes on constant channels.
                    const float k =
                        sigma > 0.0f ? gdot / (static_cast<float>(P) * sigma * d * d) : 0.0f;
                    if (fresh)
                        for (int64_t i = 0; i < P; ++i)
                            gxc[i] = s * (inv_d * (gc[i] - gmean) - k * (xc[i] - m));
                    else
                        for (int64_t i = 0; i < P; ++i)
                            gxc[i] += s * (inv_d * (gc[i] - gmean) - k * (xc[i] - m));
                }
                if (ps.requires_grad) ps.grad_buffer()[c] += gdot / d;
                if (pb.requires_grad) pb.grad_buffer()[c] += gsum;
            }
        });
}

namespace {

// Loops specialized per activation kind so the hot LeakyRelu path
// vectorizes.
template <ActivationKind K>
Tensor channel_norm_act_impl(const Tensor& input, const Tensor& scale_t, const Tensor& shift_t,
                             float ap) {
    const int C = input.dim(0);
    const int64_t P = static_cast<int64_t>(input.dim(1)) * input.dim(2);
    const auto& x = input.data();
    auto out = detail::pool_take_uninit(x.size());
    std::vector<float> mean(C), denom(C);
    constexpr float kEps = 1e-5f;
    for (int c = 0; c < C; ++c) {
        const float* xc = x.data() + c * P;
        // Single-pass mean / second moment.
        float sx = 0.0f, sxx = 0.0f;
        kernels::stat_reduce(xc, P, sx, sxx);
        const float m = sx / static_cast<float>(P);
        const float var = std::max(0.0f, sxx / static_cast<float>(P) - m * m);
        const float d = std::sqrt(var) + kEps;
        mean[c] = m;
        denom[c] = d;
        const float a = scale_t.data()[c] / d;  // fused scale
        const float b = shift_t.data()[c] - m * a;
        kernels::normact_fwd_store<K>(xc, out.data() + c * P, P, a, b, ap);
    }
    return Tensor::make_op(
        input.shape(), std::move(out), {input, scale_t, shift_t},
        [mean, denom, P, C, ap](detail::Node& n) {
            auto& px = *n.parents[0];
            auto& ps = *n.parents[1];
            auto& pb = *n.parents[2];
            float* gx = nullptr;
            bool fresh = false;
            if (px.requires_grad) {
                auto t = px.grad_target();
                gx = t.first;
                fresh = t.second;
            }
            // Scratch row for the activation-mapped gradient (L2-resident).
            auto gv = detail::pool_take_uninit(static_cast<size_t>(P));
            for (int c = 0; c < C; ++c) {
                const float* xc = px.data.data() + c * P;
                const float* gc = n.grad.data() + c * P;
                const float m = mean[c], d = denom[c];
                const float s = ps.data[c];
                const float sigma = d - 1e-5f;
                const float inv_d = 1.0f / d;
                const float a = s * inv_d;
                const float b0 = pb.data[c] - m * a;
                // Pass 1: map the post-activation grad back through the
                // activation (pre-activation recomputed from x) and reduce.
                float gsum = 0.0f, gdot = 0.0f;
                kernels::normact_bwd_reduce<K>(gc, xc, gv.data(), P, a, b0, ap, m, gsum, gdot);
                if (gx) {
                    const float gmean = gsum / static_cast<float>(P);
                    // The d(std)/dx term vanishes on constant channels.
                    const float k =
                        sigma > 0.0f ? gdot / (static_cast<float>(P) * sigma * d * d) : 0.0f;
                    const float si = s * inv_d;
                    const float off = -si * gmean + s * k * m;
                    const float kx = -s * k;
                    kernels::normact_bwd_store(gv.data(), xc, gx + c * P, P, si, kx, off, fresh);
                }
                if (ps.requires_grad) ps.grad_buffer()[c] += gdot / d;
                if (pb.requires_grad) pb.grad_buffer()[c] += gsum;
            }
            detail::pool_return(std::move(gv));
        });
}

}  // namespace

Tensor channel_norm_act(const Tensor& input, const Tensor& scale_t, const Tensor& shift_t,
                        ActivationKind act, float act_param) {
    check(input.ndim() == 3, "channel_norm_act expects CxHxW, got ", shape_str(input.shape()));
    const int C = input.dim(0);
    check(scale_t.numel() == C && shift_t.numel() == C, "channel_norm_act: scale/shift must have ",
          C, " entries");
    switch (act) {
        case ActivationKind::LeakyRelu:
            return channel_norm_act_impl<ActivationKind::LeakyRelu>(input, scale_t, shift_t,
                                                                    act_param);
        case ActivationKind::Sine:
            return channel_norm_act_impl<ActivationKind::Sine>(input, scale_t, shift_t, act_param);
        case ActivationKind::Gaussian:
            return channel_norm_act_impl<ActivationKind::Gaussian>(input, scale_t, shift_t,
                                                                   act_param);
    }
    throw Error("unreachable");
}

Tensor mse_loss(const Tensor& pred, const Tensor& target) {
    check_same_shape(pred, target, "mse_loss");
    const auto& p = pred.data();
    const auto& t = target.data();
    const float acc = reduce_lanes(static_cast<int64_t>(p.size()), [&](int64_t i) {
        const float d = p[i] - t[i];
        return d * d;
    });
    const float inv_n = 1.0f / static_cast<float>(p.size());
    return Tensor::make_op({1}, {acc * inv_n}, {pred, target}, [inv_n](detail::Node& n) {
        auto& pp = *n.parents[0];
        auto& pt = *n.parents[1];
        const float go = n.grad[0] * 2.0f * inv_n;
        if (pp.requires_grad)
            add_into(pp, [&](size_t i) { return go * (pp.data[i] - pt.data[i]); });
        if (pt.requires_grad)
            add_into(pt, [&](size_t i) { return -go * (pp.data[i] - pt.data[i]); });
    });
}

Tensor masked_mse_loss(const Tensor& pred, const Tensor& target, const Tensor& mask) {
    check_same_shape(pred, target, "masked_mse_loss");
    check_same_shape(pred, mask, "masked_mse_loss(mask)");
    const auto& p = pred.data();
    const auto& t = target.data();
    const auto& m = mask.data();
    const float acc = reduce_lanes(static_cast<int64_t>(p.size()), [&](int64_t i) {
        const float d = p[i] - t[i];
        return m[i] > 0.5f ? d * d : 0.0f;
    });
    int64_t known = 0;
    for (size_t i = 0; i < p.size(); ++i) known += m[i] > 0.5f ? 1 : 0;
    check(known > 0, "masked_mse_loss: mask marks no known pixels");
    const float inv_n = 1.0f / static_cast<float>(known);
    return Tensor::make_op({1}, {acc * inv_n}, {pred, target, mask}, [inv_n](detail::Node& n) {
        auto& pp = *n.parents[0];
        auto& pt = *n.parents[1];
        auto& pm = *n.parents[2];
        const float go = n.grad[0] * 2.0f * inv_n;
        if (pp.requires_grad)
            add_into(pp, [&](size_t i) {
                return pm.data[i] > 0.5f ? go * (pp.data[i] - pt.data[i]) : 0.0f;
            });
    });
}

Tensor concat(const std::vector<Tensor>& tensors, int axis) {
    check(!tensors.empty(), "concat of zero tensors");
    const Shape& s0 = tensors[0].shape();
    const int rank = static_cast<int>(s0.size());
    check(axis >= 0 && axis < rank, "concat axis out of range");
    Shape out_shape = s0;
    out_shape[axis] = 0;
    for (const Tensor& t : tensors) {
        const Shape& s = t.shape();
        check(static_cast<int>(s.size()) == rank, "concat rank mismatch");
        for (int d = 0; d < rank; ++d)
            check(d == axis || s[d] == s0[d], "concat: shape mismatch ", shape_str(s), " vs ",
                  shape_str(s0), " on axis ", d);
        out_shape[axis] += s[axis];
    }
    int64_t outer = 1, inner = 1;
    for (int d = 0; d < axis; ++d) outer *= s0[d];
    for (int d = axis + 1; d < rank; ++d) inner *= s0[d];

    auto out = detail::pool_take_uninit(static_cast<size_t>(shape_numel(out_shape)));
    const int64_t out_stride = static_cast<int64_t>(out_shape[axis]) * inner;
    std::vector<int64_t> offsets;
    int64_t off = 0;
    for (const Tensor& t : tensors) {
        offsets.push_back(off);
        const int64_t len = static_cast<int64_t>(t.shape()[axis]) * inner;
        for (int64_t o = 0; o < outer; ++o)
            std::copy_n(t.data().data() + o * len, len, out.data() + o * out_stride + off);
        off += len;
    }
    return Tensor::make_op(out_shape, std::move(out), tensors,
                           [offsets, outer, inner, out_stride, axis](detail::Node& n) {
                               for (size_t k = 0; k < n.parents.size(); ++k) {
                                   auto& p = *n.parents[k];
                                   if (!p.requires_grad) continue;
                                   auto [g, fresh] = p.grad_target();
                                   const int64_t len =
                                       static_cast<int64_t>(p.shape[axis]) * inner;
                                   for (int64_t o = 0; o < outer; ++o) {
                                       const float* src =
                                           n.grad.data() + o * out_stride + offsets[k];
                                       float* dst = g + o * len;
                                       if (fresh)
                                           for (int64_t i = 0; i < len; ++i) dst[i] = src[i];
                                       else
                                           for (int64_t i = 0; i < len; ++i) dst[i] += src[i];
                                   }
                               }
                           });
}

Tensor upsample(const Tensor& input, int factor, UpsampleMode mode) {
    check(input.ndim() == 3, "upsample expects CxHxW, got ", shape_str(input.shape()));
    check(factor >= 2, "upsample factor must be >= 2, got ", factor);
    const int C = input.dim(0), H = input.dim(1), W = input.dim(2);
    const int OH = H * factor, OW = W * factor;
    auto out = detail::pool_take_uninit(static_cast<size_t>(C) * OH * OW);
    const auto& x = input.data();

    if (mode == UpsampleMode::Nearest) {
        for (int c = 0; c < C; ++c)
            for (int oh = 0; oh < OH; ++oh) {
                const float* row = x.data() + (static_cast<int64_t>(c) * H + oh / factor) * W;
                float* orow = out.data() + (static_cast<int64_t>(c) * OH + oh) * OW;
                for (int ow = 0; ow < OW; ++ow) orow[ow] = row[ow / factor];
            }
        return Tensor::make_op(
            {C, OH, OW}, std::move(out), {input}, [C, H, W, OW, factor](detail::Node& n) {
                // Each input pixel owns a factor x factor output block; gather.
                auto [g, fresh] = n.parents[0]->grad_target();
                for (int c = 0; c < C; ++c)
                    for (int ih = 0; ih < H; ++ih) {
                        float* grow = g + (static_cast<int64_t>(c) * H + ih) * W;
                        for (int iw = 0; iw < W; ++iw) {
                            float acc = 0.0f;
                            for (int dy = 0; dy < factor; ++dy) {
                                const float* src =
                                    n.grad.data() +
                                    ((static_cast<int64_t>(c) * H + ih) * factor + dy) * OW +
                                    static_cast<int64_t>(iw) * factor;
                                for (int dx = 0; dx < factor; ++dx) acc += src[dx];
                            }
                            if (fresh)
                                grow[iw] = acc;
                            else
                                grow[iw] += acc;
                        }
                    }
            });
    }

    // Bilinear, align-corners-false: output center o maps to (o + 0.5)/f - 0.5.
    // Separable: horizontal interpolation into a row buffer, then vertical
    // blending as row operations; the backward applies the transposed taps.
    auto make_taps = [factor](int in_size, int out_size, std::vector<int>& i0,
                              std::vector<int>& i1, std::vector<float>& w1) {
        i0.resize(out_size);
        i1.resize(out_size);
        w1.resize(out_size);
        for (int o = 0; o < out_size; ++o) {
            float src = (static_cast<float>(o) + 0.5f) / static_cast<float>(factor) - 0.5f;
            src = std::min(std::max(src, 0.0f), static_cast<float>(in_size - 1));
            const int lo = static_cast<int>(std::floor(src));
            i0[o] = lo;
            i1[o] = std::min(lo + 1, in_size - 1);
            w1[o] = src - static_cast<float>(lo);
        }
    };
    // Transposed taps: for each input index, the (output, weight) pairs that
    // reference it, padded to a fixed slot count so loops stay branch-free.
    auto transpose_taps = [](const std::vector<int>& i0, const std::vector<int>& i1,
                             const std::vector<float>& w1, int in_size, std::vector<int>& idx,
                             std::vector<float>& wgt, int& slots) {
        std::vector<std::vector<std::pair<int, float>>> adj(static_cast<size_t>(in_size));
        for (size_t o = 0; o < i0.size(); ++o) {
            adj[static_cast<size_t>(i0[o])].emplace_back(static_cast<int>(o), 1.0f - w1[o]);
            adj[static_cast<size_t>(i1[o])].emplace_back(static_cast<int>(o), w1[o]);
        }
        slots = 0;
        for (const auto& a : adj) slots = std::max(slots, static_cast<int>(a.size()));
        idx.assign(static_cast<size_t>(in_size) * slots, 0);
        wgt.assign(static_cast<size_t>(in_size) * slots, 0.0f);
        for (int i = 0; i < in_size; ++i)
            for (size_t k = 0; k < adj[static_cast<size_t>(i)].size(); ++k) {
                idx[static_cast<size_t>(i) * slots + k] = adj[static_cast<size_t>(i)][k].first;
                wgt[static_cast<size_t>(i) * slots + k] = adj[static_cast<size_t>(i)][k].second;
            }
    };

    std::vector<int> h0, h1, w0i, w1i;
    std::vector<float> hw, ww;
    make_taps(H, OH, h0, h1, hw);
    make_taps(W, OW, w0i, w1i, ww);

    {
        std::vector<float> tmp(static_cast<size_t>(H) * OW);
        for (int c = 0; c < C; ++c) {
            const float* xc = x.data() + static_cast<int64_t>(c) * H * W;
            float* oc = out.data() + static_cast<int64_t>(c) * OH * OW;
            for (int ih = 0; ih < H; ++ih) {
                const float* row = xc + static_cast<int64_t>(ih) * W;
                float* trow = tmp.data() + static_cast<int64_t>(ih) * OW;
                for (int ow = 0; ow < OW; ++ow)
                    trow[ow] = row[w0i[ow]] * (1.0f - ww[ow]) + row[w1i[ow]] * ww[ow];
            }
            for (int oh = 0; oh < OH; ++oh) {
                const float* r0 = tmp.data() + static_cast<int64_t>(h0[oh]) * OW;
                const float* r1 = tmp.data() + static_cast<int64_t>(h1[oh]) * OW;
                const float fy = hw[oh];
                float* orow = oc + static_cast<int64_t>(oh) * OW;
                for (int ow = 0; ow < OW; ++ow)
                    orow[ow] = r0[ow] * (1.0f - fy) + r1[ow] * fy;
            }
        }
    }
    return Tensor::make_op(
        {C, OH, OW}, std::move(out), {input},
        [C, H, W, OH, OW, h0, h1, hw, w0i, w1i, ww, transpose_taps](detail::Node& n) {
            std::vector<int> vidx, hidx;
            std::vector<float> vw, hwgt;
            int vslots = 0, hslots = 0;
            transpose_taps(h0, h1, hw, H, vidx, vw, vslots);
            transpose_taps(w0i, w1i, ww, W, hidx, hwgt, hslots);
            auto [g, fresh] = n.parents[0]->grad_target();
            std::vector<float> tmp(static_cast<size_t>(H) * OW);
            for (int c = 0; c < C; ++c) {
                const float* gout = n.grad.data() + static_cast<int64_t>(c) * OH * OW;
                float* gc = g + static_cast<int64_t>(c) * H * W;
                // Vertical transpose: accumulate output rows into input rows.
                std::fill(tmp.begin(), tmp.end(), 0.0f);
                for (int ih = 0; ih < H; ++ih) {
                    float* trow = tmp.data() + static_cast<int64_t>(ih) * OW;
                    for (int k = 0; k < vslots; ++k) {
                        const float wv = vw[static_cast<size_t>(ih) * vslots + k];
                        if (wv == 0.0f) continue;
                        const float* grow =
                            gout +
                            static_cast<int64_t>(vidx[static_cast<size_t>(ih) * vslots + k]) * OW;
                        for (int ow = 0; ow < OW; ++ow) trow[ow] += wv * grow[ow];
                    }
                }
                // Horizontal transpose per row.
                for (int ih = 0; ih < H; ++ih) {
                    const float* trow = tmp.data() + static_cast<int64_t>(ih) * OW;
                    float* grow = gc + static_cast<int64_t>(ih) * W;
                    for (int iw = 0; iw < W; ++iw) {
                        float acc = 0.0f;
                        for (int k = 0; k < hslots; ++k)
                            acc += hwgt[static_cast<size_t>(iw) * hslots + k] *
                                   trow[hidx[static_cast<size_t>(iw) * hslots + k]];
                        if (fresh)
                            grow[iw] = acc;
                        else
                            grow[iw] += acc;
                    }
                }
            }
        });
}

Tensor reflect_pad_hw(const Tensor& t, int pad_h, int pad_w) {
    check(pad_h >= 0 && pad_w >= 0, "negative padding");
    if (pad_h == 0 && pad_w == 0) return t.detached_copy();
    const Shape& s = t.shape();
    check(s.size() >= 2, "reflect_pad_hw expects >=2 dims");
    const int W = s.back();
    const int H = s[s.size() - 2];
    int64_t planes = 1;
    for (size_t i = 0; i + 2 < s.size(); ++i) planes *= s[i];
    const int OH = H + pad_h, OW = W + pad_w;
    // Symmetric (edge-inclusive) reflection, padding on the bottom/right only.
    auto src_index = [](int i, int n) {
        while (i < 0 || i >= n) {
            if (i < 0) i = -i - 1;
            if (i >= n) i = 2 * n - 1 - i;
        }
        return i;
    };
    Shape out_shape = s;
    out_shape[s.size() - 2] = OH;
    out_shape[s.size() - 1] = OW;
    std::vector<float> out(static_cast<size_t>(shape_numel(out_shape)));
    for (int64_t p = 0; p < planes; ++p) {
        const float* src = t.data().data() + p * H * W;
        float* dst = out.data() + p * static_cast<int64_t>(OH) * OW;
        for (int oh = 0; oh < OH; ++oh) {
            const float* srow = src + static_cast<int64_t>(src_index(oh, H)) * W;
            float* drow = dst + static_cast<int64_t>(oh) * OW;
            for (int ow = 0; ow < OW; ++ow) drow[ow] = srow[src_index(ow, W)];
        }
    }
    return Tensor::from_data(out_shape, std::move(out));
}

Tensor crop_hw(const Tensor& t, int H, int W) {
    const Shape& s = t.shape();
    check(s.size() >= 2, "crop_hw expects >=2 dims");
    const int W0 = s.back();
    const int H0 = s[s.size() - 2];
    check(H <= H0 && W <= W0, "crop larger than tensor");
    if (H == H0 && W == W0) return t.detached_copy();
    int64_t planes = 1;
    for (size_t i = 0; i + 2 < s.size(); ++i) planes *= s[i];
    Shape out_shape = s;
    out_shape[s.size() - 2] = H;
    out_shape[s.size() - 1] = W;
    std::vector<float> out(static_cast<size_t>(shape_numel(out_shape)));
    for (int64_t p = 0; p < planes; ++p) {
        const float* src = t.data().data() + p * static_cast<int64_t>(H0) * W0;
        float* dst = out.data() + p * static_cast<int64_t>(H) * W;
        for (int h = 0; h < H; ++h)
            std::copy_n(src + static_cast<int64_t>(h) * W0, W, dst + static_cast<int64_t>(h) * W);
    }
    return Tensor::from_data(out_shape, std::move(out));
}

}  // namespace pip
