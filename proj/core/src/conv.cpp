#include <Eigen/Dense>
#include <vector>

#include "pip/tensor.hpp"

namespace pip {

namespace {

using RowMat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using CMapMat = Eigen::Map<const RowMat>;

// reflect-101 index (edge-exclusive), the DIP convention for conv padding.
inline int reflect101(int i, int n) {
    if (i < 0) return -i;
    if (i >= n) return 2 * n - 2 - i;
    return i;
}

// Gather every stride-th pixel of a CxHxW tensor into a C x (OH*OW) matrix.
std::vector<float> subsample_columns(const std::vector<float>& x, int C, int H, int W, int stride,
                                     int OH, int OW) {
    auto sub = detail::pool_take_uninit(static_cast<size_t>(C) * OH * OW);
    for (int c = 0; c < C; ++c)
        for (int oh = 0; oh < OH; ++oh) {
            const float* row = x.data() + (static_cast<int64_t>(c) * H + oh * stride) * W;
            float* dst = sub.data() + (static_cast<int64_t>(c) * OH + oh) * OW;
            for (int ow = 0; ow < OW; ++ow) dst[ow] = row[ow * stride];
        }
    return sub;
}

// 1x1 convolution: a GEMM over pixels, with optional input subsampling.
Tensor conv1x1(const Tensor& input, const Tensor& weight, const Tensor& bias, int stride) {
    const int C_in = input.dim(0), H = input.dim(1), W = input.dim(2);
    const int C_out = weight.dim(0);
    const int OH = ceil_div(H, stride), OW = ceil_div(W, stride);
    const int64_t P = static_cast<int64_t>(OH) * OW;

    std::vector<float> sub;
    const std::vector<float>* in_cols = &input.data();
    if (stride != 1) {
        sub = subsample_columns(input.data(), C_in, H, W, stride, OH, OW);
        in_cols = &sub;
    }
    auto out = detail::pool_take_uninit(static_cast<size_t>(C_out) * P);
    {
        CMapMat w(weight.data().data(), C_out, C_in);
        CMapMat in(in_cols->data(), C_in, P);
        MapMat o(out.data(), C_out, P);
        // Bias seeds the output, then the GEMM accumulates onto it; this
        // folds the bias broadcast into the matmul's own memory pass.
        for (int co = 0; co < C_out; ++co) o.row(co).setConstant(bias.data()[co]);
        o.noalias() += w * in;
    }
    std::vector<float> sub_saved = std::move(sub);  // keep gathered columns for backward
    return Tensor::make_op(
        {C_out, OH, OW}, std::move(out), {input, weight, bias},
        [C_in, C_out, H, W, OH, OW, stride, P, sub_saved = std::move(sub_saved)](detail::Node& n) {
            auto& pin = *n.parents[0];
            auto& pw = *n.parents[1];
            auto& pb = *n.parents[2];
            CMapMat gout(n.grad.data(), C_out, P);
            CMapMat w(pw.data.data(), C_out, C_in);
            const float* cols = stride == 1 ? pin.data.data() : sub_saved.data();
            CMapMat in(cols, C_in, P);
            if (pw.requires_grad) {
                auto [gwp, fresh] = pw.grad_target();
                MapMat gw(gwp, C_out, C_in);
                if (fresh)
                    gw.noalias() = gout * in.transpose();
                else
                    gw.noalias() += gout * in.transpose();
            }
            if (pb.requires_grad) {
                auto [gb, fresh] = pb.grad_target();
                for (int co = 0; co < C_out; ++co) {
                    const float s = gout.row(co).sum();
                    gb[co] = fresh ? s : gb[co] + s;
                }
            }
            if (pin.requires_grad) {
                if (stride == 1) {
                    auto [gxp, fresh] = pin.grad_target();
                    MapMat gi(gxp, C_in, P);
                    if (fresh)
                        gi.noalias() = w.transpose() * gout;
                    else
                        gi.noalias() += w.transpose() * gout;
                } else {
                    // Scatter back to the sampled positions only.
                    auto& gx = pin.grad_buffer();
                    RowMat gi = w.transpose() * gout;  // C_in x P
                    for (int c = 0; c < C_in; ++c)
                        for (int oh = 0; oh < OH; ++oh) {
                            float* dst = gx.data() + (static_cast<int64_t>(c) * H + oh * stride) * W;
                            const float* src = gi.data() + (static_cast<int64_t>(c) * OH + oh) * OW;
                            for (int ow = 0; ow < OW; ++ow) dst[ow * stride] += src[ow];
                        }
                }
            }
        });
}

// 3x3 convolution with reflect-101 padding of 1; direct loops.
Tensor conv3x3(const Tensor& input, const Tensor& weight, const Tensor& bias, int stride) {
    const int C_in = input.dim(0), H = input.dim(1), W = input.dim(2);
    const int C_out = weight.dim(0);
    check(H >= 2 && W >= 2, "conv2d k=3 needs spatial dims >= 2, got ", shape_str(input.shape()));
    const int OH = ceil_div(H, stride), OW = ceil_div(W, stride);
    const int PH = H + 2, PW = W + 2;

    // Padded copy; also reused (recomputed) in backward.
    auto make_padded = [&](const std::vector<float>& x) {
        std::vector<float> pad(static_cast<size_t>(C_in) * PH * PW);
        for (int c = 0; c < C_in; ++c)
            for (int ph = 0; ph < PH; ++ph) {
                const float* srow =
                    x.data() + (static_cast<int64_t>(c) * H + reflect101(ph - 1, H)) * W;
                float* drow = pad.data() + (static_cast<int64_t>(c) * PH + ph) * PW;
                for (int pw = 0; pw < PW; ++pw) drow[pw] = srow[reflect101(pw - 1, W)];
            }
        return pad;
    };
    std::vector<float> padded = make_padded(input.data());

    std::vector<float> out(static_cast<size_t>(C_out) * OH * OW);
    for (int co = 0; co < C_out; ++co) {
        float* oc = out.data() + static_cast<int64_t>(co) * OH * OW;
        const float b = bias.data()[co];
        for (int64_t i = 0; i < static_cast<int64_t>(OH) * OW; ++i) oc[i] = b;
        for (int ci = 0; ci < C_in; ++ci) {
            const float* pc = padded.data() + static_cast<int64_t>(ci) * PH * PW;
            const float* wk = weight.data().data() + (static_cast<int64_t>(co) * C_in + ci) * 9;
            for (int kh = 0; kh < 3; ++kh)
                for (int kw = 0; kw < 3; ++kw) {
                    const float wv = wk[kh * 3 + kw];
                    for (int oh = 0; oh < OH; ++oh) {
                        const float* src = pc + (static_cast<int64_t>(oh) * stride + kh) * PW + kw;
                        float* orow = oc + static_cast<int64_t>(oh) * OW;
                        if (stride == 1)
                            for (int ow = 0; ow < OW; ++ow) orow[ow] += wv * src[ow];
                        else
                            for (int ow = 0; ow < OW; ++ow) orow[ow] += wv * src[ow * stride];
                    }
                }
        }
    }
    return Tensor::make_op(
        {C_out, OH, OW}, std::move(out), {input, weight, bias},
        [C_in, C_out, H, W, OH, OW, PH, PW, stride, make_padded](detail::Node& n) {
            auto& pin = *n.parents[0];
            auto& pw = *n.parents[1];
            auto& pb = *n.parents[2];
            const std::vector<float> padded = make_padded(pin.data);
            if (pb.requires_grad) {
                auto& gb = pb.grad_buffer();
                for (int co = 0; co < C_out; ++co) {
                    const float* gc = n.grad.data() + static_cast<int64_t>(co) * OH * OW;
                    float acc = 0.0f;
                    for (int64_t i = 0; i < static_cast<int64_t>(OH) * OW; ++i) acc += gc[i];
                    gb[co] += acc;
                }
            }
            if (pw.requires_grad) {
                auto& gw = pw.grad_buffer();
                for (int co = 0; co < C_out; ++co) {
                    const float* gc = n.grad.data() + static_cast<int64_t>(co) * OH * OW;
                    for (int ci = 0; ci < C_in; ++ci) {
                        const float* pc = padded.data() + static_cast<int64_t>(ci) * PH * PW;
                        float* wk = gw.data() + (static_cast<int64_t>(co) * C_in + ci) * 9;
                        for (int kh = 0; kh < 3; ++kh)
                            for (int kw = 0; kw < 3; ++kw) {
                                float acc = 0.0f;
                                for (int oh = 0; oh < OH; ++oh) {
                                    const float* src =
                                        pc + (static_cast<int64_t>(oh) * stride + kh) * PW + kw;
                                    const float* grow = gc + static_cast<int64_t>(oh) * OW;
                                    for (int ow = 0; ow < OW; ++ow)
                                        acc += grow[ow] * src[static_cast<int64_t>(ow) * stride];
                                }
                                wk[kh * 3 + kw] += acc;
                            }
                    }
                }
            }
            if (pin.requires_grad) {
                std::vector<float> gpad(static_cast<size_t>(C_in) * PH * PW, 0.0f);
                for (int co = 0; co < C_out; ++co) {
                    const float* gc = n.grad.data() + static_cast<int64_t>(co) * OH * OW;
                    for (int ci = 0; ci < C_in; ++ci) {
                        float* pc = gpad.data() + static_cast<int64_t>(ci) * PH * PW;
                        const float* wk =
                            pw.data.data() + (static_cast<int64_t>(co) * C_in + ci) * 9;
                        for (int kh = 0; kh < 3; ++kh)
                            for (int kw = 0; kw < 3; ++kw) {
                                const float wv = wk[kh * 3 + kw];
                                for (int oh = 0; oh < OH; ++oh) {
                                    float* dst =
                                        pc + (static_cast<int64_t>(oh) * stride + kh) * PW + kw;
                                    const float* grow = gc + static_cast<int64_t>(oh) * OW;
                                    for (int ow = 0; ow < OW; ++ow)
                                        dst[static_cast<int64_t>(ow) * stride] += wv * grow[ow];
                                }
                            }
                    }
                }
                // Fold the padded gradient back through the reflection map.
                auto& gx = pin.grad_buffer();
                for (int ci = 0; ci < C_in; ++ci) {
                    const float* pc = gpad.data() + static_cast<int64_t>(ci) * PH * PW;
                    float* xc = gx.data() + static_cast<int64_t>(ci) * H * W;
                    for (int ph = 0; ph < PH; ++ph) {
                        const int sh = reflect101(ph - 1, H);
                        const float* prow = pc + static_cast<int64_t>(ph) * PW;
                        float* xrow = xc + static_cast<int64_t>(sh) * W;
                        for (int pw2 = 0; pw2 < PW; ++pw2)
                            xrow[reflect101(pw2 - 1, W)] += prow[pw2];
                    }
                }
            }
        });
}

}  // namespace

Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias, int stride) {
    check(input.ndim() == 3, "conv2d input must be CxHxW, got ", shape_str(input.shape()));
    check(weight.ndim() == 4, "conv2d weight must be CoxCixKxK, got ", shape_str(weight.shape()));
    const int k = weight.dim(2);
    check(k == weight.dim(3) && (k == 1 || k == 3), "conv2d kernel must be 1x1 or 3x3, got ",
          shape_str(weight.shape()));
    check(stride == 1 || stride == 2, "conv2d stride must be 1 or 2, got ", stride);
    check(weight.dim(1) == input.dim(0), "conv2d channel mismatch: input ",
          shape_str(input.shape()), " vs weight ", shape_str(weight.shape()));
    check(bias.numel() == weight.dim(0), "conv2d bias size ", bias.numel(),
          " does not match out channels ", weight.dim(0));
    return k == 1 ? conv1x1(input, weight, bias, stride) : conv3x3(input, weight, bias, stride);
}

}  // namespace pip
