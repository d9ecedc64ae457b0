#pragma once

#include <functional>
#include <initializer_list>
#include <memory>
#include <string>
#include <vector>

#include "pip/common.hpp"

namespace pip {

using Shape = std::vector<int>;

int64_t shape_numel(const Shape& s);
std::string shape_str(const Shape& s);

namespace detail {

// Recycled float buffers. Training graphs churn through the same handful of
// buffer sizes every iteration; the pool hands back warm allocations, and
// `take_uninit` skips the value-initialization write pass entirely for
// buffers the caller fully overwrites.
std::vector<float> pool_take_uninit(size_t n);
std::vector<float> pool_take_zeroed(size_t n);
void pool_return(std::vector<float>&& v);

// One vertex of the reverse-mode tape. `backward_fn` consumes this node's
// grad and accumulates into the parents' grad buffers; accumulation across
// multiple consumers therefore sums, which is the correct DAG rule.
struct Node {
    Shape shape;
    std::vector<float> data;
    std::vector<float> grad;  // empty until first touched
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node&)> backward_fn;

    ~Node() {
        pool_return(std::move(data));
        pool_return(std::move(grad));
    }

    int64_t numel() const { return shape_numel(shape); }
    std::vector<float>& grad_buffer() {
        if (grad.empty()) grad = pool_take_zeroed(data.size());
        return grad;
    }
    // Gradient sink for backward kernels that write every element: when
    // `fresh`, the buffer is uninitialized and the caller must assign;
    // otherwise it must accumulate. Skips the zero-fill of grad_buffer().
    std::pair<float*, bool> grad_target() {
        if (grad.empty()) {
            grad = pool_take_uninit(data.size());
            return {grad.data(), true};
        }
        return {grad.data(), false};
    }
};

}  // namespace detail

// Dense row-major float32 tensor with optional gradient. A Tensor is a
// cheap shared handle to a tape node; ops build new nodes and record how to
// push gradients back. Once produced, a tensor's data is treated as
// immutable except for leaf parameters updated between iterations.
class Tensor {
   public:
    Tensor() = default;

    static Tensor zeros(Shape shape, bool requires_grad = false);
    static Tensor full(Shape shape, float value, bool requires_grad = false);
    static Tensor from_data(Shape shape, std::vector<float> data, bool requires_grad = false);
    static Tensor scalar(float value, bool requires_grad = false);

    bool defined() const { return node_ != nullptr; }
    const Shape& shape() const;
    int ndim() const { return static_cast<int>(shape().size()); }
    int dim(int i) const { return shape()[static_cast<size_t>(i)]; }
    int64_t numel() const;

    std::vector<float>& data();
    const std::vector<float>& data() const;
    float item() const;  // scalar tensors only
    float at(std::initializer_list<int> idx) const;

    bool requires_grad() const;
    bool has_grad() const;
    const std::vector<float>& grad() const;  // throws if absent
    std::vector<float>& grad_buffer();       // allocates zeros if absent
    void zero_grad();
    bool all_finite() const;

    // Deep copy of the data as a fresh leaf (no graph history).
    Tensor detached_copy(bool requires_grad = false) const;

    // Reverse-mode sweep from a scalar. Populates grads of every reachable
    // node with requires_grad, each exactly once per call.
    void backward() const;

    // Extension point for ops defined outside this module: wraps freshly
    // computed data in a node wired to `parents`. `backward` may be empty
    // for non-differentiable results.
    static Tensor make_op(Shape shape, std::vector<float> data, std::vector<Tensor> parents,
                          std::function<void(detail::Node&)> backward);

    std::shared_ptr<detail::Node> node() const { return node_; }

   private:
    explicit Tensor(std::shared_ptr<detail::Node> n) : node_(std::move(n)) {}
    std::shared_ptr<detail::Node> node_;
};

// Named trainable tensor. Names are unique within one model and double as
// checkpoint keys.
struct Parameter {
    Tensor tensor;
    std::string name;
};

enum class ActivationKind { LeakyRelu, Sine, Gaussian };
ActivationKind activation_from_string(const std::string& s);
std::string to_string(ActivationKind k);

enum class UpsampleMode { Nearest, Bilinear };
UpsampleMode upsample_mode_from_string(const std::string& s);
std::string to_string(UpsampleMode m);

// ---- differentiable ops -------------------------------------------------

// Cross-correlation with reflection padding of (k-1)/2 so the spatial size
// depends only on the stride. input C_in x H x W, weight C_out x C_in x k x k,
// bias C_out; k in {1,3}, stride in {1,2}; output C_out x ceil(H/s) x ceil(W/s).
Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias, int stride);

// Nearest replication or bilinear (align-corners-false) upsampling by an
// integer factor >= 2.
Tensor upsample(const Tensor& input, int factor, UpsampleMode mode);

// Elementwise nonlinearity. `param` is the negative slope for LeakyRelu,
// the frequency scale w in sin(w*x) for Sine, the width a in
// exp(-x^2/(2 a^2)) for Gaussian.
Tensor activation(const Tensor& input, ActivationKind kind, float param);

// Per-channel normalization over spatial positions: subtract the spatial
// mean, divide by spatial std (+1e-5), then apply the affine scale/shift.
// Gradients flow through the statistics. Single-instance statistics by
// design (batch size is always one in this setting).
Tensor channel_norm(const Tensor& input, const Tensor& scale, const Tensor& shift);

// Fused channel_norm followed by activation: identical math to composing
// the two ops, one memory pass cheaper in each direction (the backward
// recomputes the pre-activation value instead of storing it).
Tensor channel_norm_act(const Tensor& input, const Tensor& scale, const Tensor& shift,
                        ActivationKind act, float act_param);

Tensor sigmoid(const Tensor& input);

// Mean of squared differences; shapes must match exactly.
Tensor mse_loss(const Tensor& pred, const Tensor& target);

// Masked variant used for inpainting: mean over pixels with mask > 0.5
// (mask value 1 marks a known pixel). Masked-out positions never enter the
// sum, so perturbing them leaves the loss bit-identical.
Tensor masked_mse_loss(const Tensor& pred, const Tensor& target, const Tensor& mask);

Tensor concat(const std::vector<Tensor>& tensors, int axis);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, float s);
Tensor sum(const Tensor& a);

// ---- non-differentiable data helpers ------------------------------------

// Symmetric (edge-inclusive) reflection padding of the two trailing spatial
// dims; returns a fresh leaf. Used to make image sizes divisible before
// training; the conv op uses reflect-101 internally instead.
Tensor reflect_pad_hw(const Tensor& t, int pad_h, int pad_w);

// Crop the two trailing spatial dims to H x W starting at (0, 0); fresh leaf.
Tensor crop_hw(const Tensor& t, int H, int W);

}  // namespace pip
