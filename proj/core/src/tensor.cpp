#include "pip/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>
#include <unordered_set>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace pip {

namespace {
// Training graphs allocate and free many multi-megabyte buffers per
// iteration. Keep freed blocks on the heap free list instead of returning
// them to the kernel, so iterations reuse warm pages.
struct HeapTuning {
    HeapTuning() {
#if defined(__GLIBC__)
        mallopt(M_MMAP_THRESHOLD, 1 << 30);
        mallopt(M_TRIM_THRESHOLD, 1 << 30);
#endif
    }
};
const HeapTuning heap_tuning;
}  // namespace

namespace detail {

namespace {
// Exact-size buckets; graph tensors repeat the same sizes every iteration.
struct BufferPool {
    static constexpr size_t kMaxPerBucket = 32;
    static constexpr size_t kMaxBytes = size_t(1) << 31;  // 2 GiB
    std::unordered_map<size_t, std::vector<std::vector<float>>> buckets;
    size_t bytes = 0;

    std::vector<float> take(size_t n) {
        auto it = buckets.find(n);
        if (it == buckets.end() || it->second.empty()) return {};
        std::vector<float> v = std::move(it->second.back());
        it->second.pop_back();
        bytes -= n * sizeof(float);
        return v;
    }
    void put(std::vector<float>&& v) {
        const size_t n = v.size();
        if (n == 0 || n != v.capacity()) return;
        auto& bucket = buckets[n];
        if (bucket.size() >= kMaxPerBucket || bytes + n * sizeof(float) > kMaxBytes) return;
        bytes += n * sizeof(float);
        bucket.push_back(std::move(v));
    }
};
thread_local BufferPool t_pool;
}  // namespace

std::vector<float> pool_take_uninit(size_t n) {
    std::vector<float> v = t_pool.take(n);
    if (v.size() != n) v.assign(n, 0.0f);  // cold path: fresh allocation
    return v;
}

std::vector<float> pool_take_zeroed(size_t n) {
    std::vector<float> v = t_pool.take(n);
    if (v.size() == n)
        std::fill(v.begin(), v.end(), 0.0f);
    else
        v.assign(n, 0.0f);
    return v;
}

void pool_return(std::vector<float>&& v) { t_pool.put(std::move(v)); }

}  // namespace detail

int64_t shape_numel(const Shape& s) {
    int64_t n = 1;
    for (int d : s) n *= d;
    return n;
}

std::string shape_str(const Shape& s) {
    std::string out = "[";
    for (size_t i = 0; i < s.size(); ++i) {
        if (i) out += "x";
        out += std::to_string(s[i]);
    }
    return out + "]";
}

ActivationKind activation_from_string(const std::string& s) {
    if (s == "leaky_relu") return ActivationKind::LeakyRelu;
    if (s == "sine") return ActivationKind::Sine;
    if (s == "gaussian") return ActivationKind::Gaussian;
    throw ConfigError("unknown activation: " + s);
}

std::string to_string(ActivationKind k) {
    switch (k) {
        case ActivationKind::LeakyRelu: return "leaky_relu";
        case ActivationKind::Sine: return "sine";
        case ActivationKind::Gaussian: return "gaussian";
    }
    return "?";
}

UpsampleMode upsample_mode_from_string(const std::string& s) {
    if (s == "nearest") return UpsampleMode::Nearest;
    if (s == "bilinear") return UpsampleMode::Bilinear;
    throw ConfigError("unknown upsample mode: " + s);
}

std::string to_string(UpsampleMode m) {
    return m == UpsampleMode::Nearest ? "nearest" : "bilinear";
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
    return full(std::move(shape), 0.0f, requires_grad);
}

Tensor Tensor::full(Shape shape, float value, bool requires_grad) {
    auto n = std::make_shared<detail::Node>();
    n->shape = std::move(shape);
    for (int d : n->shape) check(d > 0, "tensor dims must be positive, got ", shape_str(n->shape));
    n->data.assign(static_cast<size_t>(n->numel()), value);
    n->requires_grad = requires_grad;
    return Tensor(std::move(n));
}

Tensor Tensor::from_data(Shape shape, std::vector<float> data, bool requires_grad) {
    auto n = std::make_shared<detail::Node>();
    n->shape = std::move(shape);
    check(static_cast<int64_t>(data.size()) == n->numel(), "data length ", data.size(),
          " does not match shape ", shape_str(n->shape));
    n->data = std::move(data);
    n->requires_grad = requires_grad;
    return Tensor(std::move(n));
}

Tensor Tensor::scalar(float value, bool requires_grad) {
    return from_data({1}, {value}, requires_grad);
}

const Shape& Tensor::shape() const {
    check(defined(), "use of undefined tensor");
    return node_->shape;
}

int64_t Tensor::numel() const { return node_->numel(); }

std::vector<float>& Tensor::data() { return node_->data; }
const std::vector<float>& Tensor::data() const { return node_->data; }

float Tensor::item() const {
    check(numel() == 1, "item() requires a scalar, shape is ", shape_str(shape()));
    return node_->data[0];
}

float Tensor::at(std::initializer_list<int> idx) const {
    const Shape& s = shape();
    check(idx.size() == s.size(), "index rank mismatch");
    int64_t flat = 0;
    size_t i = 0;
    for (int v : idx) {
        flat = flat * s[i] + v;
        ++i;
    }
    return node_->data[static_cast<size_t>(flat)];
}

bool Tensor::requires_grad() const { return node_->requires_grad; }
bool Tensor::has_grad() const { return defined() && !node_->grad.empty(); }

const std::vector<float>& Tensor::grad() const {
    check(has_grad(), "tensor has no gradient");
    return node_->grad;
}

std::vector<float>& Tensor::grad_buffer() { return node_->grad_buffer(); }

void Tensor::zero_grad() { node_->grad.clear(); }

bool Tensor::all_finite() const {
    for (float v : node_->data)
        if (!std::isfinite(v)) return false;
    return true;
}

Tensor Tensor::detached_copy(bool requires_grad) const {
    return from_data(shape(), data(), requires_grad);
}

Tensor Tensor::make_op(Shape shape, std::vector<float> data, std::vector<Tensor> parents,
                       std::function<void(detail::Node&)> backward) {
    auto n = std::make_shared<detail::Node>();
    n->shape = std::move(shape);
    check(static_cast<int64_t>(data.size()) == n->numel(), "op output size mismatch");
    n->data = std::move(data);
    for (const Tensor& p : parents) {
        check(p.defined(), "op parent is undefined");
        n->parents.push_back(p.node());
        n->requires_grad = n->requires_grad || p.requires_grad();
    }
    if (n->requires_grad) n->backward_fn = std::move(backward);
    return Tensor(std::move(n));
}

void Tensor::backward() const {
    check(defined(), "backward() on undefined tensor");
    check(numel() == 1, "backward() requires a scalar, shape is ", shape_str(shape()));

    // Iterative post-order DFS so deep graphs cannot overflow the stack.
    std::vector<detail::Node*> order;
    std::unordered_set<detail::Node*> visited;
    struct Frame {
        detail::Node* node;
        size_t next_parent;
    };
    std::vector<Frame> stack;
    if (node_->requires_grad) stack.push_back({node_.get(), 0});
    visited.insert(node_.get());
    while (!stack.empty()) {
        Frame& f = stack.back();
        if (f.next_parent < f.node->parents.size()) {
            detail::Node* p = f.node->parents[f.next_parent++].get();
            if (p->requires_grad && visited.insert(p).second) stack.push_back({p, 0});
        } else {
            order.push_back(f.node);
            stack.pop_back();
        }
    }

    node_->grad_buffer()[0] += 1.0f;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        detail::Node* n = *it;
        if (n->backward_fn && !n->grad.empty()) n->backward_fn(*n);
    }
}

}  // namespace pip
