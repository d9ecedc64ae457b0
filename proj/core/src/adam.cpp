#include "pip/adam.hpp"

#include <cmath>
#include <unordered_set>

namespace pip {

AdamState::AdamState(std::vector<Parameter> params, AdamConfig cfg)
    : params_(std::move(params)), cfg_(cfg) {
    std::unordered_set<std::string> names;
    for (const Parameter& p : params_) {
        check(p.tensor.defined() && p.tensor.requires_grad(), "parameter '", p.name,
              "' must require gradients");
        check(names.insert(p.name).second, "duplicate parameter name '", p.name, "'");
        m_.emplace_back(p.tensor.numel(), 0.0f);
        v_.emplace_back(p.tensor.numel(), 0.0f);
    }
}

void AdamState::step() {
    ++step_;
    const double bc1 = 1.0 - std::pow(static_cast<double>(cfg_.beta1), static_cast<double>(step_));
    const double bc2 = 1.0 - std::pow(static_cast<double>(cfg_.beta2), static_cast<double>(step_));
    const float inv_bc1 = static_cast<float>(1.0 / bc1);
    const float inv_bc2 = static_cast<float>(1.0 / bc2);
    for (size_t k = 0; k < params_.size(); ++k) {
        Tensor& t = params_[k].tensor;
        check(t.has_grad(), "adam step: parameter '", params_[k].name, "' has no gradient");
        const std::vector<float>& g = t.grad();
        std::vector<float>& m = m_[k];
        std::vector<float>& v = v_[k];
        std::vector<float>& x = t.data();
        for (size_t i = 0; i < g.size(); ++i) {
            m[i] = cfg_.beta1 * m[i] + (1.0f - cfg_.beta1) * g[i];
            v[i] = cfg_.beta2 * v[i] + (1.0f - cfg_.beta2) * g[i] * g[i];
            const float mhat = m[i] * inv_bc1;
            const float vhat = v[i] * inv_bc2;
            x[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
        }
        t.zero_grad();
    }
}

}  // namespace pip
