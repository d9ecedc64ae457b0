#pragma once

#include <vector>

#include "pip/tensor.hpp"

namespace pip {

struct AdamConfig {
    float lr = 0.01f;
    float beta1 = 0.9f;
    float beta2 = 0.999f;
    float eps = 1e-8f;
};

// Standard Adam with bias correction over a fixed parameter list. step()
// consumes the accumulated gradients and clears them; a parameter with no
// gradient at step time is an error (it names the parameter).
class AdamState {
   public:
    AdamState(std::vector<Parameter> params, AdamConfig cfg);

    void step();

    int64_t step_count() const { return step_; }
    const AdamConfig& config() const { return cfg_; }

   private:
    std::vector<Parameter> params_;
    std::vector<std::vector<float>> m_, v_;
    AdamConfig cfg_;
    int64_t step_ = 0;
};

}  // namespace pip
