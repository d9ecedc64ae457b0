#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "pip/early_stop.hpp"
#include "pip/network.hpp"
#include "pip/tensor.hpp"

namespace pip {

enum class TaskKind { Denoise, Sr, Inpaint, VideoDenoise };
enum class NoiseKind { None, Gaussian, Poisson };
enum class DownsampleKernel { Box, Bicubic };

TaskKind task_kind_from_string(const std::string& s);
std::string to_string(TaskKind k);
NoiseKind noise_kind_from_string(const std::string& s);
std::string to_string(NoiseKind k);
DownsampleKernel downsample_kernel_from_string(const std::string& s);
std::string to_string(DownsampleKernel k);

// Degradation description. Only the fields relevant to `kind` are consulted.
struct TaskSpec {
    TaskKind kind = TaskKind::Denoise;
    NoiseKind noise = NoiseKind::Gaussian;
    float noise_sigma = 25.0f / 255.0f;  // gaussian std on the [0,1] scale
    float poisson_peak = 30.0f;
    int sr_factor = 4;
    DownsampleKernel down_kernel = DownsampleKernel::Box;
    Tensor mask;  // inpaint only; 1 = known pixel, same spatial dims as observed
};

enum class StopRule { Fixed, Emv, Wmv };
StopRule stop_rule_from_string(const std::string& s);
std::string to_string(StopRule r);

struct StopParams {
    float decay = 0.99f;  // EMV
    int window = 50;      // WMV
    int patience = 100;   // checks without a new minimum before confirming
    int stride = 5;       // iterations between checks
};

struct TrainConfig {
    int iterations = 1800;
    float lr = 0.01f;
    float ema_decay = 0.99f;
    float input_jitter_std = 0.0f;  // additive gaussian on z; 0 disables
    StopRule stop_rule = StopRule::Fixed;
    StopParams stop;
    uint64_t seed = 0;
    int snapshot_stride = 0;  // invoke the snapshot callback every N iters
};

struct RunResult {
    Tensor final_output;  // raw model output at the stop point
    Tensor ema_output;    // EMA of outputs at the stop point
    std::vector<Tensor> final_frames, ema_frames;  // video tasks
    std::vector<float> loss_curve;
    std::vector<float> psnr_curve, psnr_ema_curve;  // empty without ground truth
    int stop_iteration = 0;
    int executed_iterations = 0;
    double wall_seconds = 0.0;
    int pad_h = 0, pad_w = 0;  // reflection padding applied by the caller
};

// Applies the degradation described by `spec` to a clean image:
// gaussian noise then clip to [0,1]; scaled-Poisson counts; anti-aliased
// downsampling for SR; zeroing of masked-out pixels for inpainting.
Tensor degrade(const Tensor& clean, const TaskSpec& spec, uint64_t seed);

// Anti-aliased decimation by an integer factor (box average or separable
// bicubic); differentiable, so it can sit inside the SR loss.
Tensor downsample(const Tensor& image, int factor, DownsampleKernel kernel);

// Task data term: denoise -> mse(output, observed); SR -> mse of the
// downsampled output; inpaint -> mse over known pixels only.
Tensor task_loss(const Tensor& output, const Tensor& observed, const TaskSpec& spec);

// Builds the network input for one iteration. Called fresh every iteration
// so learned-frequency encodings re-enter the graph.
using InputFn = std::function<Tensor()>;
// Called every cfg.snapshot_stride iterations with (iteration, raw, ema).
using SnapshotFn = std::function<void(int, const Tensor&, const Tensor&)>;

// Fits the model to one observed image: repeated forward / task_loss /
// backward / Adam step, with EMA of the (sigmoid) outputs, per-iteration
// curves, and the configured stopping rule. `extra_params` join the
// optimizer (learned frequencies); `post_step` runs after each Adam step
// (positivity projection). A non-finite loss aborts with a NumericError
// naming the iteration and learning rate.
RunResult train(Model& model, const InputFn& make_input, std::vector<Parameter> extra_params,
                const std::function<void()>& post_step, const Tensor& observed,
                const TaskSpec& spec, const TrainConfig& cfg, const Tensor* gt = nullptr,
                const SnapshotFn& snapshot = nullptr);

// Convenience wrapper for a fixed input tensor.
RunResult train(Model& model, const Tensor& z, const Tensor& observed, const TaskSpec& spec,
                const TrainConfig& cfg, const Tensor* gt = nullptr,
                const SnapshotFn& snapshot = nullptr);

// Video variant: one shared model fitted to all frames; each iteration
// sweeps the frames, averaging the per-frame losses (gradients accumulate
// across the sweep, then one Adam step). Curves hold per-iteration means.
using FrameInputFn = std::function<Tensor(int frame)>;
RunResult train_video(Model& model, const FrameInputFn& make_input,
                      std::vector<Parameter> extra_params, const std::function<void()>& post_step,
                      const std::vector<Tensor>& observed_frames, const TaskSpec& spec,
                      const TrainConfig& cfg, const std::vector<Tensor>* gt_frames = nullptr);

}  // namespace pip
