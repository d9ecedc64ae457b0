#include "pip/tasks.hpp"

#include <Eigen/Dense>
#include <chrono>
#include <cmath>

#include "pip/adam.hpp"
#include "pip/analysis.hpp"

namespace pip {

TaskKind task_kind_from_string(const std::string& s) {
    if (s == "denoise") return TaskKind::Denoise;
    if (s == "sr") return TaskKind::Sr;
    if (s == "inpaint") return TaskKind::Inpaint;
    if (s == "video_denoise") return TaskKind::VideoDenoise;
    throw ConfigError("unknown task kind: " + s);
}

std::string to_string(TaskKind k) {
    switch (k) {
        case TaskKind::Denoise: return "denoise";
        case TaskKind::Sr: return "sr";
        case TaskKind::Inpaint: return "inpaint";
        case TaskKind::VideoDenoise: return "video_denoise";
    }
    return "?";
}

NoiseKind noise_kind_from_string(const std::string& s) {
    if (s == "none") return NoiseKind::None;
    if (s == "gaussian") return NoiseKind::Gaussian;
    if (s == "poisson") return NoiseKind::Poisson;
    throw ConfigError("unknown noise kind: " + s);
}

std::string to_string(NoiseKind k) {
    switch (k) {
        case NoiseKind::None: return "none";
        case NoiseKind::Gaussian: return "gaussian";
        case NoiseKind::Poisson: return "poisson";
    }
    return "?";
}

DownsampleKernel downsample_kernel_from_string(const std::string& s) {
    if (s == "box") return DownsampleKernel::Box;
    if (s == "bicubic") return DownsampleKernel::Bicubic;
    throw ConfigError("unknown downsample kernel: " + s);
}

std::string to_string(DownsampleKernel k) {
    return k == DownsampleKernel::Box ? "box" : "bicubic";
}

StopRule stop_rule_from_string(const std::string& s) {
    if (s == "fixed") return StopRule::Fixed;
    if (s == "emv") return StopRule::Emv;
    if (s == "wmv") return StopRule::Wmv;
    throw ConfigError("unknown stop rule: " + s);
}

std::string to_string(StopRule r) {
    switch (r) {
        case StopRule::Fixed: return "fixed";
        case StopRule::Emv: return "emv";
        case StopRule::Wmv: return "wmv";
    }
    return "?";
}

namespace {

Tensor apply_noise(const Tensor& clean, const TaskSpec& spec, uint64_t seed) {
    if (spec.noise == NoiseKind::None) return clean.detached_copy();
    std::vector<float> out(clean.data());
    if (spec.noise == NoiseKind::Gaussian) {
        Rng rng(derive_seed(seed, 0xD001));
        for (float& v : out)
            v = std::min(1.0f, std::max(0.0f, v + spec.noise_sigma * rng.normal()));
    } else {
        Rng rng(derive_seed(seed, 0xD002));
        const float peak = spec.poisson_peak;
        check<ConfigError>(peak > 0.0f, "poisson peak must be positive");
        for (float& v : out) {
            const double lam = static_cast<double>(std::max(0.0f, v)) * peak;
            v = std::min(1.0f, static_cast<float>(rng.poisson(lam)) / peak);
        }
    }
    return Tensor::from_data(clean.shape(), std::move(out));
}

Tensor expand_mask_channels(const Tensor& mask, int C) {
    check(mask.ndim() == 3, "mask must be CxHxW");
    if (mask.dim(0) == C) return mask;
    check(mask.dim(0) == 1, "mask must have 1 or ", C, " channels, got ", mask.dim(0));
    const int64_t P = static_cast<int64_t>(mask.dim(1)) * mask.dim(2);
    std::vector<float> out(static_cast<size_t>(C) * P);
    for (int c = 0; c < C; ++c) std::copy_n(mask.data().data(), P, out.data() + c * P);
    return Tensor::from_data({C, mask.dim(1), mask.dim(2)}, std::move(out));
}

// Catmull-Rom cubic (a = -0.5).
double cubic_kernel(double t) {
    constexpr double a = -0.5;
    t = std::abs(t);
    if (t <= 1.0) return (a + 2.0) * t * t * t - (a + 3.0) * t * t + 1.0;
    if (t < 2.0) return a * t * t * t - 5.0 * a * t * t + 8.0 * a * t - 4.0 * a;
    return 0.0;
}

// Rows of the 1D decimation operator for one axis (out_size x in_size).
// Box averages factor-aligned blocks; bicubic uses the kernel stretched by
// the factor (anti-aliased), sampled at block centers, edge-clamped, rows
// normalized to sum 1.
std::vector<float> axis_matrix(int in_size, int factor, DownsampleKernel kernel, int& out_size) {
    check(in_size % factor == 0, "downsample: size ", in_size, " not divisible by factor ",
          factor);
    out_size = in_size / factor;
    std::vector<float> A(static_cast<size_t>(out_size) * in_size, 0.0f);
    if (kernel == DownsampleKernel::Box) {
        const float w = 1.0f / static_cast<float>(factor);
        for (int o = 0; o < out_size; ++o)
            for (int i = 0; i < factor; ++i) A[static_cast<size_t>(o) * in_size + o * factor + i] = w;
        return A;
    }
    for (int o = 0; o < out_size; ++o) {
        const double center = (static_cast<double>(o) + 0.5) * factor - 0.5;
        const int lo = static_cast<int>(std::floor(center)) - 2 * factor + 1;
        const int hi = static_cast<int>(std::floor(center)) + 2 * factor;
        double sum = 0.0;
        std::vector<double> w(static_cast<size_t>(hi - lo + 1));
        for (int i = lo; i <= hi; ++i) {
            const double t = (static_cast<double>(i) - center) / factor;
            w[static_cast<size_t>(i - lo)] = cubic_kernel(t);
            sum += w[static_cast<size_t>(i - lo)];
        }
        for (int i = lo; i <= hi; ++i) {
            const int ic = std::min(std::max(i, 0), in_size - 1);
            A[static_cast<size_t>(o) * in_size + ic] +=
                static_cast<float>(w[static_cast<size_t>(i - lo)] / sum);
        }
    }
    return A;
}

}  // namespace

Tensor downsample(const Tensor& image, int factor, DownsampleKernel kernel) {
    check(image.ndim() == 3, "downsample expects CxHxW, got ", shape_str(image.shape()));
    check(factor >= 2, "downsample factor must be >= 2, got ", factor);
    const int C = image.dim(0), H = image.dim(1), W = image.dim(2);
    int OH = 0, OW = 0;
    auto Ah = axis_matrix(H, factor, kernel, OH);
    auto Aw = axis_matrix(W, factor, kernel, OW);

    using RowMat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    Eigen::Map<const RowMat> mh(Ah.data(), OH, H);
    Eigen::Map<const RowMat> mw(Aw.data(), OW, W);
    std::vector<float> out(static_cast<size_t>(C) * OH * OW);
    for (int c = 0; c < C; ++c) {
        Eigen::Map<const RowMat> x(image.data().data() + static_cast<int64_t>(c) * H * W, H, W);
        Eigen::Map<RowMat> o(out.data() + static_cast<int64_t>(c) * OH * OW, OH, OW);
        o.noalias() = mh * x * mw.transpose();
    }
    return Tensor::make_op(
        {C, OH, OW}, std::move(out), {image},
        [C, H, W, OH, OW, Ah = std::move(Ah), Aw = std::move(Aw)](detail::Node& n) {
            Eigen::Map<const RowMat> mh(Ah.data(), OH, H);
            Eigen::Map<const RowMat> mw(Aw.data(), OW, W);
            auto& g = n.parents[0]->grad_buffer();
            for (int c = 0; c < C; ++c) {
                Eigen::Map<const RowMat> go(n.grad.data() + static_cast<int64_t>(c) * OH * OW, OH,
                                            OW);
                Eigen::Map<RowMat> gx(g.data() + static_cast<int64_t>(c) * H * W, H, W);
                gx.noalias() += mh.transpose() * go * mw;
            }
        });
}

Tensor degrade(const Tensor& clean, const TaskSpec& spec, uint64_t seed) {
    check(clean.ndim() == 3, "degrade expects CxHxW");
    switch (spec.kind) {
        case TaskKind::Denoise:
        case TaskKind::VideoDenoise:
            return apply_noise(clean, spec, seed);
        case TaskKind::Sr: {
            Tensor lr = downsample(clean, spec.sr_factor, spec.down_kernel).detached_copy();
            return spec.noise == NoiseKind::None ? lr : apply_noise(lr, spec, seed);
        }
        case TaskKind::Inpaint: {
            check(spec.mask.defined(), "inpaint degrade needs a mask");
            Tensor m = expand_mask_channels(spec.mask, clean.dim(0));
            check(m.shape() == clean.shape(), "mask spatial dims ", shape_str(spec.mask.shape()),
                  " do not match image ", shape_str(clean.shape()));
            std::vector<float> out(clean.data());
            for (size_t i = 0; i < out.size(); ++i)
                if (m.data()[i] <= 0.5f) out[i] = 0.0f;
            return Tensor::from_data(clean.shape(), std::move(out));
        }
    }
    throw Error("unreachable");
}

Tensor task_loss(const Tensor& output, const Tensor& observed, const TaskSpec& spec) {
    switch (spec.kind) {
        case TaskKind::Denoise:
        case TaskKind::VideoDenoise:
            return mse_loss(output, observed);
        case TaskKind::Sr:
            return mse_loss(downsample(output, spec.sr_factor, spec.down_kernel), observed);
        case TaskKind::Inpaint: {
            check(spec.mask.defined(), "inpaint loss needs a mask");
            return masked_mse_loss(output, observed,
                                   expand_mask_channels(spec.mask, output.dim(0)));
        }
    }
    throw Error("unreachable");
}

namespace {

void validate_train_config(const TrainConfig& cfg) {
    check<ConfigError>(cfg.iterations >= 1, "iterations must be >= 1, got ", cfg.iterations);
    check<ConfigError>(cfg.ema_decay >= 0.0f && cfg.ema_decay < 1.0f,
                       "ema_decay must be in [0,1), got ", cfg.ema_decay);
    check<ConfigError>(cfg.lr > 0.0f, "learning rate must be positive");
}

std::optional<VarianceStopDetector> make_detector(const TrainConfig& cfg) {
    switch (cfg.stop_rule) {
        case StopRule::Fixed: return std::nullopt;
        case StopRule::Emv:
            return VarianceStopDetector::emv(cfg.stop.decay, cfg.stop.patience, cfg.stop.stride);
        case StopRule::Wmv:
            return VarianceStopDetector::wmv(cfg.stop.window, cfg.stop.patience, cfg.stop.stride);
    }
    return std::nullopt;
}

Tensor jittered(const Tensor& z, float std_dev, Rng& rng) {
    std::vector<float> d(z.data());
    for (float& v : d) v += std_dev * rng.normal();
    return Tensor::from_data(z.shape(), std::move(d));
}

void ema_update(std::vector<float>& ema, const std::vector<float>& x, float decay, bool first) {
    if (first) {
        ema = x;
        return;
    }
    const float a = 1.0f - decay;
    for (size_t i = 0; i < ema.size(); ++i) ema[i] += a * (x[i] - ema[i]);
}

}  // namespace

RunResult train(Model& model, const InputFn& make_input, std::vector<Parameter> extra_params,
                const std::function<void()>& post_step, const Tensor& observed,
                const TaskSpec& spec, const TrainConfig& cfg, const Tensor* gt,
                const SnapshotFn& snapshot) {
    validate_train_config(cfg);
    const auto t_start = std::chrono::steady_clock::now();

    std::vector<Parameter> params = model.parameters();
    for (const Parameter& p : extra_params) params.push_back(p);
    AdamState opt(std::move(params), AdamConfig{cfg.lr});

    Rng jitter_rng(derive_seed(cfg.seed, 0x1177));
    auto detector = make_detector(cfg);

    RunResult res;
    std::vector<float> ema;
    Tensor best_raw, best_ema;
    for (int it = 1; it <= cfg.iterations; ++it) {
        Tensor z = make_input();
        if (cfg.input_jitter_std > 0.0f && !z.requires_grad())
            z = jittered(z, cfg.input_jitter_std, jitter_rng);
        Tensor out = model.forward(z);
        Tensor loss = task_loss(out, observed, spec);
        const float lv = loss.item();
        if (!std::isfinite(lv))
            throw NumericError(format_msg("non-finite loss at iteration ", it, " (lr ", cfg.lr,
                                          "); aborting"));
        loss.backward();
        opt.step();
        if (post_step) post_step();

        ema_update(ema, out.data(), cfg.ema_decay, it == 1);
        res.loss_curve.push_back(lv);
        if (gt) {
            res.psnr_curve.push_back(static_cast<float>(psnr(out.data(), gt->data())));
            res.psnr_ema_curve.push_back(static_cast<float>(psnr(ema, gt->data())));
        }
        res.final_output = out.detached_copy();
        res.ema_output = Tensor::from_data(out.shape(), ema);
        if (detector) {
            const bool new_min = detector->observe(it, out.data());
            if (new_min) {
                best_raw = res.final_output;
                best_ema = res.ema_output;
            }
            if (detector->triggered()) {
                res.executed_iterations = it;
                break;
            }
        }
        if (snapshot && cfg.snapshot_stride > 0 && it % cfg.snapshot_stride == 0)
            snapshot(it, res.final_output, res.ema_output);
        res.executed_iterations = it;
    }

    if (detector && detector->stop_iteration() >= 0) {
        res.stop_iteration = detector->stop_iteration();
        if (best_raw.defined()) {
            res.final_output = best_raw;
            res.ema_output = best_ema;
        }
    } else {
        res.stop_iteration = res.executed_iterations;
    }
    res.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return res;
}

RunResult train(Model& model, const Tensor& z, const Tensor& observed, const TaskSpec& spec,
                const TrainConfig& cfg, const Tensor* gt, const SnapshotFn& snapshot) {
    return train(
        model, [&z]() { return z; }, {}, nullptr, observed, spec, cfg, gt, snapshot);
}

RunResult train_video(Model& model, const FrameInputFn& make_input,
                      std::vector<Parameter> extra_params, const std::function<void()>& post_step,
                      const std::vector<Tensor>& observed_frames, const TaskSpec& spec,
                      const TrainConfig& cfg, const std::vector<Tensor>* gt_frames) {
    validate_train_config(cfg);
    check(!observed_frames.empty(), "train_video: no frames");
    if (gt_frames)
        check(gt_frames->size() == observed_frames.size(), "train_video: gt frame count mismatch");
    const auto t_start = std::chrono::steady_clock::now();
    const int T = static_cast<int>(observed_frames.size());

    std::vector<Parameter> params = model.parameters();
    for (const Parameter& p : extra_params) params.push_back(p);
    AdamState opt(std::move(params), AdamConfig{cfg.lr});
    auto detector = make_detector(cfg);

    RunResult res;
    std::vector<std::vector<float>> ema(static_cast<size_t>(T));
    res.final_frames.resize(static_cast<size_t>(T));
    res.ema_frames.resize(static_cast<size_t>(T));
    std::vector<Tensor> best_raw, best_ema;
    const float inv_t = 1.0f / static_cast<float>(T);

    for (int it = 1; it <= cfg.iterations; ++it) {
        float loss_sum = 0.0f;
        double mse_sum = 0.0, mse_ema_sum = 0.0;
        for (int f = 0; f < T; ++f) {
            Tensor z = make_input(f);
            Tensor out = model.forward(z);
            Tensor loss = scale(task_loss(out, observed_frames[static_cast<size_t>(f)], spec),
                                inv_t);
            const float lv = loss.item();
            if (!std::isfinite(lv))
                throw NumericError(format_msg("non-finite loss at iteration ", it, ", frame ", f,
                                              " (lr ", cfg.lr, "); aborting"));
            loss_sum += lv;
            loss.backward();  // gradients accumulate across the frame sweep
            ema_update(ema[static_cast<size_t>(f)], out.data(), cfg.ema_decay, it == 1);
            res.final_frames[static_cast<size_t>(f)] = out.detached_copy();
            res.ema_frames[static_cast<size_t>(f)] =
                Tensor::from_data(out.shape(), ema[static_cast<size_t>(f)]);
            if (gt_frames) {
                const auto& g = (*gt_frames)[static_cast<size_t>(f)].data();
                mse_sum += mse(out.data(), g);
                mse_ema_sum += mse(ema[static_cast<size_t>(f)], g);
            }
        }
        opt.step();
        if (post_step) post_step();
        res.loss_curve.push_back(loss_sum);
        if (gt_frames) {
            res.psnr_curve.push_back(static_cast<float>(psnr_from_mse(mse_sum / T)));
            res.psnr_ema_curve.push_back(static_cast<float>(psnr_from_mse(mse_ema_sum / T)));
        }
        if (detector) {
            std::vector<float> stacked;
            for (const Tensor& t : res.final_frames)
                stacked.insert(stacked.end(), t.data().begin(), t.data().end());
            if (detector->observe(it, stacked)) {
                best_raw = res.final_frames;
                best_ema = res.ema_frames;
            }
            if (detector->triggered()) {
                res.executed_iterations = it;
                break;
            }
        }
        res.executed_iterations = it;
    }
    if (detector && detector->stop_iteration() >= 0) {
        res.stop_iteration = detector->stop_iteration();
        if (!best_raw.empty()) {
            res.final_frames = best_raw;
            res.ema_frames = best_ema;
        }
    } else {
        res.stop_iteration = res.executed_iterations;
    }
    res.final_output = res.final_frames.front();
    res.ema_output = res.ema_frames.front();
    res.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return res;
}

}  // namespace pip
