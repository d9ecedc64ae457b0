#include "pip/sweeps.hpp"

#include <cmath>

namespace pip {

SpectralBiasResult spectral_bias_probe(const SpectralBiasConfig& cfg) {
    SpectralBiasResult res;
    res.gt = synth_sinusoid_image(cfg.height, cfg.width, cfg.tone_freqs, cfg.tone_amps);

    FrequencySet fs = frequency_ladder(cfg.m, cfg.f_max);
    EncodingTensor enc = fourier_grid_2d(cfg.height, cfg.width, fs);

    HourglassConfig mc = cfg.model;
    mc.in_channels = enc.tensor.dim(0);
    mc.out_channels = 1;
    Model model = build_hourglass(mc, derive_seed(cfg.seed, 0x5B01));

    for (int k = 0; k < 3; ++k)
        res.table.probe_freqs.push_back(static_cast<int>(cfg.tone_freqs[static_cast<size_t>(k)]));

    TaskSpec spec;
    spec.kind = TaskKind::Denoise;
    spec.noise = NoiseKind::None;  // fit the clean synthetic image
    TrainConfig tc;
    tc.iterations = cfg.iterations;
    tc.lr = cfg.lr;
    tc.seed = cfg.seed;
    tc.snapshot_stride = cfg.probe_stride;

    auto probe = [&](int iteration, const Tensor& raw, const Tensor&) {
        res.table.iterations.push_back(iteration);
        res.table.errors.push_back(amplitude_error(raw, res.gt, res.table.probe_freqs));
    };
    res.run = train(model, enc.tensor, res.gt, spec, tc, &res.gt, probe);
    res.crossings = convergence_order(res.table, cfg.threshold_fraction);
    return res;
}

std::vector<SweepPoint> fmax_sweep(const FmaxSweepConfig& cfg, const Tensor& clean,
                                   const std::function<void(const SweepPoint&)>& on_point) {
    check(clean.ndim() == 3, "fmax_sweep expects a CxHxW clean image");
    const int H = clean.dim(1), W = clean.dim(2);

    TaskSpec spec;
    spec.kind = TaskKind::Denoise;
    spec.noise = NoiseKind::Gaussian;
    spec.noise_sigma = cfg.sigma;
    const Tensor observed = degrade(clean, spec, derive_seed(cfg.seed, 0x5C01));

    std::vector<SweepPoint> points;
    for (double f_max : cfg.f_max_values) {
        FrequencySet fs = frequency_ladder(cfg.m, static_cast<float>(f_max));
        EncodingTensor enc = fourier_grid_2d(H, W, fs);
        HourglassConfig mc = cfg.model;
        mc.in_channels = enc.tensor.dim(0);
        mc.out_channels = clean.dim(0);
        Model model = build_hourglass(mc, derive_seed(cfg.seed, 0x5C02));
        TrainConfig tc;
        tc.iterations = cfg.iterations;
        tc.lr = cfg.lr;
        tc.ema_decay = cfg.ema_decay;
        tc.seed = cfg.seed;
        RunResult run = train(model, enc.tensor, observed, spec, tc, &clean);
        SweepPoint p{f_max, psnr(run.ema_output, clean), psnr(run.final_output, clean)};
        if (on_point) on_point(p);
        points.push_back(p);
    }
    return points;
}

namespace {

// Smooth pseudo-random phases so the pattern is seed-dependent but stable.
float phase_of(uint64_t seed, int k) {
    Rng rng(derive_seed(seed, 0x7E00 + static_cast<uint64_t>(k)));
    return rng.uniform(0.0f, 6.2831853f);
}

}  // namespace

Tensor synth_texture_frame(int C, int H, int W, uint64_t seed, int t) {
    check(C >= 1 && H >= 4 && W >= 4, "texture image too small");
    std::vector<float> out(static_cast<size_t>(C) * H * W);
    // Wrap-around drift of two pixels per frame horizontally, one vertically.
    const float dx = 2.0f * static_cast<float>(t) / static_cast<float>(W);
    const float dy = 1.0f * static_cast<float>(t) / static_cast<float>(H);
    for (int c = 0; c < C; ++c) {
        const float p0 = phase_of(seed, 4 * c);
        const float p1 = phase_of(seed, 4 * c + 1);
        const float p2 = phase_of(seed, 4 * c + 2);
        const float p3 = phase_of(seed, 4 * c + 3);
        float* plane = out.data() + static_cast<int64_t>(c) * H * W;
        for (int y = 0; y < H; ++y) {
            const float v = static_cast<float>(y) / static_cast<float>(H) - dy;
            for (int x = 0; x < W; ++x) {
                const float u = static_cast<float>(x) / static_cast<float>(W) - dx;
                const float tau = 6.2831853f;
                float s = 0.5f;
                s += 0.16f * std::sin(tau * (3.0f * u + 2.0f * v) + p0);
                s += 0.12f * std::sin(tau * (9.0f * u - 4.0f * v) + p1);
                s += 0.09f * std::sin(tau * (6.0f * v + 5.0f * u) + p2);
                s += 0.06f * std::sin(tau * 13.0f * v + p3);
                s += 0.10f * (u + v);  // gentle shading ramp
                plane[static_cast<int64_t>(y) * W + x] = std::min(0.98f, std::max(0.02f, s));
            }
        }
    }
    return Tensor::from_data({C, H, W}, std::move(out));
}

Tensor synth_texture_image(int C, int H, int W, uint64_t seed) {
    return synth_texture_frame(C, H, W, seed, 0);
}

}  // namespace pip
