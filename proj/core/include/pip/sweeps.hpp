#pragma once

#include <functional>

#include "pip/analysis.hpp"
#include "pip/encodings.hpp"
#include "pip/tasks.hpp"

namespace pip {

// ---- spectral-bias probe ---------------------------------------------------
// Fits a model to the clean 3-tone sinusoid image and samples the
// per-frequency FFT amplitude error along the way, yielding the probe table
// and the threshold crossings (which frequencies converge first).

struct SpectralBiasConfig {
    int height = 128, width = 128;
    std::array<double, 3> tone_freqs = {4.0, 8.0, 16.0};  // cycles/image
    std::array<double, 3> tone_amps = {1.0, 1.0, 1.0};
    int m = 8;
    // Ladder cap: the radian equivalent of 8 cycles across the unit axis,
    // one octave below the highest tone in the image.
    float f_max = static_cast<float>(16.0 * M_PI);
    HourglassConfig model;  // in/out channels are set by the harness
    int iterations = 600;
    float lr = 0.01f;
    int probe_stride = 4;            // sample the spectrum every N iterations
    double threshold_fraction = 0.2; // convergence_order threshold
    uint64_t seed = 0;
};

struct SpectralBiasResult {
    ProbeTable table;
    std::vector<int> crossings;  // per tone, -1 when not reached
    RunResult run;
    Tensor gt;
};

SpectralBiasResult spectral_bias_probe(const SpectralBiasConfig& cfg);

// ---- f_max sweep ------------------------------------------------------------
// Denoises one image with FF inputs at several ladder caps and reports the
// final EMA PSNR per cap.

struct FmaxSweepConfig {
    std::vector<double> f_max_values = {4, 16, 64, 256, 1024, 4096, 16384, 65536};
    int m = 8;
    float sigma = 25.0f / 255.0f;
    HourglassConfig model;  // in channels set per encoding
    int iterations = 600;
    float lr = 0.01f;
    float ema_decay = 0.99f;
    uint64_t seed = 0;
};

struct SweepPoint {
    double f_max;
    double psnr_ema;
    double psnr_raw;
};

// `clean` is a CxHxW image with sizes divisible by the model's divisor.
// `on_point` (optional) observes each finished run.
std::vector<SweepPoint> fmax_sweep(const FmaxSweepConfig& cfg, const Tensor& clean,
                                   const std::function<void(const SweepPoint&)>& on_point = nullptr);

// Deterministic procedural test images (mid/high frequency content plus
// smooth shading), used by the sweep defaults, tests, and examples.
Tensor synth_texture_image(int C, int H, int W, uint64_t seed);
// Frame t of a moving variant of the same pattern (wrap-around translation).
Tensor synth_texture_frame(int C, int H, int W, uint64_t seed, int t);

}  // namespace pip
