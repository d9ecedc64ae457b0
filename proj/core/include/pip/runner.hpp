#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "pip/image_io.hpp"
#include "pip/run_config.hpp"
#include "pip/sweeps.hpp"

namespace pip {

// Final numbers of one run, as written to metrics.json. Values are -1 when
// not applicable (e.g. no ground truth).
struct ImageMetrics {
    double final_psnr = -1.0;
    double final_psnr_ema = -1.0;
    double best_psnr = -1.0;
    int best_psnr_iteration = -1;
    double noisy_psnr = -1.0;
    double baseline_psnr = -1.0;  // SR: bilinear upsampling of the observation
    double ssim_ema = -1.0;
    double ssim3d_ema = -1.0;  // video only
};

struct RunOutputs {
    RunResult result;
    ImageMetrics metrics;
    std::string metrics_json;  // exact bytes written to metrics.json
    std::filesystem::path out_dir;
};

// Runs a denoise / sr / inpaint experiment end to end: loads inputs,
// synthesizes the degradation when asked, pads to the model's divisor,
// trains, crops back, and writes config.resolved, metrics.json, curves.csv
// and PNGs into the run directory. Progress goes to `log` (wall-clock never
// enters metrics.json, so reruns reproduce it bit-identically).
RunOutputs run_image_task(RunConfig cfg, std::ostream& log);

// video_denoise on a directory of frames; one shared model over all frames.
RunOutputs run_video_task(RunConfig cfg, std::ostream& log);

// Fits the 3-tone sinusoid image and writes the per-frequency convergence
// table (probe.csv) plus crossings to metrics.json.
struct SpectralBiasOutputs {
    SpectralBiasResult probe;
    std::string metrics_json;
    std::filesystem::path out_dir;
};
SpectralBiasOutputs run_spectral_bias(RunConfig cfg, std::ostream& log);

// Denoising PSNR across ladder caps; writes sweep.csv and metrics.json.
struct SweepOutputs {
    std::vector<SweepPoint> points;
    std::string metrics_json;
    std::filesystem::path out_dir;
};
SweepOutputs run_fmax_sweep(RunConfig cfg, std::ostream& log);

// Writes the configured encoding's channels as a PNG contact sheet.
std::filesystem::path run_encode_dump(RunConfig cfg, std::ostream& log);

// Builds the model described by the config (used by count-params and the
// task runners).
Model model_from_config(const RunConfig& cfg);

// Helpers shared by the CLI and tests.
std::filesystem::path prepare_out_dir(const RunConfig& cfg);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace pip
