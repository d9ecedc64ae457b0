#pragma once

#include <string>

#include "pip/encodings.hpp"
#include "pip/network.hpp"
#include "pip/tasks.hpp"

namespace pip {

// One experiment, fully described: task + encoding + model + training +
// paths. Serializes to a sectioned key=value file; parsing rejects unknown
// keys. Every run writes its fully resolved config next to its outputs, and
// re-running from that file reproduces the metrics bit-identically.
struct RunConfig {
    // [task]
    TaskKind task = TaskKind::Denoise;
    NoiseKind noise = NoiseKind::Gaussian;
    float sigma255 = 25.0f;  // gaussian std on the 0..255 scale
    float poisson_peak = 30.0f;
    int sr_factor = 4;
    DownsampleKernel down_kernel = DownsampleKernel::Box;
    bool synthesize = false;  // degrade the input to produce the observation

    // [encoding]
    EncodingKind encoding = EncodingKind::FourierFeatures;
    int m = 8;
    float f_max = 256.0f;
    int m_temporal = 4;
    float f_max_temporal = 8.0f;
    bool trainable_freqs = false;
    int noise_channels = 32;
    uint64_t encoding_seed = 1;

    // [model]
    std::string preset = "pip-default";
    std::string arch = "hourglass";  // hourglass | flat
    int kernel = 1;
    int levels = 5;
    int width = 128;
    int blocks_per_level = 2;
    int skip_channels = 4;
    UpsampleMode upsample = UpsampleMode::Bilinear;
    ActivationKind act = ActivationKind::LeakyRelu;
    float act_param = 0.2f;
    int out_channels = 3;
    int in_channels = 0;  // 0 = derive from the encoding
    int flat_depth = 6;

    // [train]
    int iterations = 0;  // 0 = per-task default
    float lr = 0.01f;
    float ema_decay = 0.99f;
    float input_jitter_std = 0.0f;
    StopRule stop_rule = StopRule::Fixed;
    StopParams stop;
    uint64_t seed = 42;
    int snapshot_stride = 0;

    // [probe] (synthetic-input commands: spectral-bias, fmax-sweep)
    int probe_h = 128;
    int probe_w = 128;
    int probe_stride = 4;
    std::string fmax_list = "4,16,64,256,1024,4096,16384,65536";

    // [io]
    std::string input, gt, mask, frames, gt_frames, out_dir;
};

// Applies the named preset's architecture/encoding defaults. Recognized:
// pip-default, dip-default, pip-learned, pip-video, pip-inpaint, flat-mlp,
// none.
void apply_preset(RunConfig& cfg, const std::string& preset);

// Fills derived defaults: per-task iteration budget when iterations == 0,
// in_channels from the encoding when 0. Throws ConfigError on inconsistent
// settings.
void resolve_run_config(RunConfig& cfg);

// Number of input channels the configured encoding produces.
int encoding_channels(const RunConfig& cfg);

RunConfig parse_run_config_file(const std::string& path);
RunConfig parse_run_config_string(const std::string& text);
std::string serialize_run_config(const RunConfig& cfg);

std::vector<double> parse_double_list(const std::string& csv);
std::vector<uint64_t> parse_seed_list(const std::string& csv);

}  // namespace pip
