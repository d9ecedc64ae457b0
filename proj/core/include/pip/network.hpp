#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pip/tensor.hpp"

namespace pip {

// Multi-scale encoder/decoder ("hourglass") as used for both the 1x1-kernel
// pixel-MLP variant and the 3x3 CNN baseline. Per level the encoder runs
// `blocks_per_level` conv blocks (the first with stride 2, which for k=1 is
// a pixelwise map followed by nearest-neighbor subsampling); the decoder
// upsamples, concatenates a 1x1-conv skip from the matching encoder scale,
// then runs one k-kernel block followed by 1x1 blocks. A 1x1 head plus
// sigmoid maps to the output range (0, 1).
struct HourglassConfig {
    int levels = 5;
    int width = 128;
    int blocks_per_level = 2;
    int skip_channels = 4;
    int kernel = 1;  // 1 | 3
    UpsampleMode upsample = UpsampleMode::Bilinear;
    ActivationKind act = ActivationKind::LeakyRelu;
    float act_param = 0.2f;
    int in_channels = 32;
    int out_channels = 3;
};

// Per-pixel MLP: depth x [1x1 conv, activation] followed by a 1x1 head and
// sigmoid. No resampling, no skips, no normalization.
struct FlatMlpConfig {
    int depth = 6;
    int width = 128;
    int in_channels = 32;
    int out_channels = 3;
    ActivationKind act = ActivationKind::LeakyRelu;
    float act_param = 0.2f;
};

enum class ModelKind { Hourglass, FlatMlp };

class Model {
   public:
    Tensor forward(const Tensor& z) const;

    std::vector<Parameter> parameters() const { return params_; }

    ModelKind kind() const { return kind_; }
    const HourglassConfig& hourglass_config() const;
    const FlatMlpConfig& flat_config() const;

    int64_t param_count() const;
    int conv_layer_count() const;

    // Spatial sizes must be divisible by this before forward() accepts them.
    int size_divisor() const;

    friend Model build_hourglass(const HourglassConfig& cfg, uint64_t seed);
    friend Model build_flat_mlp(const FlatMlpConfig& cfg, uint64_t seed);
    friend class CheckpointReader;

   private:
    struct ConvBlock {
        Parameter weight, bias;
        Parameter norm_scale, norm_shift;
        int stride = 1;
        int kernel = 1;
        bool has_norm = true;
        bool has_act = true;
    };

    Tensor run_block(const ConvBlock& b, const Tensor& x) const;

    ModelKind kind_ = ModelKind::Hourglass;
    HourglassConfig hg_;
    FlatMlpConfig flat_;
    std::vector<std::vector<ConvBlock>> enc_;  // [level][block]
    std::vector<ConvBlock> skips_;             // encoder stages 0..levels-2
    std::vector<std::vector<ConvBlock>> dec_;  // [level][block]
    ConvBlock head_;
    std::vector<Parameter> params_;
};

Model build_hourglass(const HourglassConfig& cfg, uint64_t seed);
Model build_flat_mlp(const FlatMlpConfig& cfg, uint64_t seed);

int64_t count_params(const Model& m);

// FLOPs convention: convolutions cost 2 * C_in * C_out * k^2 per output
// pixel plus one per-pixel bias add; elementwise ops cost a small documented
// constant per element (norm 8, activation 2, sigmoid 4, nearest resample 1,
// bilinear 8). count_macs counts convolution multiplies only, the quantity
// most profilers report.
int64_t count_flops(const Model& m, int H, int W);
int64_t count_macs(const Model& m, int H, int W);

// Hand-count helper for the stated conv cost convention.
inline int64_t conv_flops(int c_in, int c_out, int k, int64_t out_pixels) {
    return (2LL * c_in * c_out * k * k + c_out) * out_pixels;
}

// ---- checkpointing -------------------------------------------------------
// Little-endian binary: magic, format version, model-kind + config block,
// then named parameter blobs. Round trips are bit-exact.

void save_checkpoint(const Model& m, const std::string& path);
Model load_checkpoint(const std::string& path);

}  // namespace pip
