#pragma once

#include <cstdint>
#include <vector>

#include "pip/tensor.hpp"

namespace pip {

// Log-linear frequency ladder f_i = sigma^(i/m) with the base chosen so the
// top rung lands on f_max. Coordinates are normalized to [0, 1] per axis and
// the frequencies are in radians, so f_max is image-size independent.
struct FrequencySet {
    int m = 8;
    float f_max = 256.0f;
    float sigma = 0.0f;  // ladder base; 0 for the m = 1 special case
    std::vector<float> freqs;
    bool trainable = false;
};

// Builds the ladder. For m >= 2, sigma = f_max^(m/(m-1)) so that
// f_0 = 1 and f_{m-1} = f_max; m = 1 degenerates to the single frequency
// f_max (f_i = sigma^(i/m) would pin f_0 = 1 and make f_max unreachable).
// f_max < 1 is rejected (the ladder ordering would invert).
FrequencySet frequency_ladder(int m, float f_max);

enum class EncodingKind { FourierFeatures, Meshgrid, Noise };
EncodingKind encoding_kind_from_string(const std::string& s);
std::string to_string(EncodingKind k);

// A network input z together with provenance. For images the tensor is
// C x H x W; for video C x T x H x W.
struct EncodingTensor {
    Tensor tensor;
    EncodingKind kind = EncodingKind::FourierFeatures;
    std::vector<int> channels_per_axis;  // e.g. {2m, 2m} for 2D FF
    uint64_t seed = 0;                   // noise inputs only
};

// 4m channels, axis-major (all vertical-axis channels first, then
// horizontal), frequency-minor, cos before sin:
//   [cos(f_0 y), sin(f_0 y), ..., cos(f_0 x), sin(f_0 x), ...]
// with y = row/(H-1), x = col/(W-1) (0 when the axis has a single sample).
EncodingTensor fourier_grid_2d(int H, int W, const FrequencySet& fs);

// Spatial channels as in 2D plus 2*m_temporal channels of the temporal
// coordinate t/(T-1), normalized 0 (first frame) to 1 (last frame). Axis
// order: vertical, horizontal, temporal. T must be >= 2 (use the 2D path
// for single images). Channel count: 4*m_spatial + 2*m_temporal.
EncodingTensor fourier_grid_3d(int T, int H, int W, const FrequencySet& spatial,
                               const FrequencySet& temporal);

// Two channels of raw normalized coordinates in [0, 1]: channel 0 vertical,
// channel 1 horizontal.
EncodingTensor meshgrid_2d(int H, int W);

// C channels of i.i.d. uniform noise on [0, 0.1), reproducible from seed.
EncodingTensor noise_input(int C, int H, int W, uint64_t seed);

// Differentiable variants used by the learned-frequency mode: the encoding
// is rebuilt inside the graph from a frequency parameter (one shared ladder
// applied to every axis), so gradients flow into the frequencies through
// the sin/cos evaluation.
Tensor fourier_grid_2d_learned(int H, int W, const Tensor& freqs);
Tensor fourier_grid_3d_frame_learned(int t, int T, int H, int W, const Tensor& spatial_freqs,
                                     const FrequencySet& temporal);

// Extracts frame t of a C x T x H x W encoding as a fresh C x H x W leaf.
Tensor frame_slice(const EncodingTensor& enc, int t);

// Projection keeping learned frequencies positive (clamp at min_value).
void project_frequencies_positive(Tensor& freqs, float min_value = 1e-3f);

}  // namespace pip
