#pragma once

#include <string>
#include <vector>

#include "pip/tensor.hpp"

namespace pip {

// 8-bit RGB PNG in, 3xHxW float tensor in [0,1] out. Grayscale, palette,
// 16-bit and alpha variants are coerced to 8-bit RGB; `warnings` (when
// given) collects one line per coercion. save(load(x)) is bit-identical for
// 8-bit RGB inputs.
Tensor load_png(const std::string& path, std::vector<std::string>* warnings = nullptr);
void save_png(const Tensor& image, const std::string& path);

// An ordered list of equal-sized frames. The frame rate is informational.
struct FrameSequence {
    std::vector<Tensor> frames;
    double fps = 0.0;
};

// Loads every *.png in `dir` in lexicographic order; frames must agree in
// size (the offending file is named otherwise). Saving writes zero-padded
// numeric names (frame_0000.png, ...).
FrameSequence load_frames(const std::string& dir, std::vector<std::string>* warnings = nullptr);
void save_frames(const FrameSequence& seq, const std::string& dir);

}  // namespace pip
