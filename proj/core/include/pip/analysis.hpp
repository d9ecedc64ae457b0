#pragma once

#include <array>
#include <complex>
#include <vector>

#include "pip/tensor.hpp"

namespace pip {

// ---- quality metrics -----------------------------------------------------

double mse(const std::vector<float>& a, const std::vector<float>& b);

// PSNR for [0,1]-ranged images: 10*log10(1/mse), capped at 100 dB when the
// mse drops below 1e-10.
double psnr_from_mse(double m);
double psnr(const std::vector<float>& a, const std::vector<float>& b);
double psnr(const Tensor& a, const Tensor& b);

// SSIM with sliding 8x8 uniform windows, C1=(0.01)^2, C2=(0.03)^2, averaged
// over channels. The 3D variant slides 8x8x3 windows over (H, W, T) of a
// frame stack; it is a documented windowed approximation, not a reference
// implementation of any published 3D-SSIM.
double ssim(const Tensor& a, const Tensor& b);
double ssim3d_windowed(const std::vector<Tensor>& a, const std::vector<Tensor>& b);

// Ordinary-least-squares coefficient of determination R^2 of ys against xs.
double psnr_correlation(const std::vector<double>& xs, const std::vector<double>& ys);

// ---- FFT and the spectral-bias probe --------------------------------------

// In-place radix-2 FFT (power-of-two lengths only). `inverse` applies the
// conjugate transform and the 1/N factor.
void fft_radix2(std::vector<std::complex<double>>& x, bool inverse);

// Synthetic probe image: three vertical sinusoids (frequencies in
// cycles/image, amplitudes `amps`) summed and affinely renormalized into
// [0,1]. One channel, 1 x H x W.
Tensor synth_sinusoid_image(int H, int W, std::array<double, 3> freqs = {4.0, 8.0, 16.0},
                            std::array<double, 3> amps = {1.0, 1.0, 1.0});

// One-sided FFT amplitude per column frequency bin, magnitudes averaged
// across columns. H must be a power of two.
std::vector<double> column_spectrum(const Tensor& image);

// |amplitude(output) - amplitude(gt)| at each probe bin (cycles/image).
std::vector<double> amplitude_error(const Tensor& output, const Tensor& gt,
                                    const std::vector<int>& probe_freqs);

// Rows are sampled iterations, columns are probe frequencies.
struct ProbeTable {
    std::vector<int> iterations;
    std::vector<int> probe_freqs;
    std::vector<std::vector<double>> errors;
};

// First sampled iteration at which each frequency's error falls below
// threshold_fraction * its initial error; -1 when never reached.
std::vector<int> convergence_order(const ProbeTable& table, double threshold_fraction);

}  // namespace pip
