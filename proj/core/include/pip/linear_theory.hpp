#pragma once

#include <complex>
#include <optional>
#include <vector>

#include "pip/common.hpp"

namespace pip::linear_theory {

// The linear 1D study runs in double precision: it verifies identities to
// 1e-6..1e-9, beyond what float32 can certify.

using Complex = std::complex<double>;

// Unitary-convention DFT pair: dft(idft(x)) == x to machine precision.
struct Spectrum {
    std::vector<Complex> coeffs;
    bool conjugate_symmetric = false;  // set when built from a real signal
};

Spectrum dft(const std::vector<double>& x);
std::vector<double> idft_real(const Spectrum& s);

// Circular convolution y[k] = sum_j h[j] * n[(k - j) mod N]; h may be
// shorter than n (zero-padded support-r kernel).
std::vector<double> circular_conv(const std::vector<double>& h, const std::vector<double>& n);

// Gradient descent on || conv(h, n) - y ||^2 over kernels of support r.
// lr empty -> step chosen from a power-iteration estimate of the Gram
// spectral norm; lr = 0 is honored literally (no movement).
struct ConvFit {
    std::vector<double> kernel;
    double final_loss = 0.0;
    int steps_run = 0;
};
ConvFit fit_conv_model(const std::vector<double>& n, const std::vector<double>& y, int r,
                       int steps, std::optional<double> lr = std::nullopt);

// Gradient descent on the element-wise Fourier parameterization: per-bin
// complex multipliers c (conjugate symmetry enforced) scaling the input
// spectrum, i.e. the model spectrum is sqrt(N) * c .* dft(n) -- the
// cos/sin feature expansion weighted by the input's spectrum, with each bin
// treated independently.
struct ElementwiseFit {
    std::vector<Complex> kernel_spectrum;  // c, full length N, conj-symmetric
    std::vector<Complex> coeffs;           // c .* dft(n), the effective per-bin coefficients
    double final_loss = 0.0;
    int steps_run = 0;
};
ElementwiseFit fit_elementwise(const std::vector<double>& n, const std::vector<double>& y,
                               int steps, std::optional<double> lr = std::nullopt);

// Exact least-squares minimum over support-r kernels via the normal
// equations on the circulant of n; the independent ground truth both
// gradient-descent fitters are compared against.
double ls_oracle(const std::vector<double>& n, const std::vector<double>& y, int r);

// Largest eigenvalue of the support-restricted Gram matrix (power iteration).
double gram_spectral_norm(const std::vector<double>& n, int r, int iters = 80);

// One row of the equivalence table: full-support conv fit vs element-wise
// fit vs oracle on a random (n, y) pair.
struct Prop1Trial {
    int n_size = 0;
    int support = 0;
    int trial = 0;
    double loss_conv = 0.0;
    double loss_elem = 0.0;
    double loss_oracle = 0.0;
    double gap() const { return std::abs(loss_conv - loss_elem); }
};

enum class InputLaw { Gaussian, Uniform };

// Runs `trials` random pairs per size with r = N. Inputs are redrawn until
// the spectrum is well away from zero (min |n_l| >= max(1e-3, max|n_l|/16))
// so gradient descent can reach the oracle within the step budget;
// genuinely degenerate spectra are exercised by a dedicated test instead.
std::vector<Prop1Trial> prop1_equivalence_suite(const std::vector<int>& sizes, int trials,
                                                uint64_t seed, int steps = 20000,
                                                InputLaw law = InputLaw::Gaussian);

}  // namespace pip::linear_theory
