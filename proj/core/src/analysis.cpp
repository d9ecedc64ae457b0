#include "pip/analysis.hpp"

#include <algorithm>
#include <cmath>

namespace pip {

double mse(const std::vector<float>& a, const std::vector<float>& b) {
    check(a.size() == b.size(), "mse: size mismatch ", a.size(), " vs ", b.size());
    double acc = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        const double d = static_cast<double>(a[i]) - b[i];
        acc += d * d;
    }
    return acc / static_cast<double>(a.size());
}

double psnr_from_mse(double m) {
    if (m < 1e-10) return 100.0;
    return 10.0 * std::log10(1.0 / m);
}

double psnr(const std::vector<float>& a, const std::vector<float>& b) {
    return psnr_from_mse(mse(a, b));
}

double psnr(const Tensor& a, const Tensor& b) {
    check(a.shape() == b.shape(), "psnr: shape mismatch ", shape_str(a.shape()), " vs ",
          shape_str(b.shape()));
    return psnr(a.data(), b.data());
}

namespace {

constexpr int kSsimWin = 8;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

// SSIM of one channel plane pair with sliding win x win windows.
double ssim_plane(const float* a, const float* b, int H, int W) {
    check(H >= kSsimWin && W >= kSsimWin, "ssim needs images of at least ", kSsimWin, "x",
          kSsimWin);
    double total = 0.0;
    int64_t count = 0;
    const double inv_n = 1.0 / (kSsimWin * kSsimWin);
    for (int y = 0; y + kSsimWin <= H; ++y)
        for (int x = 0; x + kSsimWin <= W; ++x) {
            double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
            for (int i = 0; i < kSsimWin; ++i)
                for (int j = 0; j < kSsimWin; ++j) {
                    const double va = a[(y + i) * W + x + j];
                    const double vb = b[(y + i) * W + x + j];
                    sa += va;
                    sb += vb;
                    saa += va * va;
                    sbb += vb * vb;
                    sab += va * vb;
                }
            const double ma = sa * inv_n, mb = sb * inv_n;
            const double va = saa * inv_n - ma * ma;
            const double vb = sbb * inv_n - mb * mb;
            const double cov = sab * inv_n - ma * mb;
            total += (2 * ma * mb + kC1) * (2 * cov + kC2) /
                     ((ma * ma + mb * mb + kC1) * (va + vb + kC2));
            ++count;
        }
    return total / static_cast<double>(count);
}

}  // namespace

double ssim(const Tensor& a, const Tensor& b) {
    check(a.shape() == b.shape(), "ssim: shape mismatch ", shape_str(a.shape()), " vs ",
          shape_str(b.shape()));
    check(a.ndim() == 3, "ssim expects CxHxW");
    const int C = a.dim(0), H = a.dim(1), W = a.dim(2);
    double acc = 0.0;
    for (int c = 0; c < C; ++c)
        acc += ssim_plane(a.data().data() + static_cast<int64_t>(c) * H * W,
                          b.data().data() + static_cast<int64_t>(c) * H * W, H, W);
    return acc / C;
}

double ssim3d_windowed(const std::vector<Tensor>& a, const std::vector<Tensor>& b) {
    check(a.size() == b.size() && !a.empty(), "ssim3d: frame count mismatch or empty");
    const int T = static_cast<int>(a.size());
    constexpr int kTWin = 3;
    check(T >= kTWin, "ssim3d needs at least ", kTWin, " frames");
    const Shape& s = a[0].shape();
    const int C = s[0], H = s[1], W = s[2];
    for (const auto& f : a) check(f.shape() == s, "ssim3d: ragged frames");
    for (const auto& f : b) check(f.shape() == s, "ssim3d: ragged frames");

    const double inv_n = 1.0 / (kSsimWin * kSsimWin * kTWin);
    double total = 0.0;
    int64_t count = 0;
    for (int c = 0; c < C; ++c)
        for (int t0 = 0; t0 + kTWin <= T; ++t0)
            for (int y = 0; y + kSsimWin <= H; ++y)
                for (int x = 0; x + kSsimWin <= W; ++x) {
                    double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
                    for (int dt = 0; dt < kTWin; ++dt) {
                        const float* pa = a[static_cast<size_t>(t0 + dt)].data().data() +
                                          static_cast<int64_t>(c) * H * W;
                        const float* pb = b[static_cast<size_t>(t0 + dt)].data().data() +
                                          static_cast<int64_t>(c) * H * W;
                        for (int i = 0; i < kSsimWin; ++i)
                            for (int j = 0; j < kSsimWin; ++j) {
                                const double va = pa[(y + i) * W + x + j];
                                const double vb = pb[(y + i) * W + x + j];
                                sa += va;
                                sb += vb;
                                saa += va * va;
                                sbb += vb * vb;
                                sab += va * vb;
                            }
                    }
                    const double ma = sa * inv_n, mb = sb * inv_n;
                    const double va = saa * inv_n - ma * ma;
                    const double vb = sbb * inv_n - mb * mb;
                    const double cov = sab * inv_n - ma * mb;
                    total += (2 * ma * mb + kC1) * (2 * cov + kC2) /
                             ((ma * ma + mb * mb + kC1) * (va + vb + kC2));
                    ++count;
                }
    return total / static_cast<double>(count);
}

double psnr_correlation(const std::vector<double>& xs, const std::vector<double>& ys) {
    check(xs.size() == ys.size() && xs.size() >= 2, "R^2 needs >= 2 paired samples");
    const double n = static_cast<double>(xs.size());
    double mx = 0, my = 0;
    for (size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0, sxy = 0, syy = 0;
    for (size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    if (syy == 0.0) return 1.0;  // constant ys are fit exactly by the constant line
    check(sxx > 0.0, "R^2 undefined for constant xs");
    const double ss_res = syy - sxy * sxy / sxx;
    return 1.0 - ss_res / syy;
}

void fft_radix2(std::vector<std::complex<double>>& x, bool inverse) {
    const size_t n = x.size();
    check(is_power_of_two(static_cast<int>(n)), "fft length must be a power of two, got ", n);
    // Bit-reversal permutation.
    for (size_t i = 1, j = 0; i < n; ++i) {
        size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(x[i], x[j]);
    }
    for (size_t len = 2; len <= n; len <<= 1) {
        const double ang = (inverse ? 2.0 : -2.0) * M_PI / static_cast<double>(len);
        const std::complex<double> wl(std::cos(ang), std::sin(ang));
        for (size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (size_t k = 0; k < len / 2; ++k) {
                const std::complex<double> u = x[i + k];
                const std::complex<double> v = x[i + k + len / 2] * w;
                x[i + k] = u + v;
                x[i + k + len / 2] = u - v;
                w *= wl;
            }
        }
    }
    if (inverse)
        for (auto& v : x) v /= static_cast<double>(n);
}

Tensor synth_sinusoid_image(int H, int W, std::array<double, 3> freqs, std::array<double, 3> amps) {
    check(H >= 2 && W >= 1, "synth_sinusoid_image needs H >= 2");
    double amp_sum = 0.0;
    for (double a : amps) amp_sum += std::abs(a);
    check(amp_sum > 0.0, "at least one amplitude must be nonzero");
    std::vector<float> out(static_cast<size_t>(H) * W);
    for (int y = 0; y < H; ++y) {
        double v = 0.0;
        for (int k = 0; k < 3; ++k)
            v += amps[static_cast<size_t>(k)] *
                 std::sin(2.0 * M_PI * freqs[static_cast<size_t>(k)] * y / H);
        const float pixel = static_cast<float>((v + amp_sum) / (2.0 * amp_sum));
        for (int x = 0; x < W; ++x) out[static_cast<size_t>(y) * W + x] = pixel;
    }
    return Tensor::from_data({1, H, W}, std::move(out));
}

std::vector<double> column_spectrum(const Tensor& image) {
    check(image.ndim() == 3, "column_spectrum expects CxHxW");
    const int C = image.dim(0), H = image.dim(1), W = image.dim(2);
    check(is_power_of_two(H), "column_spectrum needs power-of-two height, got ", H);
    std::vector<double> amp(static_cast<size_t>(H / 2 + 1), 0.0);
    std::vector<std::complex<double>> col(static_cast<size_t>(H));
    for (int c = 0; c < C; ++c)
        for (int x = 0; x < W; ++x) {
            const float* base = image.data().data() + static_cast<int64_t>(c) * H * W;
            for (int y = 0; y < H; ++y) col[static_cast<size_t>(y)] = base[y * W + x];
            fft_radix2(col, false);
            for (int k = 0; k <= H / 2; ++k) {
                // One-sided amplitude of a real signal.
                const double scale = (k == 0 || k == H / 2) ? 1.0 : 2.0;
                amp[static_cast<size_t>(k)] += scale * std::abs(col[static_cast<size_t>(k)]) / H;
            }
        }
    for (double& v : amp) v /= static_cast<double>(C) * W;
    return amp;
}

std::vector<double> amplitude_error(const Tensor& output, const Tensor& gt,
                                    const std::vector<int>& probe_freqs) {
    check(output.shape() == gt.shape(), "amplitude_error: shape mismatch");
    const auto amp_out = column_spectrum(output);
    const auto amp_gt = column_spectrum(gt);
    std::vector<double> err;
    for (int f : probe_freqs) {
        check(f >= 0 && f < static_cast<int>(amp_out.size()), "probe frequency ", f,
              " out of range for height ", output.dim(1));
        err.push_back(std::abs(amp_out[static_cast<size_t>(f)] - amp_gt[static_cast<size_t>(f)]));
    }
    return err;
}

std::vector<int> convergence_order(const ProbeTable& table, double threshold_fraction) {
    check(!table.errors.empty(), "empty probe table");
    check(table.errors.size() == table.iterations.size(), "probe table row count mismatch");
    const size_t nf = table.probe_freqs.size();
    std::vector<int> crossings(nf, -1);
    for (size_t f = 0; f < nf; ++f) {
        const double limit = threshold_fraction * table.errors.front()[f];
        for (size_t r = 0; r < table.errors.size(); ++r) {
            check(table.errors[r].size() == nf, "ragged probe table row");
            if (table.errors[r][f] <= limit) {
                crossings[f] = table.iterations[r];
                break;
            }
        }
    }
    return crossings;
}

}  // namespace pip
