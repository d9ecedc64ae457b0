#include "pip/encodings.hpp"

#include <cmath>

namespace pip {

EncodingKind encoding_kind_from_string(const std::string& s) {
    if (s == "ff") return EncodingKind::FourierFeatures;
    if (s == "meshgrid") return EncodingKind::Meshgrid;
    if (s == "noise") return EncodingKind::Noise;
    throw ConfigError("unknown encoding kind: " + s);
}

std::string to_string(EncodingKind k) {
    switch (k) {
        case EncodingKind::FourierFeatures: return "ff";
        case EncodingKind::Meshgrid: return "meshgrid";
        case EncodingKind::Noise: return "noise";
    }
    return "?";
}

FrequencySet frequency_ladder(int m, float f_max) {
    check<ConfigError>(m >= 1, "frequency ladder needs m >= 1, got ", m);
    check<ConfigError>(f_max >= 1.0f, "frequency ladder needs f_max >= 1 (got ", f_max,
                       "); smaller caps would invert the ladder ordering");
    FrequencySet fs;
    fs.m = m;
    fs.f_max = f_max;
    fs.freqs.resize(static_cast<size_t>(m));
    if (m == 1) {
        fs.sigma = 0.0f;
        fs.freqs[0] = f_max;
        return fs;
    }
    const double sigma = std::pow(static_cast<double>(f_max),
                                  static_cast<double>(m) / static_cast<double>(m - 1));
    fs.sigma = static_cast<float>(sigma);
    for (int i = 0; i < m; ++i)
        fs.freqs[static_cast<size_t>(i)] = static_cast<float>(
            std::pow(sigma, static_cast<double>(i) / static_cast<double>(m)));
    return fs;
}

namespace {

inline float axis_coord(int i, int n) {
    return n > 1 ? static_cast<float>(i) / static_cast<float>(n - 1) : 0.0f;
}

// Writes cos/sin channel pairs of freqs * coord for one axis into `out`
// starting at channel `c0`. `coord_of(p)` maps a pixel index to the axis
// coordinate.
template <typename CoordFn>
void write_axis_channels(std::vector<float>& out, int64_t pixels, int c0,
                         const std::vector<float>& freqs, CoordFn coord_of) {
    for (size_t i = 0; i < freqs.size(); ++i) {
        const float f = freqs[i];
        float* cosc = out.data() + (static_cast<int64_t>(c0) + 2 * i) * pixels;
        float* sinc = cosc + pixels;
        for (int64_t p = 0; p < pixels; ++p) {
            const float v = f * coord_of(p);
            cosc[p] = std::cos(v);
            sinc[p] = std::sin(v);
        }
    }
}

}  // namespace

EncodingTensor fourier_grid_2d(int H, int W, const FrequencySet& fs) {
    check(H >= 1 && W >= 1, "fourier_grid_2d needs H, W >= 1");
    const int m = fs.m;
    const int C = 4 * m;
    const int64_t P = static_cast<int64_t>(H) * W;
    std::vector<float> out(static_cast<size_t>(C) * P);
    write_axis_channels(out, P, 0, fs.freqs, [H, W](int64_t p) {
        return axis_coord(static_cast<int>(p / W), H);
    });
    write_axis_channels(out, P, 2 * m, fs.freqs, [W](int64_t p) {
        return axis_coord(static_cast<int>(p % W), W);
    });
    EncodingTensor enc;
    enc.tensor = Tensor::from_data({C, H, W}, std::move(out));
    enc.kind = EncodingKind::FourierFeatures;
    enc.channels_per_axis = {2 * m, 2 * m};
    return enc;
}

EncodingTensor fourier_grid_3d(int T, int H, int W, const FrequencySet& spatial,
                               const FrequencySet& temporal) {
    check(T >= 2, "fourier_grid_3d needs T >= 2 frames (use the 2D grid for single images)");
    const int ms = spatial.m, mt = temporal.m;
    const int C = 4 * ms + 2 * mt;
    const int64_t P = static_cast<int64_t>(H) * W;
    std::vector<float> out(static_cast<size_t>(C) * T * P);
    // Spatial channels are identical for every frame; temporal channels are
    // constant within a frame.
    EncodingTensor plane = fourier_grid_2d(H, W, spatial);
    for (int c = 0; c < 4 * ms; ++c) {
        const float* src = plane.tensor.data().data() + static_cast<int64_t>(c) * P;
        for (int t = 0; t < T; ++t)
            std::copy_n(src, P, out.data() + (static_cast<int64_t>(c) * T + t) * P);
    }
    for (int i = 0; i < mt; ++i) {
        const float f = temporal.freqs[static_cast<size_t>(i)];
        for (int t = 0; t < T; ++t) {
            const float v = f * axis_coord(t, T);
            const float cv = std::cos(v), sv = std::sin(v);
            float* cosf = out.data() + ((static_cast<int64_t>(4 * ms + 2 * i)) * T + t) * P;
            float* sinf = out.data() + ((static_cast<int64_t>(4 * ms + 2 * i + 1)) * T + t) * P;
            for (int64_t p = 0; p < P; ++p) {
                cosf[p] = cv;
                sinf[p] = sv;
            }
        }
    }
    EncodingTensor enc;
    enc.tensor = Tensor::from_data({C, T, H, W}, std::move(out));
    enc.kind = EncodingKind::FourierFeatures;
    enc.channels_per_axis = {2 * ms, 2 * ms, 2 * mt};
    return enc;
}

EncodingTensor meshgrid_2d(int H, int W) {
    check(H >= 1 && W >= 1, "meshgrid_2d needs H, W >= 1");
    const int64_t P = static_cast<int64_t>(H) * W;
    std::vector<float> out(static_cast<size_t>(2) * P);
    for (int h = 0; h < H; ++h) {
        const float y = axis_coord(h, H);
        for (int w = 0; w < W; ++w) {
            out[static_cast<size_t>(h) * W + w] = y;
            out[static_cast<size_t>(P + h * W + w)] = axis_coord(w, W);
        }
    }
    EncodingTensor enc;
    enc.tensor = Tensor::from_data({2, H, W}, std::move(out));
    enc.kind = EncodingKind::Meshgrid;
    enc.channels_per_axis = {1, 1};
    return enc;
}

EncodingTensor noise_input(int C, int H, int W, uint64_t seed) {
    check(C >= 1 && H >= 1 && W >= 1, "noise_input needs positive dims");
    Rng rng(seed);
    std::vector<float> out(static_cast<size_t>(C) * H * W);
    for (float& v : out) v = 0.1f * rng.uniform();
    EncodingTensor enc;
    enc.tensor = Tensor::from_data({C, H, W}, std::move(out));
    enc.kind = EncodingKind::Noise;
    enc.channels_per_axis = {};
    enc.seed = seed;
    return enc;
}

namespace {

// Shared forward/backward for learned-frequency grids. Channel layout
// matches the fixed-frequency builders exactly. The temporal block (video
// frames) uses fixed frequencies; only the spatial ladder is trained.
Tensor learned_grid(int H, int W, const Tensor& freqs, int extra_channels,
                    const std::vector<float>& extra_values) {
    check(freqs.ndim() == 1, "learned frequencies must be a flat vector");
    const int m = static_cast<int>(freqs.numel());
    const int C = 4 * m + extra_channels;
    const int64_t P = static_cast<int64_t>(H) * W;
    std::vector<float> out(static_cast<size_t>(C) * P);
    const auto& f = freqs.data();
    write_axis_channels(out, P, 0, f, [H, W](int64_t p) {
        return axis_coord(static_cast<int>(p / W), H);
    });
    write_axis_channels(out, P, 2 * m, f, [W](int64_t p) {
        return axis_coord(static_cast<int>(p % W), W);
    });
    for (int e = 0; e < extra_channels; ++e) {
        float* ch = out.data() + (static_cast<int64_t>(4 * m) + e) * P;
        const float v = extra_values[static_cast<size_t>(e)];
        for (int64_t p = 0; p < P; ++p) ch[p] = v;
    }
    return Tensor::make_op(
        {C, H, W}, std::move(out), {freqs}, [m, H, W, P](detail::Node& n) {
            auto& pf = *n.parents[0];
            auto& gf = pf.grad_buffer();
            // d cos(f v)/df = -v sin(f v); d sin(f v)/df = v cos(f v).
            for (int i = 0; i < m; ++i) {
                float acc = 0.0f;
                const float* gcy = n.grad.data() + (static_cast<int64_t>(2 * i)) * P;
                const float* gsy = gcy + P;
                const float* cy = n.data.data() + (static_cast<int64_t>(2 * i)) * P;
                const float* sy = cy + P;
                for (int64_t p = 0; p < P; ++p) {
                    const float v = axis_coord(static_cast<int>(p / W), H);
                    acc += v * (gsy[p] * cy[p] - gcy[p] * sy[p]);
                }
                const float* gcx = n.grad.data() + (static_cast<int64_t>(2 * m + 2 * i)) * P;
                const float* gsx = gcx + P;
                const float* cx = n.data.data() + (static_cast<int64_t>(2 * m + 2 * i)) * P;
                const float* sx = cx + P;
                for (int64_t p = 0; p < P; ++p) {
                    const float v = axis_coord(static_cast<int>(p % W), W);
                    acc += v * (gsx[p] * cx[p] - gcx[p] * sx[p]);
                }
                gf[static_cast<size_t>(i)] += acc;
            }
        });
}

}  // namespace

Tensor fourier_grid_2d_learned(int H, int W, const Tensor& freqs) {
    return learned_grid(H, W, freqs, 0, {});
}

Tensor fourier_grid_3d_frame_learned(int t, int T, int H, int W, const Tensor& spatial_freqs,
                                     const FrequencySet& temporal) {
    check(T >= 2, "video encoding needs T >= 2");
    std::vector<float> extra;
    for (int i = 0; i < temporal.m; ++i) {
        const float v = temporal.freqs[static_cast<size_t>(i)] * axis_coord(t, T);
        extra.push_back(std::cos(v));
        extra.push_back(std::sin(v));
    }
    return learned_grid(H, W, spatial_freqs, 2 * temporal.m, extra);
}

Tensor frame_slice(const EncodingTensor& enc, int t) {
    const Shape& s = enc.tensor.shape();
    check(s.size() == 4, "frame_slice expects a CxTxHxW encoding");
    const int C = s[0], T = s[1], H = s[2], W = s[3];
    check(t >= 0 && t < T, "frame index out of range");
    const int64_t P = static_cast<int64_t>(H) * W;
    std::vector<float> out(static_cast<size_t>(C) * P);
    for (int c = 0; c < C; ++c)
        std::copy_n(enc.tensor.data().data() + (static_cast<int64_t>(c) * T + t) * P, P,
                    out.data() + static_cast<int64_t>(c) * P);
    return Tensor::from_data({C, H, W}, std::move(out));
}

void project_frequencies_positive(Tensor& freqs, float min_value) {
    for (float& f : freqs.data())
        if (f < min_value) f = min_value;
}

}  // namespace pip
