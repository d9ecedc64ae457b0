#include "pip/network.hpp"

#include <cmath>

namespace pip {

namespace {

Parameter make_conv_weight(Rng& rng, std::vector<Parameter>& reg, const std::string& name,
                           int c_out, int c_in, int k) {
    const float bound = 1.0f / std::sqrt(static_cast<float>(c_in * k * k));
    std::vector<float> w(static_cast<size_t>(c_out) * c_in * k * k);
    for (float& v : w) v = rng.uniform(-bound, bound);
    Parameter p{Tensor::from_data({c_out, c_in, k, k}, std::move(w), true), name};
    reg.push_back(p);
    return p;
}

Parameter make_vector_param(Rng& rng, std::vector<Parameter>& reg, const std::string& name, int n,
                            float lo, float hi) {
    std::vector<float> v(static_cast<size_t>(n));
    for (float& x : v) x = lo == hi ? lo : rng.uniform(lo, hi);
    Parameter p{Tensor::from_data({n}, std::move(v), true), name};
    reg.push_back(p);
    return p;
}

}  // namespace

const HourglassConfig& Model::hourglass_config() const {
    check(kind_ == ModelKind::Hourglass, "model is not an hourglass");
    return hg_;
}

const FlatMlpConfig& Model::flat_config() const {
    check(kind_ == ModelKind::FlatMlp, "model is not a flat MLP");
    return flat_;
}

Model build_hourglass(const HourglassConfig& cfg, uint64_t seed) {
    check<ConfigError>(cfg.in_channels > 0, "in_channels must be positive, got ", cfg.in_channels);
    check<ConfigError>(cfg.out_channels > 0, "out_channels must be positive");
    check<ConfigError>(cfg.levels >= 1, "levels must be >= 1");
    check<ConfigError>(cfg.blocks_per_level >= 1, "blocks_per_level must be >= 1");
    check<ConfigError>(cfg.width >= cfg.skip_channels && cfg.skip_channels >= 0,
                       "need width >= skip_channels >= 0");
    check<ConfigError>(cfg.kernel == 1 || cfg.kernel == 3, "kernel must be 1 or 3");

    Model m;
    m.kind_ = ModelKind::Hourglass;
    m.hg_ = cfg;
    Rng rng(derive_seed(seed, 0xA001));

    auto conv_block = [&](const std::string& prefix, int c_in, int c_out, int k, int stride,
                          bool norm) {
        Model::ConvBlock b;
        const float bb = 1.0f / std::sqrt(static_cast<float>(c_in * k * k));
        b.weight = make_conv_weight(rng, m.params_, prefix + ".weight", c_out, c_in, k);
        b.bias = make_vector_param(rng, m.params_, prefix + ".bias", c_out, -bb, bb);
        b.kernel = k;
        b.stride = stride;
        b.has_norm = norm;
        if (norm) {
            b.norm_scale = make_vector_param(rng, m.params_, prefix + ".norm_scale", c_out, 1.0f, 1.0f);
            b.norm_shift = make_vector_param(rng, m.params_, prefix + ".norm_shift", c_out, 0.0f, 0.0f);
        }
        return b;
    };

    for (int l = 0; l < cfg.levels; ++l) {
        std::vector<Model::ConvBlock> stage;
        for (int b = 0; b < cfg.blocks_per_level; ++b) {
            const int c_in = (l == 0 && b == 0) ? cfg.in_channels : cfg.width;
            stage.push_back(conv_block("enc.l" + std::to_string(l) + ".b" + std::to_string(b),
                                       c_in, cfg.width, cfg.kernel, b == 0 ? 2 : 1, true));
        }
        m.enc_.push_back(std::move(stage));
    }
    if (cfg.skip_channels > 0) {
        for (int l = 0; l + 1 < cfg.levels; ++l)
            m.skips_.push_back(
                conv_block("skip.l" + std::to_string(l), cfg.width, cfg.skip_channels, 1, 1, true));
    }
    for (int l = cfg.levels - 1; l >= 0; --l) {
        std::vector<Model::ConvBlock> stage;
        const bool has_skip = cfg.skip_channels > 0 && l >= 1;
        for (int b = 0; b < cfg.blocks_per_level; ++b) {
            const int c_in = b == 0 ? cfg.width + (has_skip ? cfg.skip_channels : 0) : cfg.width;
            // Only the first decoder block keeps the configured kernel;
            // follow-up blocks are pixelwise refinements.
            const int k = b == 0 ? cfg.kernel : 1;
            stage.push_back(conv_block("dec.l" + std::to_string(l) + ".b" + std::to_string(b),
                                       c_in, cfg.width, k, 1, true));
        }
        m.dec_.push_back(std::move(stage));
    }
    m.head_ = conv_block("head", cfg.width, cfg.out_channels, 1, 1, false);
    m.head_.has_act = false;
    return m;
}

Model build_flat_mlp(const FlatMlpConfig& cfg, uint64_t seed) {
    check<ConfigError>(cfg.in_channels > 0, "in_channels must be positive");
    check<ConfigError>(cfg.out_channels > 0, "out_channels must be positive");
    check<ConfigError>(cfg.depth >= 0, "depth must be >= 0");
    Model m;
    m.kind_ = ModelKind::FlatMlp;
    m.flat_ = cfg;
    Rng rng(derive_seed(seed, 0xA002));

    auto conv_block = [&](const std::string& prefix, int c_in, int c_out) {
        Model::ConvBlock b;
        const float bb = 1.0f / std::sqrt(static_cast<float>(c_in));
        b.weight = make_conv_weight(rng, m.params_, prefix + ".weight", c_out, c_in, 1);
        b.bias = make_vector_param(rng, m.params_, prefix + ".bias", c_out, -bb, bb);
        b.has_norm = false;
        return b;
    };
    std::vector<Model::ConvBlock> blocks;
    for (int d = 0; d < cfg.depth; ++d)
        blocks.push_back(conv_block("blk" + std::to_string(d),
                                    d == 0 ? cfg.in_channels : cfg.width, cfg.width));
    m.enc_.push_back(std::move(blocks));
    m.head_ = conv_block("head", cfg.depth == 0 ? cfg.in_channels : cfg.width, cfg.out_channels);
    m.head_.has_act = false;
    return m;
}

Tensor Model::run_block(const ConvBlock& b, const Tensor& x) const {
    Tensor y = conv2d(x, b.weight.tensor, b.bias.tensor, b.stride);
    const ActivationKind act = kind_ == ModelKind::Hourglass ? hg_.act : flat_.act;
    const float ap = kind_ == ModelKind::Hourglass ? hg_.act_param : flat_.act_param;
    if (b.has_norm && b.has_act)
        return channel_norm_act(y, b.norm_scale.tensor, b.norm_shift.tensor, act, ap);
    if (b.has_norm) y = channel_norm(y, b.norm_scale.tensor, b.norm_shift.tensor);
    if (b.has_act) y = activation(y, act, ap);
    return y;
}

int Model::size_divisor() const {
    return kind_ == ModelKind::Hourglass ? (1 << hg_.levels) : 1;
}

Tensor Model::forward(const Tensor& z) const {
    check(z.ndim() == 3, "forward expects a CxHxW input, got ", shape_str(z.shape()));
    const int H = z.dim(1), W = z.dim(2);
    if (kind_ == ModelKind::FlatMlp) {
        check(z.dim(0) == flat_.in_channels, "forward: input has ", z.dim(0),
              " channels, model expects ", flat_.in_channels);
        Tensor x = z;
        for (const ConvBlock& b : enc_[0]) x = run_block(b, x);
        return sigmoid(conv2d(x, head_.weight.tensor, head_.bias.tensor, 1));
    }

    check(z.dim(0) == hg_.in_channels, "forward: input has ", z.dim(0),
          " channels, model expects ", hg_.in_channels);
    const int div = size_divisor();
    check(H % div == 0 && W % div == 0, "forward: spatial size ", H, "x", W,
          " must be divisible by 2^levels = ", div, "; pad to ", ceil_div(H, div) * div, "x",
          ceil_div(W, div) * div, " and crop the output back");

    std::vector<Tensor> enc_outs;
    Tensor x = z;
    for (const auto& stage : enc_) {
        for (const ConvBlock& b : stage) x = run_block(b, x);
        enc_outs.push_back(x);
    }
    size_t dec_idx = 0;
    for (int l = hg_.levels - 1; l >= 0; --l, ++dec_idx) {
        x = upsample(x, 2, hg_.upsample);
        if (hg_.skip_channels > 0 && l >= 1) {
            Tensor s = run_block(skips_[static_cast<size_t>(l - 1)], enc_outs[static_cast<size_t>(l - 1)]);
            x = concat({x, s}, 0);
        }
        for (const ConvBlock& b : dec_[dec_idx]) x = run_block(b, x);
    }
    return sigmoid(conv2d(x, head_.weight.tensor, head_.bias.tensor, 1));
}

int64_t Model::param_count() const {
    int64_t n = 0;
    for (const Parameter& p : params_) n += p.tensor.numel();
    return n;
}

int Model::conv_layer_count() const {
    int n = 1;  // head
    for (const auto& s : enc_) n += static_cast<int>(s.size());
    for (const auto& s : dec_) n += static_cast<int>(s.size());
    n += static_cast<int>(skips_.size());
    return n;
}

int64_t count_params(const Model& m) { return m.param_count(); }

namespace {

struct CostAccum {
    int64_t flops = 0;
    int64_t macs = 0;
    void conv(int ci, int co, int k, int64_t pix) {
        macs += static_cast<int64_t>(ci) * co * k * k * pix;
        flops += conv_flops(ci, co, k, pix);
    }
    void elementwise(int64_t count, int cost) { flops += count * cost; }
};

CostAccum model_cost(const Model& m, int H, int W) {
    CostAccum acc;
    const ModelKind kind = m.kind();
    if (kind == ModelKind::FlatMlp) {
        const FlatMlpConfig& c = m.flat_config();
        const int64_t P = static_cast<int64_t>(H) * W;
        int ci = c.in_channels;
        for (int d = 0; d < c.depth; ++d) {
            acc.conv(ci, c.width, 1, P);
            acc.elementwise(static_cast<int64_t>(c.width) * P, 2);
            ci = c.width;
        }
        acc.conv(ci, c.out_channels, 1, P);
        acc.elementwise(static_cast<int64_t>(c.out_channels) * P, 4);
        return acc;
    }
    const HourglassConfig& c = m.hourglass_config();
    auto block_cost = [&](int ci, int co, int k, int64_t pix, bool norm) {
        acc.conv(ci, co, k, pix);
        if (norm) acc.elementwise(static_cast<int64_t>(co) * pix, 8);
        acc.elementwise(static_cast<int64_t>(co) * pix, 2);
    };
    // Encoder: first block of each stage subsamples.
    std::vector<std::pair<int64_t, int64_t>> stage_res;  // (h, w) of stage output
    int64_t h = H, w = W;
    for (int l = 0; l < c.levels; ++l) {
        h = ceil_div(static_cast<int>(h), 2);
        w = ceil_div(static_cast<int>(w), 2);
        for (int b = 0; b < c.blocks_per_level; ++b) {
            const int ci = (l == 0 && b == 0) ? c.in_channels : c.width;
            block_cost(ci, c.width, c.kernel, h * w, true);
        }
        stage_res.emplace_back(h, w);
    }
    if (c.skip_channels > 0)
        for (int l = 0; l + 1 < c.levels; ++l)
            block_cost(c.width, c.skip_channels, 1,
                       stage_res[static_cast<size_t>(l)].first * stage_res[static_cast<size_t>(l)].second,
                       true);
    for (int l = c.levels - 1; l >= 0; --l) {
        const int64_t ph = l >= 1 ? stage_res[static_cast<size_t>(l - 1)].first : H;
        const int64_t pw = l >= 1 ? stage_res[static_cast<size_t>(l - 1)].second : W;
        const int64_t pix = ph * pw;
        acc.elementwise(static_cast<int64_t>(c.width) * pix,
                        c.upsample == UpsampleMode::Nearest ? 1 : 8);
        const bool has_skip = c.skip_channels > 0 && l >= 1;
        for (int b = 0; b < c.blocks_per_level; ++b) {
            const int ci = b == 0 ? c.width + (has_skip ? c.skip_channels : 0) : c.width;
            block_cost(ci, c.width, b == 0 ? c.kernel : 1, pix, true);
        }
    }
    acc.conv(c.width, c.out_channels, 1, static_cast<int64_t>(H) * W);
    acc.elementwise(static_cast<int64_t>(c.out_channels) * H * W, 4);
    return acc;
}

}  // namespace

int64_t count_flops(const Model& m, int H, int W) { return model_cost(m, H, W).flops; }
int64_t count_macs(const Model& m, int H, int W) { return model_cost(m, H, W).macs; }

}  // namespace pip
