#include "pip/runner.hpp"

#include <json.hpp>

#include <cmath>
#include <ctime>
#include <fstream>
#include <ostream>
#include <sstream>

namespace pip {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string utc_stamp() {
    const std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y%m%d-%H%M%S", &tm);
    return buf;
}

json config_echo(const RunConfig& cfg) {
    // Embed the resolved config verbatim; parsing it back reproduces the run.
    return json(serialize_run_config(cfg));
}

void write_curves_csv(const fs::path& path, const RunResult& r) {
    std::ostringstream os;
    os << "iteration,loss,psnr,psnr_ema\n";
    for (size_t i = 0; i < r.loss_curve.size(); ++i) {
        os << (i + 1) << "," << r.loss_curve[i] << ",";
        if (i < r.psnr_curve.size()) os << r.psnr_curve[i];
        os << ",";
        if (i < r.psnr_ema_curve.size()) os << r.psnr_ema_curve[i];
        os << "\n";
    }
    write_text_file(path, os.str());
}

struct EncodingBinding {
    InputFn make_input;
    std::vector<Parameter> extra_params;
    std::function<void()> post_step;
    int channels = 0;
};

EncodingBinding bind_encoding_2d(const RunConfig& cfg, int H, int W) {
    EncodingBinding b;
    switch (cfg.encoding) {
        case EncodingKind::FourierFeatures: {
            FrequencySet fs = frequency_ladder(cfg.m, cfg.f_max);
            b.channels = 4 * cfg.m;
            if (cfg.trainable_freqs) {
                Parameter freqs{Tensor::from_data({cfg.m}, fs.freqs, true), "encoding.freqs"};
                b.extra_params.push_back(freqs);
                b.make_input = [freqs, H, W]() {
                    return fourier_grid_2d_learned(H, W, freqs.tensor);
                };
                b.post_step = [freqs]() mutable {
                    project_frequencies_positive(freqs.tensor);
                };
            } else {
                Tensor z = fourier_grid_2d(H, W, fs).tensor;
                b.make_input = [z]() { return z; };
            }
            break;
        }
        case EncodingKind::Meshgrid: {
            Tensor z = meshgrid_2d(H, W).tensor;
            b.channels = 2;
            b.make_input = [z]() { return z; };
            break;
        }
        case EncodingKind::Noise: {
            Tensor z = noise_input(cfg.noise_channels, H, W, cfg.encoding_seed).tensor;
            b.channels = cfg.noise_channels;
            b.make_input = [z]() { return z; };
            break;
        }
    }
    return b;
}

Tensor load_mask(const std::string& path) {
    Tensor img = load_png(path);
    const int H = img.dim(1), W = img.dim(2);
    std::vector<float> m(static_cast<size_t>(H) * W);
    for (size_t i = 0; i < m.size(); ++i) m[i] = img.data()[i] > 0.5f ? 1.0f : 0.0f;
    return Tensor::from_data({1, H, W}, std::move(m));
}

int pad_amount(int size, int multiple) { return ceil_div(size, multiple) * multiple - size; }

}  // namespace

fs::path prepare_out_dir(const RunConfig& cfg) {
    fs::path dir = cfg.out_dir.empty()
                       ? fs::path("runs") / (utc_stamp() + "-seed" + std::to_string(cfg.seed))
                       : fs::path(cfg.out_dir);
    fs::create_directories(dir);
    return dir;
}

void write_text_file(const fs::path& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary);
    check(os.good(), "cannot write '", path.string(), "'");
    os << text;
}

Model model_from_config(const RunConfig& cfg) {
    if (cfg.arch == "flat") {
        FlatMlpConfig fc;
        fc.depth = cfg.flat_depth;
        fc.width = cfg.width;
        fc.in_channels = cfg.in_channels;
        fc.out_channels = cfg.out_channels;
        fc.act = cfg.act;
        fc.act_param = cfg.act_param;
        return build_flat_mlp(fc, derive_seed(cfg.seed, 0x3D01));
    }
    HourglassConfig hc;
    hc.levels = cfg.levels;
    hc.width = cfg.width;
    hc.blocks_per_level = cfg.blocks_per_level;
    hc.skip_channels = cfg.skip_channels;
    hc.kernel = cfg.kernel;
    hc.upsample = cfg.upsample;
    hc.act = cfg.act;
    hc.act_param = cfg.act_param;
    hc.in_channels = cfg.in_channels;
    hc.out_channels = cfg.out_channels;
    return build_hourglass(hc, derive_seed(cfg.seed, 0x3D01));
}

RunOutputs run_image_task(RunConfig cfg, std::ostream& log) {
    resolve_run_config(cfg);
    check<ConfigError>(cfg.task == TaskKind::Denoise || cfg.task == TaskKind::Sr ||
                           cfg.task == TaskKind::Inpaint,
                       "run_image_task handles denoise/sr/inpaint, got ", to_string(cfg.task));
    check<ConfigError>(!cfg.input.empty(), "no input image given");
    cfg.out_channels = 3;

    std::vector<std::string> warnings;
    const Tensor input = load_png(cfg.input, &warnings);
    for (const auto& w : warnings) log << "warning: " << w << "\n";

    TaskSpec spec;
    spec.kind = cfg.task;
    spec.noise = cfg.noise;
    spec.noise_sigma = cfg.sigma255 / 255.0f;
    spec.poisson_peak = cfg.poisson_peak;
    spec.sr_factor = cfg.sr_factor;
    spec.down_kernel = cfg.down_kernel;

    Tensor observed, gt;
    bool has_gt = false;
    Tensor mask;
    if (cfg.task == TaskKind::Inpaint) {
        check<ConfigError>(!cfg.mask.empty(), "inpaint needs a mask image");
        mask = load_mask(cfg.mask);
        spec.mask = mask;
    }
    if (cfg.synthesize) {
        gt = input;
        has_gt = true;
        observed = degrade(input, spec, derive_seed(cfg.seed, 0x0D00));
    } else {
        observed = input;
        if (!cfg.gt.empty()) {
            gt = load_png(cfg.gt, &warnings);
            has_gt = true;
        }
    }

    // Working canvas: pad so the hourglass divisor (and for SR the scale
    // factor) divide the trained resolution; outputs are cropped back.
    const bool is_sr = cfg.task == TaskKind::Sr;
    Model model_probe = model_from_config(cfg);  // for the divisor only
    const int divisor = model_probe.size_divisor();
    int target_h, target_w;  // resolution the model paints at
    if (is_sr) {
        target_h = observed.dim(1) * cfg.sr_factor;
        target_w = observed.dim(2) * cfg.sr_factor;
        if (cfg.synthesize) {
            target_h = input.dim(1);
            target_w = input.dim(2);
            check<ConfigError>(target_h % cfg.sr_factor == 0 && target_w % cfg.sr_factor == 0,
                               "SR input dims must be divisible by the factor");
        }
    } else {
        target_h = observed.dim(1);
        target_w = observed.dim(2);
    }
    const int multiple = is_sr ? static_cast<int>(lcm64(divisor, cfg.sr_factor)) : divisor;
    const int ph = pad_amount(target_h, multiple);
    const int pw = pad_amount(target_w, multiple);

    Tensor observed_p = is_sr ? reflect_pad_hw(observed, ph / cfg.sr_factor, pw / cfg.sr_factor)
                              : reflect_pad_hw(observed, ph, pw);
    Tensor gt_p = has_gt ? reflect_pad_hw(gt, ph, pw) : Tensor();
    if (cfg.task == TaskKind::Inpaint) spec.mask = reflect_pad_hw(mask, ph, pw);

    EncodingBinding enc = bind_encoding_2d(cfg, target_h + ph, target_w + pw);
    check<ConfigError>(enc.channels == cfg.in_channels, "encoding produced ", enc.channels,
                       " channels but the model expects ", cfg.in_channels);
    Model model = model_from_config(cfg);

    TrainConfig tc;
    tc.iterations = cfg.iterations;
    tc.lr = cfg.lr;
    tc.ema_decay = cfg.ema_decay;
    tc.input_jitter_std = cfg.input_jitter_std;
    tc.stop_rule = cfg.stop_rule;
    tc.stop = cfg.stop;
    tc.seed = cfg.seed;
    tc.snapshot_stride = cfg.snapshot_stride;

    RunOutputs out;
    out.out_dir = prepare_out_dir(cfg);
    SnapshotFn snapshot = nullptr;
    if (cfg.snapshot_stride > 0) {
        const fs::path dir = out.out_dir;
        const int oh = target_h, ow = target_w;
        snapshot = [dir, oh, ow](int it, const Tensor& raw, const Tensor&) {
            char name[32];
            std::snprintf(name, sizeof name, "snap_%06d.png", it);
            save_png(crop_hw(raw, oh, ow), (dir / name).string());
        };
    }

    log << "training " << to_string(cfg.task) << " for " << cfg.iterations << " iterations at "
        << (target_h + ph) << "x" << (target_w + pw) << "\n";
    out.result = train(model, enc.make_input, enc.extra_params, enc.post_step, observed_p, spec,
                       tc, has_gt ? &gt_p : nullptr, snapshot);
    out.result.pad_h = ph;
    out.result.pad_w = pw;

    const Tensor final_c = crop_hw(out.result.final_output, target_h, target_w);
    const Tensor ema_c = crop_hw(out.result.ema_output, target_h, target_w);

    ImageMetrics& m = out.metrics;
    if (has_gt) {
        m.final_psnr = psnr(final_c, gt);
        m.final_psnr_ema = psnr(ema_c, gt);
        if (!out.result.psnr_curve.empty()) {
            size_t best = 0;
            for (size_t i = 1; i < out.result.psnr_curve.size(); ++i)
                if (out.result.psnr_curve[i] > out.result.psnr_curve[best]) best = i;
            m.best_psnr = out.result.psnr_curve[best];
            m.best_psnr_iteration = static_cast<int>(best) + 1;
        }
        if (!is_sr && observed.shape() == gt.shape()) m.noisy_psnr = psnr(observed, gt);
        if (is_sr) {
            Tensor base = crop_hw(upsample(observed_p, cfg.sr_factor, UpsampleMode::Bilinear),
                                  target_h, target_w);
            m.baseline_psnr = psnr(base, gt);
        }
        if (target_h >= 8 && target_w >= 8) m.ssim_ema = ssim(ema_c, gt);
    }

    json j;
    j["task"] = to_string(cfg.task);
    j["arch"] = cfg.arch;
    j["encoding"] = to_string(cfg.encoding);
    j["seed"] = cfg.seed;
    j["height"] = target_h;
    j["width"] = target_w;
    j["pad_h"] = ph;
    j["pad_w"] = pw;
    j["param_count"] = model.param_count();
    j["iterations_requested"] = cfg.iterations;
    j["executed_iterations"] = out.result.executed_iterations;
    j["stop_iteration"] = out.result.stop_iteration;
    j["stop_rule"] = to_string(cfg.stop_rule);
    j["final_loss"] = out.result.loss_curve.empty() ? -1.0 : out.result.loss_curve.back();
    if (has_gt) {
        j["final_psnr"] = m.final_psnr;
        j["final_psnr_ema"] = m.final_psnr_ema;
        j["best_psnr"] = m.best_psnr;
        j["best_psnr_iteration"] = m.best_psnr_iteration;
        if (m.noisy_psnr >= 0) j["noisy_psnr"] = m.noisy_psnr;
        if (m.baseline_psnr >= 0) j["baseline_psnr"] = m.baseline_psnr;
        if (m.ssim_ema >= 0) j["ssim_ema"] = m.ssim_ema;
    }
    j["config"] = config_echo(cfg);
    out.metrics_json = j.dump(2) + "\n";

    write_text_file(out.out_dir / "config.resolved", serialize_run_config(cfg));
    write_text_file(out.out_dir / "metrics.json", out.metrics_json);
    write_curves_csv(out.out_dir / "curves.csv", out.result);
    save_png(final_c, (out.out_dir / "final.png").string());
    save_png(ema_c, (out.out_dir / "ema.png").string());
    save_png(observed, (out.out_dir / "observed.png").string());
    log << "run artifacts in " << out.out_dir.string() << " (wall "
        << out.result.wall_seconds << " s)\n";
    return out;
}

RunOutputs run_video_task(RunConfig cfg, std::ostream& log) {
    cfg.task = TaskKind::VideoDenoise;
    resolve_run_config(cfg);
    check<ConfigError>(!cfg.frames.empty(), "video task needs a frames directory");
    check<ConfigError>(cfg.encoding == EncodingKind::FourierFeatures,
                       "video runs use the ff encoding");
    cfg.out_channels = 3;

    std::vector<std::string> warnings;
    FrameSequence seq = load_frames(cfg.frames, &warnings);
    for (const auto& w : warnings) log << "warning: " << w << "\n";
    const int T = static_cast<int>(seq.frames.size());
    check<ConfigError>(T >= 2, "video task needs at least two frames");

    TaskSpec spec;
    spec.kind = TaskKind::VideoDenoise;
    spec.noise = cfg.noise;
    spec.noise_sigma = cfg.sigma255 / 255.0f;
    spec.poisson_peak = cfg.poisson_peak;

    std::vector<Tensor> observed, gt;
    bool has_gt = false;
    if (cfg.synthesize) {
        has_gt = true;
        for (int f = 0; f < T; ++f) {
            gt.push_back(seq.frames[static_cast<size_t>(f)]);
            observed.push_back(degrade(seq.frames[static_cast<size_t>(f)], spec,
                                       derive_seed(cfg.seed, 0xF000 + static_cast<uint64_t>(f))));
        }
    } else {
        observed = seq.frames;
        if (!cfg.gt_frames.empty()) {
            FrameSequence gseq = load_frames(cfg.gt_frames);
            check<ConfigError>(gseq.frames.size() == seq.frames.size(),
                               "gt frame count does not match input frames");
            gt = gseq.frames;
            has_gt = true;
        }
    }

    const int H = observed[0].dim(1), W = observed[0].dim(2);
    Model probe = model_from_config(cfg);
    const int div = probe.size_divisor();
    const int ph = pad_amount(H, div), pw = pad_amount(W, div);
    std::vector<Tensor> observed_p, gt_p;
    for (int f = 0; f < T; ++f) {
        observed_p.push_back(reflect_pad_hw(observed[static_cast<size_t>(f)], ph, pw));
        if (has_gt) gt_p.push_back(reflect_pad_hw(gt[static_cast<size_t>(f)], ph, pw));
    }

    const FrequencySet fs_sp = frequency_ladder(cfg.m, cfg.f_max);
    const FrequencySet fs_t = frequency_ladder(cfg.m_temporal, cfg.f_max_temporal);
    FrameInputFn make_input;
    std::vector<Parameter> extra;
    std::function<void()> post_step;
    if (cfg.trainable_freqs) {
        Parameter freqs{Tensor::from_data({cfg.m}, fs_sp.freqs, true), "encoding.freqs"};
        extra.push_back(freqs);
        post_step = [freqs]() mutable { project_frequencies_positive(freqs.tensor); };
        make_input = [freqs, T, H = H + ph, W = W + pw, fs_t](int f) {
            return fourier_grid_3d_frame_learned(f, T, H, W, freqs.tensor, fs_t);
        };
    } else {
        EncodingTensor enc3d = fourier_grid_3d(T, H + ph, W + pw, fs_sp, fs_t);
        auto frames = std::make_shared<std::vector<Tensor>>();
        for (int f = 0; f < T; ++f) frames->push_back(frame_slice(enc3d, f));
        make_input = [frames](int f) { return (*frames)[static_cast<size_t>(f)]; };
    }

    Model model = model_from_config(cfg);
    TrainConfig tc;
    tc.iterations = cfg.iterations;
    tc.lr = cfg.lr;
    tc.ema_decay = cfg.ema_decay;
    tc.stop_rule = cfg.stop_rule;
    tc.stop = cfg.stop;
    tc.seed = cfg.seed;

    RunOutputs out;
    out.out_dir = prepare_out_dir(cfg);
    log << "training video_denoise on " << T << " frames for " << cfg.iterations
        << " iterations\n";
    out.result = train_video(model, make_input, extra, post_step, observed_p, spec, tc,
                             has_gt ? &gt_p : nullptr);
    out.result.pad_h = ph;
    out.result.pad_w = pw;

    std::vector<Tensor> final_c, ema_c;
    for (int f = 0; f < T; ++f) {
        final_c.push_back(crop_hw(out.result.final_frames[static_cast<size_t>(f)], H, W));
        ema_c.push_back(crop_hw(out.result.ema_frames[static_cast<size_t>(f)], H, W));
    }

    ImageMetrics& m = out.metrics;
    if (has_gt) {
        double mse_f = 0.0, mse_e = 0.0;
        for (int f = 0; f < T; ++f) {
            mse_f += mse(final_c[static_cast<size_t>(f)].data(), gt[static_cast<size_t>(f)].data());
            mse_e += mse(ema_c[static_cast<size_t>(f)].data(), gt[static_cast<size_t>(f)].data());
        }
        m.final_psnr = psnr_from_mse(mse_f / T);
        m.final_psnr_ema = psnr_from_mse(mse_e / T);
        if (!out.result.psnr_curve.empty()) {
            size_t best = 0;
            for (size_t i = 1; i < out.result.psnr_curve.size(); ++i)
                if (out.result.psnr_curve[i] > out.result.psnr_curve[best]) best = i;
            m.best_psnr = out.result.psnr_curve[best];
            m.best_psnr_iteration = static_cast<int>(best) + 1;
        }
        double mse_n = 0.0;
        for (int f = 0; f < T; ++f)
            mse_n += mse(observed[static_cast<size_t>(f)].data(), gt[static_cast<size_t>(f)].data());
        m.noisy_psnr = psnr_from_mse(mse_n / T);
        if (T >= 3 && H >= 8 && W >= 8) m.ssim3d_ema = ssim3d_windowed(ema_c, gt);
    }

    json j;
    j["task"] = "video_denoise";
    j["arch"] = cfg.arch;
    j["encoding"] = to_string(cfg.encoding);
    j["seed"] = cfg.seed;
    j["frames"] = T;
    j["height"] = H;
    j["width"] = W;
    j["pad_h"] = ph;
    j["pad_w"] = pw;
    j["param_count"] = model.param_count();
    j["iterations_requested"] = cfg.iterations;
    j["executed_iterations"] = out.result.executed_iterations;
    j["stop_iteration"] = out.result.stop_iteration;
    j["stop_rule"] = to_string(cfg.stop_rule);
    j["final_loss"] = out.result.loss_curve.empty() ? -1.0 : out.result.loss_curve.back();
    if (has_gt) {
        j["final_psnr"] = m.final_psnr;
        j["final_psnr_ema"] = m.final_psnr_ema;
        j["best_psnr"] = m.best_psnr;
        j["best_psnr_iteration"] = m.best_psnr_iteration;
        j["noisy_psnr"] = m.noisy_psnr;
        if (m.ssim3d_ema >= 0) j["ssim3d_ema"] = m.ssim3d_ema;
    }
    j["config"] = config_echo(cfg);
    out.metrics_json = j.dump(2) + "\n";

    write_text_file(out.out_dir / "config.resolved", serialize_run_config(cfg));
    write_text_file(out.out_dir / "metrics.json", out.metrics_json);
    write_curves_csv(out.out_dir / "curves.csv", out.result);
    FrameSequence fin{final_c, 0.0}, ema{ema_c, 0.0}, obs{observed, 0.0};
    save_frames(fin, (out.out_dir / "final").string());
    save_frames(ema, (out.out_dir / "ema").string());
    save_frames(obs, (out.out_dir / "observed").string());
    save_png(final_c[0], (out.out_dir / "final_frame0.png").string());
    log << "run artifacts in " << out.out_dir.string() << " (wall "
        << out.result.wall_seconds << " s)\n";
    return out;
}

SpectralBiasOutputs run_spectral_bias(RunConfig cfg, std::ostream& log) {
    cfg.task = TaskKind::Denoise;
    cfg.noise = NoiseKind::None;
    cfg.encoding = EncodingKind::FourierFeatures;
    if (cfg.iterations == 0) cfg.iterations = 600;
    check<ConfigError>(cfg.arch == "hourglass", "the spectral probe drives the hourglass model");

    SpectralBiasConfig sc;
    sc.height = cfg.probe_h;
    sc.width = cfg.probe_w;
    sc.m = cfg.m;
    sc.f_max = cfg.f_max;
    sc.model.levels = cfg.levels;
    sc.model.width = cfg.width;
    sc.model.blocks_per_level = cfg.blocks_per_level;
    sc.model.skip_channels = cfg.skip_channels;
    sc.model.kernel = cfg.kernel;
    sc.model.upsample = cfg.upsample;
    sc.model.act = cfg.act;
    sc.model.act_param = cfg.act_param;
    sc.iterations = cfg.iterations;
    sc.lr = cfg.lr;
    sc.probe_stride = cfg.probe_stride;
    sc.seed = cfg.seed;

    log << "spectral-bias probe at " << sc.height << "x" << sc.width << ", f_max " << sc.f_max
        << ", " << sc.iterations << " iterations\n";
    SpectralBiasOutputs out;
    out.probe = spectral_bias_probe(sc);
    out.out_dir = prepare_out_dir(cfg);

    std::ostringstream csv;
    csv << "iteration";
    for (int f : out.probe.table.probe_freqs) csv << ",err_f" << f;
    csv << "\n";
    for (size_t r = 0; r < out.probe.table.errors.size(); ++r) {
        csv << out.probe.table.iterations[r];
        for (double e : out.probe.table.errors[r]) csv << "," << e;
        csv << "\n";
    }
    write_text_file(out.out_dir / "probe.csv", csv.str());
    write_text_file(out.out_dir / "curves.csv", csv.str());

    json j;
    j["task"] = "spectral_bias";
    j["seed"] = cfg.seed;
    j["f_max"] = cfg.f_max;
    j["iterations"] = sc.iterations;
    j["probe_freqs"] = out.probe.table.probe_freqs;
    j["crossings"] = out.probe.crossings;
    j["threshold_fraction"] = sc.threshold_fraction;
    j["final_psnr"] =
        out.probe.run.psnr_curve.empty() ? -1.0 : out.probe.run.psnr_curve.back();
    j["config"] = config_echo(cfg);
    out.metrics_json = j.dump(2) + "\n";
    write_text_file(out.out_dir / "metrics.json", out.metrics_json);
    write_text_file(out.out_dir / "config.resolved", serialize_run_config(cfg));
    save_png(out.probe.gt, (out.out_dir / "gt.png").string());
    save_png(out.probe.run.final_output, (out.out_dir / "final.png").string());
    log << "crossings:";
    for (int c : out.probe.crossings) log << " " << c;
    log << "\n";
    return out;
}

SweepOutputs run_fmax_sweep(RunConfig cfg, std::ostream& log) {
    cfg.task = TaskKind::Denoise;
    cfg.noise = NoiseKind::Gaussian;
    cfg.encoding = EncodingKind::FourierFeatures;
    if (cfg.iterations == 0) cfg.iterations = 600;
    check<ConfigError>(cfg.arch == "hourglass", "the sweep drives the hourglass model");

    FmaxSweepConfig fc;
    fc.f_max_values = parse_double_list(cfg.fmax_list);
    fc.m = cfg.m;
    fc.sigma = cfg.sigma255 / 255.0f;
    fc.model.levels = cfg.levels;
    fc.model.width = cfg.width;
    fc.model.blocks_per_level = cfg.blocks_per_level;
    fc.model.skip_channels = cfg.skip_channels;
    fc.model.kernel = cfg.kernel;
    fc.model.upsample = cfg.upsample;
    fc.model.act = cfg.act;
    fc.model.act_param = cfg.act_param;
    fc.iterations = cfg.iterations;
    fc.lr = cfg.lr;
    fc.ema_decay = cfg.ema_decay;
    fc.seed = cfg.seed;

    const Tensor clean = cfg.input.empty()
                             ? synth_texture_image(3, cfg.probe_h, cfg.probe_w, cfg.seed)
                             : load_png(cfg.input);

    SweepOutputs out;
    out.out_dir = prepare_out_dir(cfg);
    log << "f_max sweep over " << fc.f_max_values.size() << " values, " << fc.iterations
        << " iterations each\n";
    out.points = fmax_sweep(fc, clean, [&log](const SweepPoint& p) {
        log << "  f_max " << p.f_max << ": psnr_ema " << p.psnr_ema << "\n";
    });

    std::ostringstream csv;
    csv << "f_max,psnr,psnr_raw\n";
    for (const SweepPoint& p : out.points)
        csv << p.f_max << "," << p.psnr_ema << "," << p.psnr_raw << "\n";
    write_text_file(out.out_dir / "sweep.csv", csv.str());
    write_text_file(out.out_dir / "curves.csv", csv.str());

    json j;
    j["task"] = "fmax_sweep";
    j["seed"] = cfg.seed;
    j["iterations"] = fc.iterations;
    json pts = json::array();
    for (const SweepPoint& p : out.points)
        pts.push_back({{"f_max", p.f_max}, {"psnr", p.psnr_ema}, {"psnr_raw", p.psnr_raw}});
    j["points"] = pts;
    j["config"] = config_echo(cfg);
    out.metrics_json = j.dump(2) + "\n";
    write_text_file(out.out_dir / "metrics.json", out.metrics_json);
    write_text_file(out.out_dir / "config.resolved", serialize_run_config(cfg));
    save_png(clean, (out.out_dir / "clean.png").string());
    return out;
}

fs::path run_encode_dump(RunConfig cfg, std::ostream& log) {
    const int H = cfg.probe_h, W = cfg.probe_w;
    Tensor enc;
    switch (cfg.encoding) {
        case EncodingKind::FourierFeatures:
            enc = fourier_grid_2d(H, W, frequency_ladder(cfg.m, cfg.f_max)).tensor;
            break;
        case EncodingKind::Meshgrid: enc = meshgrid_2d(H, W).tensor; break;
        case EncodingKind::Noise:
            enc = noise_input(cfg.noise_channels, H, W, cfg.encoding_seed).tensor;
            break;
    }
    const int C = enc.dim(0);
    const int cols = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(C))));
    const int rows = ceil_div(C, cols);
    std::vector<float> sheet(static_cast<size_t>(rows) * H * cols * W, 0.0f);
    const int SW = cols * W;
    for (int c = 0; c < C; ++c) {
        const int r0 = (c / cols) * H, c0 = (c % cols) * W;
        const float* src = enc.data().data() + static_cast<int64_t>(c) * H * W;
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x) {
                float v = src[static_cast<int64_t>(y) * W + x];
                if (cfg.encoding == EncodingKind::FourierFeatures) v = 0.5f * (v + 1.0f);
                if (cfg.encoding == EncodingKind::Noise) v *= 10.0f;
                sheet[static_cast<size_t>(r0 + y) * SW + c0 + x] = v;
            }
    }
    fs::path dir = prepare_out_dir(cfg);
    save_png(Tensor::from_data({1, rows * H, SW}, std::move(sheet)),
             (dir / "encoding.png").string());

    json j;
    j["task"] = "encode_dump";
    j["encoding"] = to_string(cfg.encoding);
    j["channels"] = C;
    j["channel_order"] =
        "axis-major (vertical, horizontal), frequency-minor, cos before sin";
    j["config"] = config_echo(cfg);
    write_text_file(dir / "metrics.json", j.dump(2) + "\n");
    write_text_file(dir / "config.resolved", serialize_run_config(cfg));
    write_text_file(dir / "curves.csv", "channel,min,max\n");
    log << "encoding sheet written to " << (dir / "encoding.png").string() << "\n";
    return dir;
}

}  // namespace pip
