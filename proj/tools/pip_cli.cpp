// Command-line front end: zero-shot image/video restoration driven by
// coordinate encodings, plus the analysis and verification subcommands.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <thread>

#include "pip/linear_theory.hpp"
#include "pip/runner.hpp"

namespace fs = std::filesystem;
using namespace pip;

namespace {


// Accepts "128x128" or a single "128" for square sizes.
void parse_size(const std::string& v, int& h, int& w) {
    const size_t x = v.find_first_of("xX");
    try {
        if (x == std::string::npos) {
            h = w = std::stoi(v);
        } else {
            h = std::stoi(v.substr(0, x));
            w = std::stoi(v.substr(x + 1));
        }
    } catch (const std::exception&) {
        throw ConfigError("invalid size '" + v + "', expected HxW");
    }
    if (h < 1 || w < 1) throw ConfigError("invalid size '" + v + "'");
}

void add_size_option(CLI::App* cmd, RunConfig& cfg, const std::string& help) {
    cmd->add_option_function<std::string>(
        "--size", [&cfg](const std::string& v) { parse_size(v, cfg.probe_h, cfg.probe_w); }, help);
}

struct CommonArgs {
    std::string config_path;
    RunConfig cfg;
};

// Registers the model/encoding/train flags shared by every training
// subcommand. Flags override whatever the config file set.
void add_common_options(CLI::App* cmd, CommonArgs& a) {
    cmd->add_option("--config", a.config_path, "key=value config file to start from");
    cmd->add_option_function<std::string>(
           "--preset", [&a](const std::string& v) { apply_preset(a.cfg, v); },
           "pip-default|dip-default|pip-learned|pip-video|pip-inpaint|flat-mlp|none")
        ->type_name("NAME");
    cmd->add_option_function<std::string>(
        "--encoding", [&a](const std::string& v) { a.cfg.encoding = encoding_kind_from_string(v); },
        "ff|meshgrid|noise");
    cmd->add_option("--m", a.cfg.m, "frequencies per axis");
    cmd->add_option("--fmax", a.cfg.f_max, "ladder cap (radians over the unit axis)");
    cmd->add_option("--m-temporal", a.cfg.m_temporal, "temporal frequencies (video)");
    cmd->add_option("--fmax-temporal", a.cfg.f_max_temporal, "temporal ladder cap (video)");
    cmd->add_flag("--trainable-freqs", a.cfg.trainable_freqs,
                  "optimize the frequencies jointly with the model");
    cmd->add_option("--noise-channels", a.cfg.noise_channels, "channels for the noise encoding");
    cmd->add_option("--encoding-seed", a.cfg.encoding_seed, "seed for the noise encoding");
    cmd->add_option_function<std::string>(
        "--arch", [&a](const std::string& v) {
            if (v != "hourglass" && v != "flat") throw ConfigError("unknown arch: " + v);
            a.cfg.arch = v;
        },
        "hourglass|flat");
    cmd->add_option("--kernel", a.cfg.kernel, "conv kernel size (1 or 3)");
    cmd->add_option("--levels", a.cfg.levels, "hourglass levels");
    cmd->add_option("--width", a.cfg.width, "channels per block");
    cmd->add_option("--skip-channels", a.cfg.skip_channels, "skip-path channels");
    cmd->add_option("--flat-depth", a.cfg.flat_depth, "hidden layers of the flat MLP");
    cmd->add_option_function<std::string>(
        "--upsample", [&a](const std::string& v) { a.cfg.upsample = upsample_mode_from_string(v); },
        "nearest|bilinear");
    cmd->add_option_function<std::string>(
        "--activation", [&a](const std::string& v) { a.cfg.act = activation_from_string(v); },
        "leaky_relu|sine|gaussian");
    cmd->add_option("--activation-param", a.cfg.act_param,
                    "slope / frequency / width of the activation");
    cmd->add_option("--iters", a.cfg.iterations, "iteration budget (0 = task default)");
    cmd->add_option("--lr", a.cfg.lr, "Adam learning rate");
    cmd->add_option("--ema-decay", a.cfg.ema_decay, "output EMA decay");
    cmd->add_option("--jitter", a.cfg.input_jitter_std, "additive input jitter std (0 = off)");
    cmd->add_option_function<std::string>(
        "--stop", [&a](const std::string& v) { a.cfg.stop_rule = stop_rule_from_string(v); },
        "fixed|emv|wmv");
    cmd->add_option("--stop-patience", a.cfg.stop.patience, "checks without a new minimum");
    cmd->add_option("--stop-window", a.cfg.stop.window, "wmv window");
    cmd->add_option("--stop-decay", a.cfg.stop.decay, "emv decay");
    cmd->add_option("--stop-stride", a.cfg.stop.stride, "iterations between checks");
    cmd->add_option("--seed", a.cfg.seed, "master seed");
    cmd->add_option("--snapshot-every", a.cfg.snapshot_stride, "PNG snapshot cadence (0 = off)");
    cmd->add_option("--out", a.cfg.out_dir, "output directory (default runs/<stamp>-seed<seed>)");
}

// --config must be applied before the flag overrides; CLI11 callbacks fire
// in parse order, so load it in a preparse hook instead.
void load_config_if_given(CommonArgs& a) {
    if (!a.config_path.empty()) {
        RunConfig file_cfg = parse_run_config_file(a.config_path);
        file_cfg.out_dir = a.cfg.out_dir.empty() ? file_cfg.out_dir : a.cfg.out_dir;
        a.cfg = file_cfg;
    }
}

int run_batch(const CommonArgs& base, const std::string& seeds_csv, int jobs,
              const std::function<RunOutputs(RunConfig, std::ostream&)>& fn) {
    std::vector<uint64_t> seeds =
        seeds_csv.empty() ? std::vector<uint64_t>{base.cfg.seed} : parse_seed_list(seeds_csv);
    jobs = std::max(1, std::min<int>(jobs, static_cast<int>(seeds.size())));
    std::vector<RunOutputs> outs(seeds.size());
    std::vector<std::string> errors(seeds.size());

    const fs::path base_dir =
        base.cfg.out_dir.empty() ? fs::path() : fs::path(base.cfg.out_dir);
    std::atomic<size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            const size_t i = next.fetch_add(1);
            if (i >= seeds.size()) return;
            RunConfig cfg = base.cfg;
            cfg.seed = seeds[i];
            if (seeds.size() > 1 && !base_dir.empty())
                cfg.out_dir = (base_dir / ("seed" + std::to_string(seeds[i]))).string();
            std::ostringstream log;
            try {
                outs[i] = fn(cfg, log);
            } catch (const std::exception& e) {
                errors[i] = e.what();
            }
            std::cerr << log.str();
        }
    };
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();

    bool ok = true;
    for (size_t i = 0; i < seeds.size(); ++i) {
        if (!errors[i].empty()) {
            std::cerr << "seed " << seeds[i] << " failed: " << errors[i] << "\n";
            ok = false;
            continue;
        }
        std::cout << "seed " << seeds[i];
        if (outs[i].metrics.final_psnr_ema >= 0)
            std::cout << ": psnr_ema " << outs[i].metrics.final_psnr_ema << " dB";
        std::cout << "  (" << outs[i].out_dir.string() << ")\n";
    }
    if (!ok) throw NumericError("one or more batch runs failed");
    return 0;
}

int cmd_prop1(const std::vector<int>& sizes, int trials, int steps, double tol, bool uniform_extra,
              const std::string& out_dir, uint64_t seed) {
    using namespace linear_theory;
    auto rows = prop1_equivalence_suite(sizes, trials, seed, steps);
    std::printf("%4s %4s %14s %14s %14s %12s  %s\n", "N", "r", "conv_loss", "elem_loss", "oracle",
                "gap", "status");
    bool all_ok = true;
    std::ostringstream csv;
    csv << "N,r,trial,conv_loss,elem_loss,oracle,gap,pass\n";
    for (const auto& row : rows) {
        const bool ok = row.gap() < tol && std::abs(row.loss_conv - row.loss_oracle) < tol &&
                        std::abs(row.loss_elem - row.loss_oracle) < tol;
        all_ok = all_ok && ok;
        std::printf("%4d %4d %14.6e %14.6e %14.6e %12.3e  %s\n", row.n_size, row.support,
                    row.loss_conv, row.loss_elem, row.loss_oracle, row.gap(),
                    ok ? "pass" : "FAIL");
        csv << row.n_size << "," << row.support << "," << row.trial << "," << row.loss_conv << ","
            << row.loss_elem << "," << row.loss_oracle << "," << row.gap() << ","
            << (ok ? 1 : 0) << "\n";
    }
    std::printf("%zu trials, gaps %s %g\n", rows.size(), all_ok ? "all below" : "NOT all below",
                tol);
    if (uniform_extra) {
        auto extra = prop1_equivalence_suite(sizes, std::max(1, trials / 4), seed + 1, steps,
                                             InputLaw::Uniform);
        double worst = 0.0;
        for (const auto& row : extra) worst = std::max(worst, row.gap());
        std::printf("uniform-input extra (not gated): %zu trials, worst gap %.3e\n", extra.size(),
                    worst);
    }
    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        write_text_file(fs::path(out_dir) / "prop1.csv", csv.str());
    }
    return all_ok ? 0 : 1;
}

int cmd_count_params(const std::string& preset, int H, int W, bool as_json) {
    RunConfig cfg;
    apply_preset(cfg, preset);
    resolve_run_config(cfg);
    Model m = model_from_config(cfg);
    const int64_t params = m.param_count();
    const int64_t macs = count_macs(m, H, W);
    const int64_t flops = count_flops(m, H, W);
    if (as_json) {
        std::printf(
            "{\"preset\":\"%s\",\"params\":%lld,\"conv_layers\":%d,\"macs\":%lld,"
            "\"flops\":%lld,\"height\":%d,\"width\":%d}\n",
            preset.c_str(), static_cast<long long>(params), m.conv_layer_count(),
            static_cast<long long>(macs), static_cast<long long>(flops), H, W);
    } else {
        std::printf("preset %s: %lld params (%.2fM), %d conv layers\n", preset.c_str(),
                    static_cast<long long>(params), static_cast<double>(params) / 1e6,
                    m.conv_layer_count());
        std::printf("at %dx%d: %.2f GMACs, %.2f GFLOPs (2*MAC + bias + elementwise)\n", H, W,
                    static_cast<double>(macs) / 1e9, static_cast<double>(flops) / 1e9);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Zero-shot image and video restoration with coordinate-encoded inputs"};
    app.require_subcommand(1);

    // ---- restoration tasks ----
    CommonArgs den, sr, inp, vid;
    std::string den_seeds, sr_seeds, inp_seeds, vid_seeds;
    int den_jobs = 1, sr_jobs = 1, inp_jobs = 1, vid_jobs = 1;

    auto* c_den = app.add_subcommand("denoise", "fit a model to a noisy image and restore it");
    c_den->add_option("--in", den.cfg.input, "observed (noisy) image, or clean with --synthesize")
        ->required();
    c_den->add_option("--gt", den.cfg.gt, "clean reference for PSNR reporting");
    c_den->add_option_function<float>(
        "--sigma", [&den](float v) {
            den.cfg.noise = NoiseKind::Gaussian;
            den.cfg.sigma255 = v;
        },
        "gaussian noise std on the 0..255 scale");
    c_den->add_option_function<float>(
        "--poisson", [&den](float v) {
            den.cfg.noise = NoiseKind::Poisson;
            den.cfg.poisson_peak = v;
        },
        "poisson noise peak parameter");
    c_den->add_flag("--synthesize", den.cfg.synthesize,
                    "treat --in as clean and synthesize the degradation");
    c_den->add_option("--seeds", den_seeds, "comma list of seeds (batch mode)");
    c_den->add_option("--jobs", den_jobs, "concurrent batch runs");
    add_common_options(c_den, den);

    auto* c_sr = app.add_subcommand("sr", "single-image super-resolution");
    c_sr->add_option("--in", sr.cfg.input, "low-res input (or high-res clean with --synthesize)")
        ->required();
    c_sr->add_option("--gt", sr.cfg.gt, "high-res reference for PSNR reporting");
    c_sr->add_option("--factor", sr.cfg.sr_factor, "upscaling factor (4 or 8)");
    c_sr->add_option_function<std::string>(
        "--down-kernel",
        [&sr](const std::string& v) { sr.cfg.down_kernel = downsample_kernel_from_string(v); },
        "box|bicubic");
    c_sr->add_flag("--synthesize", sr.cfg.synthesize, "derive the LR observation from --in");
    c_sr->add_option("--seeds", sr_seeds, "comma list of seeds (batch mode)");
    c_sr->add_option("--jobs", sr_jobs, "concurrent batch runs");
    add_common_options(c_sr, sr);
    sr.cfg.task = TaskKind::Sr;
    sr.cfg.noise = NoiseKind::None;

    auto* c_inp = app.add_subcommand("inpaint", "reconstruct masked-out pixels");
    c_inp->add_option("--in", inp.cfg.input, "masked image (or clean with --synthesize)")
        ->required();
    c_inp->add_option("--mask", inp.cfg.mask, "mask PNG, white = known pixel")->required();
    c_inp->add_option("--gt", inp.cfg.gt, "clean reference for PSNR reporting");
    c_inp->add_flag("--synthesize", inp.cfg.synthesize, "zero the masked pixels of --in first");
    c_inp->add_option("--seeds", inp_seeds, "comma list of seeds (batch mode)");
    c_inp->add_option("--jobs", inp_jobs, "concurrent batch runs");
    add_common_options(c_inp, inp);
    inp.cfg.task = TaskKind::Inpaint;
    inp.cfg.noise = NoiseKind::None;
    apply_preset(inp.cfg, "pip-inpaint");

    auto* c_vid = app.add_subcommand("video-denoise", "denoise a frame sequence with one model");
    c_vid->add_option("--frames", vid.cfg.frames, "directory of PNG frames")->required();
    c_vid->add_option("--gt-frames", vid.cfg.gt_frames, "clean frames for PSNR reporting");
    c_vid->add_option_function<float>(
        "--sigma", [&vid](float v) {
            vid.cfg.noise = NoiseKind::Gaussian;
            vid.cfg.sigma255 = v;
        },
        "gaussian noise std on the 0..255 scale");
    c_vid->add_flag("--synthesize", vid.cfg.synthesize,
                    "treat --frames as clean and synthesize the noise");
    c_vid->add_option("--seeds", vid_seeds, "comma list of seeds (batch mode)");
    c_vid->add_option("--jobs", vid_jobs, "concurrent batch runs");
    add_common_options(c_vid, vid);
    vid.cfg.task = TaskKind::VideoDenoise;
    apply_preset(vid.cfg, "pip-video");

    // ---- analysis / verification ----
    CommonArgs bias;
    auto* c_bias = app.add_subcommand("spectral-bias",
                                      "fit the 3-tone image and report per-frequency convergence");
    bias.cfg.f_max = static_cast<float>(16.0 * M_PI);  // one octave below the highest tone
    add_size_option(c_bias, bias.cfg, "probe image size HxW (height a power of two)");
    c_bias->add_option("--probe-stride", bias.cfg.probe_stride, "iterations between FFT samples");
    add_common_options(c_bias, bias);

    CommonArgs sweep;
    auto* c_sweep =
        app.add_subcommand("fmax-sweep", "denoising PSNR as a function of the ladder cap");
    c_sweep->add_option("--list", sweep.cfg.fmax_list, "comma list of f_max values");
    add_size_option(c_sweep, sweep.cfg, "test image size HxW");
    c_sweep->add_option("--in", sweep.cfg.input, "optional clean PNG (synthetic texture if unset)");
    c_sweep->add_option_function<float>(
        "--sigma", [&sweep](float v) { sweep.cfg.sigma255 = v; }, "noise std, 0..255 scale");
    add_common_options(c_sweep, sweep);
    sweep.cfg.probe_h = 64;
    sweep.cfg.probe_w = 64;

    std::string p1_sizes = "16,32,64", p1_out;
    int p1_trials = 20, p1_steps = 20000;
    double p1_tol = 1e-6;
    uint64_t p1_seed = 7;
    bool p1_uniform = false;
    auto* c_p1 = app.add_subcommand(
        "prop1-check", "verify conv-fit vs element-wise Fourier-fit equivalence (linear case)");
    c_p1->add_option("--sizes", p1_sizes, "comma list of signal lengths (powers of two)");
    c_p1->add_option("--trials", p1_trials, "random pairs per size");
    c_p1->add_option("--steps", p1_steps, "gradient steps per fit");
    c_p1->add_option("--tol", p1_tol, "pass threshold on the loss gaps");
    c_p1->add_option("--seed", p1_seed, "random seed");
    c_p1->add_flag("--uniform-extra", p1_uniform, "also report uniform-law inputs (not gated)");
    c_p1->add_option("--out", p1_out, "optional directory for prop1.csv");

    std::string cp_preset = "pip-default";
    int cp_h = 512, cp_w = 512;
    bool cp_json = false;
    auto* c_cp = app.add_subcommand("count-params", "parameter / MAC / FLOP accounting");
    c_cp->add_option("--preset", cp_preset, "architecture preset");
    c_cp->add_option_function<std::string>(
        "--size", [&cp_h, &cp_w](const std::string& v) { parse_size(v, cp_h, cp_w); },
        "resolution HxW for the FLOP count (default 512x512)");
    c_cp->add_flag("--json", cp_json, "machine-readable output");

    CommonArgs dump;
    auto* c_dump = app.add_subcommand("encode-dump", "write the encoding channels as a PNG sheet");
    add_size_option(c_dump, dump.cfg, "grid size HxW");
    add_common_options(c_dump, dump);
    dump.cfg.probe_h = 64;
    dump.cfg.probe_w = 64;

    try {
        app.parse(argc, argv);

        if (*c_den) {
            load_config_if_given(den);
            den.cfg.task = TaskKind::Denoise;
            return run_batch(den, den_seeds, den_jobs,
                             [](RunConfig c, std::ostream& l) { return run_image_task(c, l); });
        }
        if (*c_sr) {
            load_config_if_given(sr);
            sr.cfg.task = TaskKind::Sr;
            return run_batch(sr, sr_seeds, sr_jobs,
                             [](RunConfig c, std::ostream& l) { return run_image_task(c, l); });
        }
        if (*c_inp) {
            load_config_if_given(inp);
            inp.cfg.task = TaskKind::Inpaint;
            return run_batch(inp, inp_seeds, inp_jobs,
                             [](RunConfig c, std::ostream& l) { return run_image_task(c, l); });
        }
        if (*c_vid) {
            load_config_if_given(vid);
            vid.cfg.task = TaskKind::VideoDenoise;
            return run_batch(vid, vid_seeds, vid_jobs,
                             [](RunConfig c, std::ostream& l) { return run_video_task(c, l); });
        }
        if (*c_bias) {
            load_config_if_given(bias);
            auto out = run_spectral_bias(bias.cfg, std::cerr);
            std::cout << out.metrics_json;
            return 0;
        }
        if (*c_sweep) {
            load_config_if_given(sweep);
            auto out = run_fmax_sweep(sweep.cfg, std::cerr);
            std::cout << out.metrics_json;
            return 0;
        }
        if (*c_p1) {
            std::vector<int> sizes;
            for (double v : parse_double_list(p1_sizes)) sizes.push_back(static_cast<int>(v));
            return cmd_prop1(sizes, p1_trials, p1_steps, p1_tol, p1_uniform, p1_out, p1_seed);
        }
        if (*c_cp) return cmd_count_params(cp_preset, cp_h, cp_w, cp_json);
        if (*c_dump) {
            load_config_if_given(dump);
            run_encode_dump(dump.cfg, std::cerr);
            return 0;
        }
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const ShapeError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const NumericError& e) {
        std::cerr << "numerical abort: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
