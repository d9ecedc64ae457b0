#include "pip/run_config.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace pip {

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

bool parse_bool(const std::string& v, const std::string& key) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("invalid boolean '" + v + "' for " + key);
}

template <typename T>
T parse_number(const std::string& v, const std::string& key) {
    std::istringstream is(trim(v));
    T out;
    is >> out;
    bool ok = !is.fail();
    if (ok) {
        std::string rest;
        is >> rest;
        ok = rest.empty();
    }
    if (!ok) throw ConfigError("invalid number '" + v + "' for " + key);
    return out;
}

// Field registry: one entry per (section, key) with a setter and a getter,
// shared by the parser and the serializer so they can never drift apart.
struct Field {
    std::string section, key;
    std::function<void(RunConfig&, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
};

std::string fmt_float(float v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

const std::vector<Field>& fields() {
    static const std::vector<Field> kFields = [] {
        std::vector<Field> f;
        auto add = [&f](std::string section, std::string key, auto set, auto get) {
            f.push_back({std::move(section), std::move(key), set, get});
        };
        // [task]
        add("task", "kind",
            [](RunConfig& c, const std::string& v) { c.task = task_kind_from_string(v); },
            [](const RunConfig& c) { return to_string(c.task); });
        add("task", "noise",
            [](RunConfig& c, const std::string& v) { c.noise = noise_kind_from_string(v); },
            [](const RunConfig& c) { return to_string(c.noise); });
        add("task", "sigma",
            [](RunConfig& c, const std::string& v) { c.sigma255 = parse_number<float>(v, "sigma"); },
            [](const RunConfig& c) { return fmt_float(c.sigma255); });
        add("task", "poisson_peak",
            [](RunConfig& c, const std::string& v) {
                c.poisson_peak = parse_number<float>(v, "poisson_peak");
            },
            [](const RunConfig& c) { return fmt_float(c.poisson_peak); });
        add("task", "sr_factor",
            [](RunConfig& c, const std::string& v) {
                c.sr_factor = parse_number<int>(v, "sr_factor");
            },
            [](const RunConfig& c) { return std::to_string(c.sr_factor); });
        add("task", "down_kernel",
            [](RunConfig& c, const std::string& v) {
                c.down_kernel = downsample_kernel_from_string(v);
            },
            [](const RunConfig& c) { return to_string(c.down_kernel); });
        add("task", "synthesize",
            [](RunConfig& c, const std::string& v) { c.synthesize = parse_bool(v, "synthesize"); },
            [](const RunConfig& c) { return c.synthesize ? "true" : "false"; });
        // [encoding]
        add("encoding", "kind",
            [](RunConfig& c, const std::string& v) { c.encoding = encoding_kind_from_string(v); },
            [](const RunConfig& c) { return to_string(c.encoding); });
        add("encoding", "m",
            [](RunConfig& c, const std::string& v) { c.m = parse_number<int>(v, "m"); },
            [](const RunConfig& c) { return std::to_string(c.m); });
        add("encoding", "f_max",
            [](RunConfig& c, const std::string& v) { c.f_max = parse_number<float>(v, "f_max"); },
            [](const RunConfig& c) { return fmt_float(c.f_max); });
        add("encoding", "m_temporal",
            [](RunConfig& c, const std::string& v) {
                c.m_temporal = parse_number<int>(v, "m_temporal");
            },
            [](const RunConfig& c) { return std::to_string(c.m_temporal); });
        add("encoding", "f_max_temporal",
            [](RunConfig& c, const std::string& v) {
                c.f_max_temporal = parse_number<float>(v, "f_max_temporal");
            },
            [](const RunConfig& c) { return fmt_float(c.f_max_temporal); });
        add("encoding", "trainable",
            [](RunConfig& c, const std::string& v) {
                c.trainable_freqs = parse_bool(v, "trainable");
            },
            [](const RunConfig& c) { return c.trainable_freqs ? "true" : "false"; });
        add("encoding", "noise_channels",
            [](RunConfig& c, const std::string& v) {
                c.noise_channels = parse_number<int>(v, "noise_channels");
            },
            [](const RunConfig& c) { return std::to_string(c.noise_channels); });
        add("encoding", "seed",
            [](RunConfig& c, const std::string& v) {
                c.encoding_seed = parse_number<uint64_t>(v, "encoding seed");
            },
            [](const RunConfig& c) { return std::to_string(c.encoding_seed); });
        // [model] -- preset first so later keys can override it.
        add("model", "preset",
            [](RunConfig& c, const std::string& v) { apply_preset(c, v); },
            [](const RunConfig& c) { return c.preset; });
        add("model", "arch",
            [](RunConfig& c, const std::string& v) {
                if (v != "hourglass" && v != "flat") throw ConfigError("unknown arch: " + v);
                c.arch = v;
            },
            [](const RunConfig& c) { return c.arch; });
        add("model", "kernel",
            [](RunConfig& c, const std::string& v) { c.kernel = parse_number<int>(v, "kernel"); },
            [](const RunConfig& c) { return std::to_string(c.kernel); });
        add("model", "levels",
            [](RunConfig& c, const std::string& v) { c.levels = parse_number<int>(v, "levels"); },
            [](const RunConfig& c) { return std::to_string(c.levels); });
        add("model", "width",
            [](RunConfig& c, const std::string& v) { c.width = parse_number<int>(v, "width"); },
            [](const RunConfig& c) { return std::to_string(c.width); });
        add("model", "blocks_per_level",
            [](RunConfig& c, const std::string& v) {
                c.blocks_per_level = parse_number<int>(v, "blocks_per_level");
            },
            [](const RunConfig& c) { return std::to_string(c.blocks_per_level); });
        add("model", "skip_channels",
            [](RunConfig& c, const std::string& v) {
                c.skip_channels = parse_number<int>(v, "skip_channels");
            },
            [](const RunConfig& c) { return std::to_string(c.skip_channels); });
        add("model", "upsample",
            [](RunConfig& c, const std::string& v) { c.upsample = upsample_mode_from_string(v); },
            [](const RunConfig& c) { return to_string(c.upsample); });
        add("model", "activation",
            [](RunConfig& c, const std::string& v) { c.act = activation_from_string(v); },
            [](const RunConfig& c) { return to_string(c.act); });
        add("model", "activation_param",
            [](RunConfig& c, const std::string& v) {
                c.act_param = parse_number<float>(v, "activation_param");
            },
            [](const RunConfig& c) { return fmt_float(c.act_param); });
        add("model", "out_channels",
            [](RunConfig& c, const std::string& v) {
                c.out_channels = parse_number<int>(v, "out_channels");
            },
            [](const RunConfig& c) { return std::to_string(c.out_channels); });
        add("model", "in_channels",
            [](RunConfig& c, const std::string& v) {
                c.in_channels = parse_number<int>(v, "in_channels");
            },
            [](const RunConfig& c) { return std::to_string(c.in_channels); });
        add("model", "flat_depth",
            [](RunConfig& c, const std::string& v) {
                c.flat_depth = parse_number<int>(v, "flat_depth");
            },
            [](const RunConfig& c) { return std::to_string(c.flat_depth); });
        // [train]
        add("train", "iterations",
            [](RunConfig& c, const std::string& v) {
                c.iterations = parse_number<int>(v, "iterations");
            },
            [](const RunConfig& c) { return std::to_string(c.iterations); });
        add("train", "lr",
            [](RunConfig& c, const std::string& v) { c.lr = parse_number<float>(v, "lr"); },
            [](const RunConfig& c) { return fmt_float(c.lr); });
        add("train", "ema_decay",
            [](RunConfig& c, const std::string& v) {
                c.ema_decay = parse_number<float>(v, "ema_decay");
            },
            [](const RunConfig& c) { return fmt_float(c.ema_decay); });
        add("train", "input_jitter_std",
            [](RunConfig& c, const std::string& v) {
                c.input_jitter_std = parse_number<float>(v, "input_jitter_std");
            },
            [](const RunConfig& c) { return fmt_float(c.input_jitter_std); });
        add("train", "stop_rule",
            [](RunConfig& c, const std::string& v) { c.stop_rule = stop_rule_from_string(v); },
            [](const RunConfig& c) { return to_string(c.stop_rule); });
        add("train", "stop_decay",
            [](RunConfig& c, const std::string& v) {
                c.stop.decay = parse_number<float>(v, "stop_decay");
            },
            [](const RunConfig& c) { return fmt_float(c.stop.decay); });
        add("train", "stop_window",
            [](RunConfig& c, const std::string& v) {
                c.stop.window = parse_number<int>(v, "stop_window");
            },
            [](const RunConfig& c) { return std::to_string(c.stop.window); });
        add("train", "stop_patience",
            [](RunConfig& c, const std::string& v) {
                c.stop.patience = parse_number<int>(v, "stop_patience");
            },
            [](const RunConfig& c) { return std::to_string(c.stop.patience); });
        add("train", "stop_stride",
            [](RunConfig& c, const std::string& v) {
                c.stop.stride = parse_number<int>(v, "stop_stride");
            },
            [](const RunConfig& c) { return std::to_string(c.stop.stride); });
        add("train", "seed",
            [](RunConfig& c, const std::string& v) { c.seed = parse_number<uint64_t>(v, "seed"); },
            [](const RunConfig& c) { return std::to_string(c.seed); });
        add("train", "snapshot_stride",
            [](RunConfig& c, const std::string& v) {
                c.snapshot_stride = parse_number<int>(v, "snapshot_stride");
            },
            [](const RunConfig& c) { return std::to_string(c.snapshot_stride); });
        // [probe]
        add("probe", "height",
            [](RunConfig& c, const std::string& v) { c.probe_h = parse_number<int>(v, "height"); },
            [](const RunConfig& c) { return std::to_string(c.probe_h); });
        add("probe", "width",
            [](RunConfig& c, const std::string& v) { c.probe_w = parse_number<int>(v, "width"); },
            [](const RunConfig& c) { return std::to_string(c.probe_w); });
        add("probe", "stride",
            [](RunConfig& c, const std::string& v) {
                c.probe_stride = parse_number<int>(v, "probe stride");
            },
            [](const RunConfig& c) { return std::to_string(c.probe_stride); });
        add("probe", "fmax_list",
            [](RunConfig& c, const std::string& v) { c.fmax_list = v; },
            [](const RunConfig& c) { return c.fmax_list; });
        // [io]
        auto add_path = [&add](const char* key, std::string RunConfig::*member) {
            add("io", key,
                [member](RunConfig& c, const std::string& v) { c.*member = v; },
                [member](const RunConfig& c) { return c.*member; });
        };
        add_path("input", &RunConfig::input);
        add_path("gt", &RunConfig::gt);
        add_path("mask", &RunConfig::mask);
        add_path("frames", &RunConfig::frames);
        add_path("gt_frames", &RunConfig::gt_frames);
        add_path("out_dir", &RunConfig::out_dir);
        return f;
    }();
    return kFields;
}

const Field* find_field(const std::string& section, const std::string& key) {
    for (const Field& f : fields())
        if (f.section == section && f.key == key) return &f;
    return nullptr;
}

}  // namespace

void apply_preset(RunConfig& c, const std::string& preset) {
    c.preset = preset;
    if (preset == "none") return;
    auto base = [&c] {
        c.arch = "hourglass";
        c.kernel = 1;
        c.levels = 5;
        c.width = 128;
        c.blocks_per_level = 2;
        c.skip_channels = 4;
        c.upsample = UpsampleMode::Bilinear;
        c.act = ActivationKind::LeakyRelu;
        c.act_param = 0.2f;
        c.encoding = EncodingKind::FourierFeatures;
        c.m = 8;
        c.f_max = 256.0f;
        c.trainable_freqs = false;
        c.in_channels = 0;
    };
    if (preset == "pip-default") {
        base();
    } else if (preset == "pip-learned") {
        base();
        c.trainable_freqs = true;
    } else if (preset == "dip-default") {
        base();
        c.kernel = 3;
        c.encoding = EncodingKind::Noise;
        c.noise_channels = 32;
    } else if (preset == "pip-video") {
        base();
        c.levels = 6;
        c.width = 256;
        c.m_temporal = 4;
        c.f_max_temporal = 8.0f;
    } else if (preset == "pip-inpaint") {
        base();
        c.levels = 6;
        c.trainable_freqs = true;
    } else if (preset == "flat-mlp") {
        base();
        c.arch = "flat";
        c.flat_depth = 6;
        c.width = 128;
    } else {
        throw ConfigError("unknown preset: " + preset);
    }
}

int encoding_channels(const RunConfig& cfg) {
    switch (cfg.encoding) {
        case EncodingKind::FourierFeatures:
            return cfg.task == TaskKind::VideoDenoise ? 4 * cfg.m + 2 * cfg.m_temporal : 4 * cfg.m;
        case EncodingKind::Meshgrid: return 2;
        case EncodingKind::Noise: return cfg.noise_channels;
    }
    return 0;
}

void resolve_run_config(RunConfig& cfg) {
    if (cfg.iterations == 0) {
        switch (cfg.task) {
            case TaskKind::Denoise:
                cfg.iterations =
                    (cfg.noise == NoiseKind::Gaussian && cfg.sigma255 >= 20.0f) ? 1800 : 3000;
                break;
            case TaskKind::Sr: cfg.iterations = cfg.sr_factor >= 8 ? 4000 : 2000; break;
            case TaskKind::Inpaint: cfg.iterations = 8000; break;
            case TaskKind::VideoDenoise: cfg.iterations = 5000; break;
        }
    }
    const int enc_ch = encoding_channels(cfg);
    if (cfg.in_channels == 0) cfg.in_channels = enc_ch;
    check<ConfigError>(cfg.in_channels == enc_ch, "in_channels (", cfg.in_channels,
                       ") does not match the encoding's channel count (", enc_ch, ")");
    check<ConfigError>(!cfg.trainable_freqs || cfg.encoding == EncodingKind::FourierFeatures,
                       "trainable frequencies require the ff encoding");
    check<ConfigError>(!(cfg.trainable_freqs && cfg.input_jitter_std > 0.0f),
                       "input jitter cannot be combined with trainable frequencies");
    check<ConfigError>(cfg.iterations >= 1, "iterations must be >= 1");
}

RunConfig parse_run_config_string(const std::string& text) {
    RunConfig cfg;
    std::istringstream is(text);
    std::string line, section;
    int line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        const size_t hash = line.find_first_of("#;");
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            check<ConfigError>(line.back() == ']', "line ", line_no, ": malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const size_t eq = line.find('=');
        check<ConfigError>(eq != std::string::npos, "line ", line_no, ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const Field* f = find_field(section, key);
        check<ConfigError>(f != nullptr, "line ", line_no, ": unknown key '", key,
                           "' in section [", section, "]");
        f->set(cfg, value);
    }
    return cfg;
}

RunConfig parse_run_config_file(const std::string& path) {
    std::ifstream is(path);
    check<ConfigError>(is.good(), "cannot open config '", path, "'");
    std::stringstream buf;
    buf << is.rdbuf();
    return parse_run_config_string(buf.str());
}

std::string serialize_run_config(const RunConfig& cfg) {
    std::ostringstream os;
    std::string section;
    for (const Field& f : fields()) {
        if (f.section != section) {
            if (!section.empty()) os << "\n";
            section = f.section;
            os << "[" << section << "]\n";
        }
        os << f.key << " = " << f.get(cfg) << "\n";
    }
    return os.str();
}

std::vector<double> parse_double_list(const std::string& csv) {
    std::vector<double> out;
    std::istringstream is(csv);
    std::string item;
    while (std::getline(is, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        out.push_back(parse_number<double>(item, "list entry"));
    }
    check<ConfigError>(!out.empty(), "empty numeric list: '", csv, "'");
    return out;
}

std::vector<uint64_t> parse_seed_list(const std::string& csv) {
    std::vector<uint64_t> out;
    for (double v : parse_double_list(csv)) out.push_back(static_cast<uint64_t>(v));
    return out;
}

}  // namespace pip
