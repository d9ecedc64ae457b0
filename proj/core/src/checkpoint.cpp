#include <cstring>
#include <fstream>

#include "pip/network.hpp"

namespace pip {

namespace {

constexpr char kMagic[8] = {'P', 'I', 'P', 'M', 'O', 'D', 'L', '1'};
constexpr uint32_t kVersion = 1;

void put_u32(std::ostream& os, uint32_t v) {
    char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                 static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
    os.write(b, 4);
}

void put_i32(std::ostream& os, int32_t v) { put_u32(os, static_cast<uint32_t>(v)); }

void put_f32(std::ostream& os, float v) {
    uint32_t u;
    std::memcpy(&u, &v, 4);
    put_u32(os, u);
}

void put_u8(std::ostream& os, uint8_t v) { os.put(static_cast<char>(v)); }

uint32_t get_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    check(static_cast<bool>(is), "checkpoint truncated");
    return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
           (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

int32_t get_i32(std::istream& is) { return static_cast<int32_t>(get_u32(is)); }

float get_f32(std::istream& is) {
    const uint32_t u = get_u32(is);
    float f;
    std::memcpy(&f, &u, 4);
    return f;
}

uint8_t get_u8(std::istream& is) {
    const int c = is.get();
    check(c >= 0, "checkpoint truncated");
    return static_cast<uint8_t>(c);
}

}  // namespace

void save_checkpoint(const Model& m, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    check(os.good(), "cannot open '", path, "' for writing");
    os.write(kMagic, 8);
    put_u32(os, kVersion);
    put_u8(os, m.kind() == ModelKind::Hourglass ? 0 : 1);
    if (m.kind() == ModelKind::Hourglass) {
        const HourglassConfig& c = m.hourglass_config();
        put_i32(os, c.levels);
        put_i32(os, c.width);
        put_i32(os, c.blocks_per_level);
        put_i32(os, c.skip_channels);
        put_i32(os, c.kernel);
        put_u8(os, c.upsample == UpsampleMode::Nearest ? 0 : 1);
        put_u8(os, static_cast<uint8_t>(c.act));
        put_f32(os, c.act_param);
        put_i32(os, c.in_channels);
        put_i32(os, c.out_channels);
    } else {
        const FlatMlpConfig& c = m.flat_config();
        put_i32(os, c.depth);
        put_i32(os, c.width);
        put_i32(os, c.in_channels);
        put_i32(os, c.out_channels);
        put_u8(os, static_cast<uint8_t>(c.act));
        put_f32(os, c.act_param);
    }
    const auto params = m.parameters();
    put_u32(os, static_cast<uint32_t>(params.size()));
    for (const Parameter& p : params) {
        put_u32(os, static_cast<uint32_t>(p.name.size()));
        os.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
        const Shape& s = p.tensor.shape();
        put_u32(os, static_cast<uint32_t>(s.size()));
        for (int d : s) put_i32(os, d);
        for (float v : p.tensor.data()) put_f32(os, v);
    }
    check(os.good(), "write to '", path, "' failed");
}

Model load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    check(is.good(), "cannot open checkpoint '", path, "'");
    char magic[8];
    is.read(magic, 8);
    check(static_cast<bool>(is) && std::memcmp(magic, kMagic, 8) == 0,
          "'", path, "' is not a model checkpoint");
    const uint32_t version = get_u32(is);
    check(version == kVersion, "unsupported checkpoint version ", version);
    const uint8_t kind = get_u8(is);
    Model m;
    if (kind == 0) {
        HourglassConfig c;
        c.levels = get_i32(is);
        c.width = get_i32(is);
        c.blocks_per_level = get_i32(is);
        c.skip_channels = get_i32(is);
        c.kernel = get_i32(is);
        c.upsample = get_u8(is) == 0 ? UpsampleMode::Nearest : UpsampleMode::Bilinear;
        c.act = static_cast<ActivationKind>(get_u8(is));
        c.act_param = get_f32(is);
        c.in_channels = get_i32(is);
        c.out_channels = get_i32(is);
        m = build_hourglass(c, 0);
    } else {
        FlatMlpConfig c;
        c.depth = get_i32(is);
        c.width = get_i32(is);
        c.in_channels = get_i32(is);
        c.out_channels = get_i32(is);
        c.act = static_cast<ActivationKind>(get_u8(is));
        c.act_param = get_f32(is);
        m = build_flat_mlp(c, 0);
    }
    auto params = m.parameters();
    const uint32_t n = get_u32(is);
    check(n == params.size(), "checkpoint has ", n, " parameters, model expects ", params.size());
    for (Parameter& p : params) {
        const uint32_t name_len = get_u32(is);
        std::string name(name_len, '\0');
        is.read(name.data(), name_len);
        check(name == p.name, "checkpoint parameter '", name, "' does not match model '", p.name,
              "'");
        const uint32_t ndim = get_u32(is);
        Shape s(ndim);
        for (uint32_t i = 0; i < ndim; ++i) s[i] = get_i32(is);
        check(s == p.tensor.shape(), "checkpoint shape ", shape_str(s), " for '", name,
              "' does not match model ", shape_str(p.tensor.shape()));
        for (float& v : p.tensor.data()) v = get_f32(is);
    }
    check(static_cast<bool>(is), "checkpoint truncated");
    return m;
}

}  // namespace pip
