#include "pip/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <memory>

namespace pip {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

float byte_to_unit(png_byte b) { return static_cast<float>(b) / 255.0f; }

png_byte unit_to_byte(float v) {
    const float c = std::min(1.0f, std::max(0.0f, v));
    return static_cast<png_byte>(std::lround(c * 255.0f));
}

}  // namespace

Tensor load_png(const std::string& path, std::vector<std::string>* warnings) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    check<ConfigError>(fp != nullptr, "cannot open '", path, "'");

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    check(png != nullptr, "libpng init failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw Error("libpng info init failed");
    }
    std::vector<png_bytep> rows;
    std::vector<png_byte> pixels;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw ConfigError(format_msg("'", path, "' is not a readable PNG"));
    }
    png_init_io(png, fp.get());
    png_read_info(png, info);

    const png_uint_32 W = png_get_image_width(png, info);
    const png_uint_32 H = png_get_image_height(png, info);
    const png_byte color = png_get_color_type(png, info);
    const png_byte depth = png_get_bit_depth(png, info);

    if (warnings) {
        if (depth == 16) warnings->push_back(path + ": 16-bit PNG converted to 8-bit RGB");
        if (color == PNG_COLOR_TYPE_PALETTE)
            warnings->push_back(path + ": palette PNG converted to 8-bit RGB");
        if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA)
            warnings->push_back(path + ": grayscale PNG converted to 8-bit RGB");
        if (color & PNG_COLOR_MASK_ALPHA) warnings->push_back(path + ": alpha channel dropped");
    }

    // Normalize everything to 8-bit RGB.
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (depth == 16) png_set_strip_16(png);
    if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA)
        png_set_gray_to_rgb(png);
    png_set_strip_alpha(png);
    png_read_update_info(png, info);

    const size_t row_bytes = png_get_rowbytes(png, info);
    check(row_bytes == static_cast<size_t>(W) * 3, "unexpected PNG row size after conversion");
    pixels.resize(row_bytes * H);
    rows.resize(H);
    for (png_uint_32 y = 0; y < H; ++y) rows[y] = pixels.data() + y * row_bytes;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    const int64_t P = static_cast<int64_t>(H) * W;
    std::vector<float> data(static_cast<size_t>(3) * P);
    for (png_uint_32 y = 0; y < H; ++y)
        for (png_uint_32 x = 0; x < W; ++x) {
            const png_byte* px = pixels.data() + y * row_bytes + x * 3;
            const int64_t p = static_cast<int64_t>(y) * W + x;
            data[static_cast<size_t>(p)] = byte_to_unit(px[0]);
            data[static_cast<size_t>(P + p)] = byte_to_unit(px[1]);
            data[static_cast<size_t>(2 * P + p)] = byte_to_unit(px[2]);
        }
    return Tensor::from_data({3, static_cast<int>(H), static_cast<int>(W)}, std::move(data));
}

void save_png(const Tensor& image, const std::string& path) {
    check(image.ndim() == 3 && (image.dim(0) == 3 || image.dim(0) == 1),
          "save_png expects a 1xHxW or 3xHxW tensor, got ", shape_str(image.shape()));
    const int C = image.dim(0), H = image.dim(1), W = image.dim(2);
    const int64_t P = static_cast<int64_t>(H) * W;

    FilePtr fp(std::fopen(path.c_str(), "wb"));
    check<ConfigError>(fp != nullptr, "cannot open '", path, "' for writing");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    check(png != nullptr, "libpng init failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw Error("libpng info init failed");
    }
    std::vector<png_byte> row(static_cast<size_t>(W) * 3);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw Error(format_msg("PNG write to '", path, "' failed"));
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(W), static_cast<png_uint_32>(H), 8,
                 PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    const auto& d = image.data();
    for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; ++x) {
            const int64_t p = static_cast<int64_t>(y) * W + x;
            for (int c = 0; c < 3; ++c)
                row[static_cast<size_t>(x) * 3 + c] =
                    unit_to_byte(d[static_cast<size_t>((C == 1 ? 0 : c) * P + p)]);
        }
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

FrameSequence load_frames(const std::string& dir, std::vector<std::string>* warnings) {
    namespace fs = std::filesystem;
    check<ConfigError>(fs::is_directory(dir), "'", dir, "' is not a directory");
    std::vector<std::string> paths;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".png") paths.push_back(e.path().string());
    std::sort(paths.begin(), paths.end());
    check<ConfigError>(!paths.empty(), "no .png frames in '", dir, "'");
    FrameSequence seq;
    for (const std::string& p : paths) {
        Tensor f = load_png(p, warnings);
        if (!seq.frames.empty())
            check<ConfigError>(f.shape() == seq.frames.front().shape(), "frame '", p,
                               "' has size ", shape_str(f.shape()), " but earlier frames are ",
                               shape_str(seq.frames.front().shape()));
        seq.frames.push_back(std::move(f));
    }
    return seq;
}

void save_frames(const FrameSequence& seq, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    char name[32];
    for (size_t i = 0; i < seq.frames.size(); ++i) {
        std::snprintf(name, sizeof name, "frame_%04zu.png", i);
        save_png(seq.frames[i], (fs::path(dir) / name).string());
    }
}

}  // namespace pip
