#include "cellsynth/png_io.hpp"

#include <png.h>

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <vector>

#include "cellsynth/common.hpp"

namespace cellsynth::io {
namespace {

struct FileCloser {
    void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
    FilePtr f(std::fopen(path.c_str(), mode));
    if (!f) {
        if (mode[0] == 'r') throw ValidationError("cannot open " + path.string());
        throw Error("cannot write " + path.string());
    }
    return f;
}

[[noreturn]] void png_error_fn(png_structp, png_const_charp msg) { throw ValidationError(std::string("png: ") + msg); }
void png_warning_fn(png_structp, png_const_charp) {}

template <class Pixel>
void write_png_impl(const std::filesystem::path& path, const Image<Pixel>& image, int depth) {
    auto file = open_file(path, "wb");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_fn, png_warning_fn);
    png_infop info = png_create_info_struct(png);
    struct Guard {
        png_structp* p;
        png_infop* i;
        ~Guard() { png_destroy_write_struct(p, i); }
    } guard{&png, &info};

    png_init_io(png, file.get());
    png_set_IHDR(png, info, image.width(), image.height(), depth, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<png_byte> row(static_cast<std::size_t>(image.width()) * (depth / 8));
    for (int y = 0; y < image.height(); ++y) {
        for (int x = 0; x < image.width(); ++x) {
            if (depth == 16) {
                // PNG stores 16-bit samples big-endian.
                const auto v = static_cast<std::uint16_t>(image(x, y));
                row[2 * x] = static_cast<png_byte>(v >> 8);
                row[2 * x + 1] = static_cast<png_byte>(v & 0xff);
            } else {
                row[x] = static_cast<png_byte>(image(x, y));
            }
        }
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
}

}  // namespace

GrayRaster read_png(const std::filesystem::path& path) {
    auto file = open_file(path, "rb");
    png_byte sig[8];
    if (std::fread(sig, 1, 8, file.get()) != 8 || png_sig_cmp(sig, 0, 8))
        throw ValidationError(path.string() + " is not a PNG file");

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_fn, png_warning_fn);
    png_infop info = png_create_info_struct(png);
    struct Guard {
        png_structp* p;
        png_infop* i;
        ~Guard() { png_destroy_read_struct(p, i, nullptr); }
    } guard{&png, &info};

    png_init_io(png, file.get());
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);
    const int color = png_get_color_type(png, info);
    int depth = png_get_bit_depth(png, info);
    if (color != PNG_COLOR_TYPE_GRAY) throw ValidationError(path.string() + ": only grayscale PNG is supported");
    if (depth < 8) {
        png_set_expand_gray_1_2_4_to_8(png);
        depth = 8;
    }
    png_read_update_info(png, info);

    GrayRaster out;
    out.bit_depth = depth;
    const int w = static_cast<int>(png_get_image_width(png, info));
    const int h = static_cast<int>(png_get_image_height(png, info));
    out.pixels = Image<std::uint16_t>(w, h);
    std::vector<png_byte> row(png_get_rowbytes(png, info));
    for (int y = 0; y < h; ++y) {
        png_read_row(png, row.data(), nullptr);
        for (int x = 0; x < w; ++x)
            out.pixels(x, y) = depth == 16 ? static_cast<std::uint16_t>((row[2 * x] << 8) | row[2 * x + 1]) : row[x];
    }
    return out;
}

void write_png16(const std::filesystem::path& path, const Image<std::uint16_t>& image) {
    write_png_impl(path, image, 16);
}

void write_png8(const std::filesystem::path& path, const Image<std::uint8_t>& image) { write_png_impl(path, image, 8); }

ImageF read_png_normalized(const std::filesystem::path& path) {
    const GrayRaster raster = read_png(path);
    ImageF out(raster.pixels.width(), raster.pixels.height());
    for (std::size_t i = 0; i < out.size(); ++i) out.pixels()[i] = raster.pixels.pixels()[i] / raster.max_code();
    return out;
}

Image<std::uint16_t> to_u16(const ImageF& image) {
    Image<std::uint16_t> out(image.width(), image.height());
    for (std::size_t i = 0; i < image.size(); ++i)
        out.pixels()[i] = static_cast<std::uint16_t>(std::lround(std::clamp(image.pixels()[i], 0.0, 1.0) * 65535.0));
    return out;
}

ImageF read_pfm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open " + path.string());
    std::string magic;
    int w = 0, h = 0;
    double scale = 0.0;
    in >> magic >> w >> h >> scale;
    in.get();
    if (magic != "Pf" || w <= 0 || h <= 0 || scale == 0.0)
        throw ValidationError(path.string() + ": not a grayscale PFM file");
    const bool little = scale < 0.0;
    ImageF out(w, h);
    std::vector<char> buf(static_cast<std::size_t>(w) * 4);
    for (int row = 0; row < h; ++row) {
        if (!in.read(buf.data(), static_cast<std::streamsize>(buf.size())))
            throw ValidationError(path.string() + ": truncated PFM data");
        const int y = h - 1 - row;  // PFM rows run bottom to top
        for (int x = 0; x < w; ++x) {
            std::uint32_t bits = 0;
            for (int b = 0; b < 4; ++b) {
                const auto byte = static_cast<std::uint8_t>(buf[4 * x + (little ? b : 3 - b)]);
                bits |= static_cast<std::uint32_t>(byte) << (8 * b);
            }
            out(x, y) = std::bit_cast<float>(bits);
        }
    }
    return out;
}

void write_pfm(const std::filesystem::path& path, const ImageF& image) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << "Pf\n" << image.width() << ' ' << image.height() << "\n-1.0\n";
    for (int row = 0; row < image.height(); ++row) {
        const int y = image.height() - 1 - row;
        for (int x = 0; x < image.width(); ++x) {
            const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(image(x, y)));
            for (int b = 0; b < 4; ++b) out.put(static_cast<char>((bits >> (8 * b)) & 0xff));
        }
    }
}

}  // namespace cellsynth::io
