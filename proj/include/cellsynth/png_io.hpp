#pragma once

#include <cstdint>
#include <filesystem>

#include "cellsynth/image.hpp"

namespace cellsynth::io {

/// Grayscale raster as stored on disk.
struct GrayRaster {
    Image<std::uint16_t> pixels;
    int bit_depth = 16;  ///< 8 or 16

    double max_code() const { return bit_depth == 8 ? 255.0 : 65535.0; }
};

/// Reads 8- or 16-bit grayscale PNG (palette/RGB/alpha rejected, lower depths expanded to 8).
GrayRaster read_png(const std::filesystem::path& path);
void write_png16(const std::filesystem::path& path, const Image<std::uint16_t>& image);
void write_png8(const std::filesystem::path& path, const Image<std::uint8_t>& image);

/// Pixel values scaled to [0, 1] by the maximum code value.
ImageF read_png_normalized(const std::filesystem::path& path);

/// Round-to-nearest 16-bit encoding of [0,1] values (clamped).
Image<std::uint16_t> to_u16(const ImageF& image);

/// Single-channel portable float map ("Pf").
ImageF read_pfm(const std::filesystem::path& path);
void write_pfm(const std::filesystem::path& path, const ImageF& image);

}  // namespace cellsynth::io
