#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cellsynth::base64 {

std::string encode(std::span<const std::uint8_t> bytes);
/// Throws ValidationError on characters outside the standard alphabet or bad padding.
std::vector<std::uint8_t> decode(std::string_view text);

/// Little-endian IEEE-754 binary64 packing.
std::string encode_f64(std::span<const double> values);
std::vector<double> decode_f64(std::string_view text);

}  // namespace cellsynth::base64
