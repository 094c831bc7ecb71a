#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cellfree::codec {

std::string base64_encode(std::span<const std::uint8_t> bytes);
/// Throws std::invalid_argument on malformed input.
std::vector<std::uint8_t> base64_decode(std::string_view text);

/// Little-endian IEEE-754 float64 packing, independent of host byte order.
std::string pack_f64_le(std::span<const double> values);
std::vector<double> unpack_f64_le(std::string_view base64_text);

}  // namespace cellfree::codec
