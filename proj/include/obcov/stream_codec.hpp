#pragma once

#include "obcov/quantize.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace obcov {

// .obcv layout, all little-endian:
//
//   "OBCV" | version u16 | policy u8 | scale kind u8 (0 scalar, 1 vector)
//   | p u32 | n u32 | header_param f64
//
// followed by n records of
//
//   y (ceil(p/8) bytes) | y_bar (ceil(p/8) bytes) | scale (1 or p f64)

inline constexpr std::uint16_t kStreamFormatVersion = 1;
inline constexpr std::size_t kStreamHeaderBytes = 24;

/// Throws InvalidArgument if the stream does not validate.
std::vector<std::uint8_t> encode_stream(const SampleStream& stream);

/// Throws BadMagic, UnsupportedVersion or TruncatedStream on malformed
/// input, InvalidArgument on trailing bytes or inconsistent fields.
SampleStream decode_stream(std::span<const std::uint8_t> bytes);

void write_stream_file(const std::filesystem::path& path, const SampleStream& stream);
SampleStream read_stream_file(const std::filesystem::path& path);

} // namespace obcov
