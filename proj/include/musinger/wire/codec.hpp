#pragma once

#include <array>
#include <cstdint>
#include <span>

#include "musinger/core/types.hpp"

namespace musinger::wire {

// Datagram layout (all multi-byte fields big-endian):
//   0-1   magic 0x4D 0x53 ("MS")
//   2     version 0x01
//   3     flags, bit 0 = last frame of stream, other bits zero
//   4-7   seq (u32)
//   8-15  timestamp_us (u64)
//   16-21 three forces, u16 millinewtons each (0..10000)
//   22-23 CRC-16/CCITT-FALSE over bytes 0-21
inline constexpr std::size_t kDatagramSize = 24;
inline constexpr std::uint8_t kMagic0 = 0x4D;
inline constexpr std::uint8_t kMagic1 = 0x53;
inline constexpr std::uint8_t kVersion = 0x01;
inline constexpr std::uint8_t kFlagEndOfStream = 0x01;
inline constexpr std::uint16_t kDefaultPort = 47533;

using Datagram = std::array<std::uint8_t, kDatagramSize>;

/// CRC-16/CCITT-FALSE: poly 0x1021, init 0xFFFF, no reflection, no final xor.
std::uint16_t crc16_ccitt_false(std::span<const std::uint8_t> bytes) noexcept;

/// Throws Error(Errc::Range) when a force lies outside [0, 10] N. Forces are
/// rounded to the nearest millinewton.
Datagram encode_frame(const ForceFrame& frame, bool end_of_stream = false);

struct DecodedFrame {
  ForceFrame frame;
  bool end_of_stream = false;
};

enum class DecodeStatus { Ok, FrameLength, BadHeader, Corrupt };

/// Non-throwing decoder; `out` is written only on Ok.
DecodeStatus try_decode_frame(std::span<const std::uint8_t> bytes, DecodedFrame& out) noexcept;

/// Throwing decoder: Errc::FrameLength, Errc::BadHeader or Errc::Corrupt.
DecodedFrame decode_frame(std::span<const std::uint8_t> bytes);

}  // namespace musinger::wire
