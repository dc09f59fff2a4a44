#include "musinger/wire/codec.hpp"

#include <cmath>
#include <string>

#include "musinger/core/error.hpp"

namespace musinger::wire {

namespace {

constexpr std::array<std::uint16_t, 256> make_crc_table() {
  std::array<std::uint16_t, 256> table{};
  for (std::uint32_t i = 0; i < 256; ++i) {
    std::uint16_t crc = static_cast<std::uint16_t>(i << 8);
    for (int bit = 0; bit < 8; ++bit)
      crc = (crc & 0x8000) ? static_cast<std::uint16_t>((crc << 1) ^ 0x1021)
                           : static_cast<std::uint16_t>(crc << 1);
    table[i] = crc;
  }
  return table;
}

constexpr auto kCrcTable = make_crc_table();

template <typename T>
void put_be(std::uint8_t* dst, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i)
    dst[i] = static_cast<std::uint8_t>(value >> (8 * (sizeof(T) - 1 - i)));
}

template <typename T>
T get_be(const std::uint8_t* src) {
  T value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) value = static_cast<T>((value << 8) | src[i]);
  return value;
}

}  // namespace

std::uint16_t crc16_ccitt_false(std::span<const std::uint8_t> bytes) noexcept {
  std::uint16_t crc = 0xFFFF;
  for (std::uint8_t b : bytes)
    crc = static_cast<std::uint16_t>((crc << 8) ^ kCrcTable[((crc >> 8) ^ b) & 0xFF]);
  return crc;
}

Datagram encode_frame(const ForceFrame& frame, bool end_of_stream) {
  Datagram out{};
  out[0] = kMagic0;
  out[1] = kMagic1;
  out[2] = kVersion;
  out[3] = end_of_stream ? kFlagEndOfStream : 0;
  put_be<std::uint32_t>(&out[4], frame.seq);
  put_be<std::uint64_t>(&out[8], frame.timestamp_us);
  for (std::size_t ch = 0; ch < kChannels; ++ch) {
    const double f = frame.forces[ch];
    if (!(f >= 0.0 && f <= kFullScaleN))
      throw Error(Errc::Range, "force on channel " + std::to_string(ch + 1) +
                                   " outside [0, 10] N: " + std::to_string(f));
    put_be<std::uint16_t>(&out[16 + 2 * ch], static_cast<std::uint16_t>(std::lround(f * 1000.0)));
  }
  put_be<std::uint16_t>(&out[22], crc16_ccitt_false(std::span(out.data(), 22)));
  return out;
}

DecodeStatus try_decode_frame(std::span<const std::uint8_t> bytes, DecodedFrame& out) noexcept {
  if (bytes.size() != kDatagramSize) return DecodeStatus::FrameLength;
  const std::uint8_t* p = bytes.data();
  if (p[0] != kMagic0 || p[1] != kMagic1 || p[2] != kVersion || (p[3] & ~kFlagEndOfStream) != 0)
    return DecodeStatus::BadHeader;
  if (crc16_ccitt_false(bytes.first(22)) != get_be<std::uint16_t>(p + 22))
    return DecodeStatus::Corrupt;

  DecodedFrame decoded;
  decoded.end_of_stream = (p[3] & kFlagEndOfStream) != 0;
  decoded.frame.seq = get_be<std::uint32_t>(p + 4);
  decoded.frame.timestamp_us = get_be<std::uint64_t>(p + 8);
  for (std::size_t ch = 0; ch < kChannels; ++ch) {
    const auto millinewtons = get_be<std::uint16_t>(p + 16 + 2 * ch);
    // A CRC-valid datagram from a foreign encoder can still carry > 10 N.
    if (millinewtons > 10000) return DecodeStatus::Corrupt;
    decoded.frame.forces[ch] = millinewtons / 1000.0;
  }
  out = decoded;
  return DecodeStatus::Ok;
}

DecodedFrame decode_frame(std::span<const std::uint8_t> bytes) {
  DecodedFrame out;
  switch (try_decode_frame(bytes, out)) {
    case DecodeStatus::Ok: return out;
    case DecodeStatus::FrameLength:
      throw Error(Errc::FrameLength, "datagram must be 24 bytes, got " + std::to_string(bytes.size()));
    case DecodeStatus::BadHeader: throw Error(Errc::BadHeader, "bad datagram magic/version/flags");
    case DecodeStatus::Corrupt: throw Error(Errc::Corrupt, "datagram CRC mismatch");
  }
  throw Error(Errc::Corrupt, "unreachable decode status");
}

}  // namespace musinger::wire
