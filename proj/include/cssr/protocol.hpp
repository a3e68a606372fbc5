#pragma once

// CSSR backend wire format, version 1.
//
//   offset  size  field
//   0       4     magic "CSSR"
//   4       1     version (1)
//   5       1     message type
//   6       4     payload length, u32 little-endian
//   10      n     payload
//
// HELLO carries no payload. CAPS: u8 scale count, that many u8 scales,
// u32 max width, u32 max height. SR_REQUEST / SR_RESPONSE: u8 scale,
// u8 channels, u32 width, u32 height, then width*height*channels binary32
// floats, planar. ERROR: UTF-8 message. All integers and floats little-endian.

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cssr/image.hpp"

namespace cssr::protocol {

inline constexpr std::array<std::uint8_t, 4> kMagic = {'C', 'S', 'S', 'R'};
inline constexpr std::uint8_t kVersion = 1;
inline constexpr std::size_t kHeaderSize = 10;
inline constexpr std::uint32_t kMaxPayload = 1u << 30;

enum class MessageType : std::uint8_t {
  Hello = 1,
  Caps = 2,
  SrRequest = 3,
  SrResponse = 4,
  Error = 5,
};

const char* to_string(MessageType t) noexcept;

struct Frame {
  MessageType type = MessageType::Hello;
  std::vector<std::uint8_t> payload;

  friend bool operator==(const Frame&, const Frame&) = default;
};

struct FrameHeader {
  MessageType type;
  std::uint32_t payload_len;
};

std::vector<std::uint8_t> encode_frame(const Frame& frame);

/// Validates magic, version and type. Throws BackendError(Protocol).
FrameHeader decode_header(std::span<const std::uint8_t> header);

/// Decodes exactly one frame occupying all of `bytes`.
Frame decode_frame(std::span<const std::uint8_t> bytes);

struct Capabilities {
  std::vector<std::uint8_t> scales;
  std::uint32_t max_width = 0;
  std::uint32_t max_height = 0;

  bool supports(int scale) const noexcept;
  friend bool operator==(const Capabilities&, const Capabilities&) = default;
};

std::vector<std::uint8_t> encode_caps(const Capabilities& caps);
Capabilities decode_caps(std::span<const std::uint8_t> payload);

struct ImagePayload {
  int scale = 1;
  Image image;  // RGB or Gray
};

/// YCbCr images are rejected; the wire only carries RGB or Gray.
std::vector<std::uint8_t> encode_image_payload(const Image& img, int scale);
ImagePayload decode_image_payload(std::span<const std::uint8_t> payload);

Frame make_error(const std::string& message);

}  // namespace cssr::protocol
