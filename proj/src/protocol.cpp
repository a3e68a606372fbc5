#include "cssr/protocol.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <limits>

#include "cssr/error.hpp"

namespace cssr::protocol {

static_assert(std::numeric_limits<float>::is_iec559, "wire floats are IEEE-754 binary32");

namespace {

[[noreturn]] void fail(const std::string& what) {
  throw BackendError(BackendErrorKind::Protocol, what);
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(std::span<const std::uint8_t> in, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in[at + i]) << (8 * i);
  return v;
}

bool known_type(std::uint8_t t) { return t >= 1 && t <= 5; }

}  // namespace

const char* to_string(MessageType t) noexcept {
  switch (t) {
    case MessageType::Hello: return "HELLO";
    case MessageType::Caps: return "CAPS";
    case MessageType::SrRequest: return "SR_REQUEST";
    case MessageType::SrResponse: return "SR_RESPONSE";
    case MessageType::Error: return "ERROR";
  }
  return "UNKNOWN";
}

std::vector<std::uint8_t> encode_frame(const Frame& frame) {
  if (frame.payload.size() > kMaxPayload) fail("payload too large to encode");
  std::vector<std::uint8_t> out(kMagic.begin(), kMagic.end());
  out.reserve(kHeaderSize + frame.payload.size());
  out.push_back(kVersion);
  out.push_back(static_cast<std::uint8_t>(frame.type));
  put_u32(out, static_cast<std::uint32_t>(frame.payload.size()));
  out.insert(out.end(), frame.payload.begin(), frame.payload.end());
  return out;
}

FrameHeader decode_header(std::span<const std::uint8_t> header) {
  if (header.size() < kHeaderSize) fail("short frame header");
  if (!std::equal(kMagic.begin(), kMagic.end(), header.begin())) fail("bad magic");
  if (header[4] != kVersion) {
    fail("unsupported protocol version " + std::to_string(header[4]));
  }
  if (!known_type(header[5])) fail("unknown message type " + std::to_string(header[5]));
  const std::uint32_t len = get_u32(header, 6);
  if (len > kMaxPayload) fail("payload length " + std::to_string(len) + " exceeds limit");
  return {static_cast<MessageType>(header[5]), len};
}

Frame decode_frame(std::span<const std::uint8_t> bytes) {
  const FrameHeader h = decode_header(bytes);
  if (bytes.size() != kHeaderSize + h.payload_len) {
    fail("frame length " + std::to_string(bytes.size()) + " does not match header " +
         std::to_string(kHeaderSize + h.payload_len));
  }
  return {h.type, std::vector<std::uint8_t>(bytes.begin() + kHeaderSize, bytes.end())};
}

bool Capabilities::supports(int scale) const noexcept {
  return std::find(scales.begin(), scales.end(), scale) != scales.end();
}

std::vector<std::uint8_t> encode_caps(const Capabilities& caps) {
  if (caps.scales.size() > 255) fail("too many scales");
  std::vector<std::uint8_t> out;
  out.push_back(static_cast<std::uint8_t>(caps.scales.size()));
  out.insert(out.end(), caps.scales.begin(), caps.scales.end());
  put_u32(out, caps.max_width);
  put_u32(out, caps.max_height);
  return out;
}

Capabilities decode_caps(std::span<const std::uint8_t> payload) {
  if (payload.empty()) fail("empty CAPS payload");
  const std::size_t count = payload[0];
  if (payload.size() != 1 + count + 8) {
    fail("CAPS payload is " + std::to_string(payload.size()) + " bytes, expected " +
         std::to_string(1 + count + 8));
  }
  Capabilities caps;
  caps.scales.assign(payload.begin() + 1, payload.begin() + 1 + count);
  caps.max_width = get_u32(payload, 1 + count);
  caps.max_height = get_u32(payload, 5 + count);
  return caps;
}

std::vector<std::uint8_t> encode_image_payload(const Image& img, int scale) {
  if (img.color_space() == ColorSpace::YCbCr) {
    throw ContractError("wire images must be RGB or Gray");
  }
  if (scale < 1 || scale > 255) throw ContractError("scale must fit in u8");
  std::vector<std::uint8_t> out;
  out.reserve(10 + img.samples().size() * 4);
  out.push_back(static_cast<std::uint8_t>(scale));
  out.push_back(static_cast<std::uint8_t>(img.channels()));
  put_u32(out, static_cast<std::uint32_t>(img.width()));
  put_u32(out, static_cast<std::uint32_t>(img.height()));
  for (float v : img.samples()) put_u32(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

ImagePayload decode_image_payload(std::span<const std::uint8_t> payload) {
  if (payload.size() < 10) fail("image payload shorter than its 10-byte header");
  const int scale = payload[0];
  const int channels = payload[1];
  const std::uint32_t w = get_u32(payload, 2);
  const std::uint32_t h = get_u32(payload, 6);
  if (channels != 1 && channels != 3) fail("unsupported channel count " + std::to_string(channels));
  if (w == 0 || h == 0 || w > 0x7FFFFFFFu || h > 0x7FFFFFFFu) fail("invalid image dimensions");
  const std::uint64_t count = std::uint64_t{w} * h * static_cast<std::uint64_t>(channels);
  if (payload.size() - 10 != count * 4) {
    fail("image data is " + std::to_string(payload.size() - 10) + " bytes, expected " +
         std::to_string(count * 4));
  }
  std::vector<float> samples(count);
  for (std::size_t i = 0; i < count; ++i) {
    samples[i] = std::bit_cast<float>(get_u32(payload, 10 + 4 * i));
  }
  const ColorSpace cs = channels == 1 ? ColorSpace::Gray : ColorSpace::Rgb;
  return {scale, Image(static_cast<int>(w), static_cast<int>(h), cs, std::move(samples))};
}

Frame make_error(const std::string& message) {
  return {MessageType::Error, std::vector<std::uint8_t>(message.begin(), message.end())};
}

}  // namespace cssr::protocol
