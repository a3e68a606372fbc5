// Test-only SR server speaking the backend protocol on stdin/stdout.
//
//   cssr_fake_backend [--mode M] [--scales 2,4] [--max-dim N]
//
// Modes: echo (returns the input, advertises scale 1), nearest, bicubic,
// and fault injections: bad-version, bad-magic, silent, die-after-hello,
// error, slow, wrong-shape, die-on-request.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstring>
#include <string>
#include <thread>
#include <vector>

#include "cssr/error.hpp"
#include "cssr/operators.hpp"
#include "cssr/protocol.hpp"

using namespace cssr;
namespace proto = cssr::protocol;

namespace {

bool read_exact(void* buf, std::size_t n) {
  return std::fread(buf, 1, n, stdin) == n;
}

void write_bytes(const std::vector<std::uint8_t>& bytes) {
  std::fwrite(bytes.data(), 1, bytes.size(), stdout);
  std::fflush(stdout);
}

void send(const proto::Frame& f) { write_bytes(proto::encode_frame(f)); }

bool receive(proto::Frame& out) {
  std::uint8_t header[proto::kHeaderSize];
  if (!read_exact(header, sizeof header)) return false;
  const proto::FrameHeader h = proto::decode_header(header);
  out.type = h.type;
  out.payload.resize(h.payload_len);
  return h.payload_len == 0 || read_exact(out.payload.data(), h.payload_len);
}

}  // namespace

int main(int argc, char** argv) {
  std::string mode = "nearest";
  std::vector<std::uint8_t> scales;
  std::uint32_t max_dim = 4096;
  for (int i = 1; i + 1 < argc; i += 2) {
    const std::string key = argv[i];
    const std::string val = argv[i + 1];
    if (key == "--mode") {
      mode = val;
    } else if (key == "--scales") {
      for (std::size_t at = 0; at < val.size();) {
        const std::size_t comma = val.find(',', at);
        scales.push_back(static_cast<std::uint8_t>(std::stoi(val.substr(at, comma - at))));
        at = comma == std::string::npos ? val.size() : comma + 1;
      }
    } else if (key == "--max-dim") {
      max_dim = static_cast<std::uint32_t>(std::stoul(val));
    } else {
      std::fprintf(stderr, "fake backend: unknown flag %s\n", key.c_str());
      return 2;
    }
  }
  if (scales.empty()) scales = mode == "echo" ? std::vector<std::uint8_t>{1} : std::vector<std::uint8_t>{2, 4};

  try {
    proto::Frame req;
    if (!receive(req) || req.type != proto::MessageType::Hello) return 1;
    if (mode == "silent") {
      std::this_thread::sleep_for(std::chrono::seconds(30));
      return 0;
    }
    if (mode == "die-after-hello") return 0;

    auto caps = proto::encode_frame({proto::MessageType::Caps,
                                     proto::encode_caps({scales, max_dim, max_dim})});
    if (mode == "bad-version") caps[4] = 2;
    if (mode == "bad-magic") caps[0] = 'X';
    write_bytes(caps);

    while (receive(req)) {
      if (req.type != proto::MessageType::SrRequest) {
        send(proto::make_error("expected SR_REQUEST"));
        continue;
      }
      const proto::ImagePayload in = proto::decode_image_payload(req.payload);
      const bool advertised =
          std::find(scales.begin(), scales.end(), in.scale) != scales.end();
      if (!advertised) {
        send(proto::make_error("unsupported scale " + std::to_string(in.scale)));
        continue;
      }
      if (mode == "error") {
        send(proto::make_error("model exploded"));
        continue;
      }
      if (mode == "slow") {
        std::this_thread::sleep_for(std::chrono::seconds(30));
        continue;
      }
      if (mode == "die-on-request") return 0;

      Image out;
      if (mode == "echo" || mode == "wrong-shape") {
        out = in.image;
      } else if (mode == "bicubic") {
        out = super_resolve(in.image, {SrKind::Bicubic, in.scale, nullptr});
      } else {
        out = super_resolve(in.image, {SrKind::Nearest, in.scale, nullptr});
      }
      send({proto::MessageType::SrResponse, proto::encode_image_payload(out, in.scale)});
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "fake backend: %s\n", e.what());
    return 1;
  }
  return 0;
}
