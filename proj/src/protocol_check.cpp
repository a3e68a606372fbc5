#include <cmath>
#include <ostream>

#include "cssr/bench.hpp"
#include "cssr/error.hpp"

namespace cssr::bench {

namespace {

class Checker {
 public:
  explicit Checker(std::ostream& out) : out_(out) {}

  void pass(const std::string& name, const std::string& detail = {}) {
    out_ << "PASS " << name << (detail.empty() ? "" : ": " + detail) << "\n";
  }
  void fail(const std::string& name, const std::string& detail) {
    out_ << "FAIL " << name << ": " << detail << "\n";
    ok_ = false;
  }
  bool ok() const { return ok_; }

 private:
  std::ostream& out_;
  bool ok_ = true;
};

int first_unadvertised_scale(const protocol::Capabilities& caps) {
  for (int s = 2; s < 256; ++s) {
    if (!caps.supports(s)) return s;
  }
  return 0;
}

}  // namespace

int protocol_check(const std::string& command, const backend::Timeouts& timeouts,
                   std::ostream& out) {
  Checker check(out);
  std::shared_ptr<backend::BackendClient> client;
  try {
    client = backend::BackendClient::launch(command, timeouts);
  } catch (const BackendError& e) {
    check.fail("handshake", e.what());
    return kExitBackend;
  }
  backend::Session& session = client->session();
  const protocol::Capabilities caps = session.capabilities();
  {
    std::string scales;
    for (auto s : caps.scales) scales += (scales.empty() ? "" : ",") + std::to_string(s);
    check.pass("handshake", "scales {" + scales + "}, max " + std::to_string(caps.max_width) +
                                "x" + std::to_string(caps.max_height));
  }
  if (caps.scales.empty()) {
    check.fail("capabilities", "backend advertises no scales");
    return kExitBackend;
  }

  try {
    std::uint64_t seed = 1;
    for (const auto scale : caps.scales) {
      for (const ColorSpace cs : {ColorSpace::Rgb, ColorSpace::Gray}) {
        const Image probe = random_image(8, 6, cs, seed++);
        const std::string name = "echo-shape scale " + std::to_string(scale) + " " + to_string(cs);
        const Image reply = session.super_resolve(probe, scale);
        if (!all_finite(reply)) {
          check.fail(name, "non-finite samples in response");
        } else {
          check.pass(name, std::to_string(reply.width()) + "x" + std::to_string(reply.height()));
        }
      }
    }

    if (const int bad = first_unadvertised_scale(caps); bad != 0) {
      const std::string name = "error-path unsupported scale " + std::to_string(bad);
      const protocol::Frame reply = session.round_trip(
          {protocol::MessageType::SrRequest,
           protocol::encode_image_payload(random_image(4, 4, ColorSpace::Rgb, 99), bad)});
      if (reply.type == protocol::MessageType::Error) {
        check.pass(name, "ERROR \"" + std::string(reply.payload.begin(), reply.payload.end()) + "\"");
      } else {
        check.fail(name, std::string("expected ERROR, got ") + protocol::to_string(reply.type));
      }
    }

    const Image after = session.super_resolve(random_image(5, 5, ColorSpace::Rgb, 7),
                                              caps.scales.front());
    check.pass("recovery after error", std::to_string(after.width()) + "x" +
                                           std::to_string(after.height()));
  } catch (const BackendError& e) {
    check.fail("request", e.what());
    return kExitBackend;
  }
  return check.ok() ? kExitOk : kExitBackend;
}

}  // namespace cssr::bench
