#include <cmath>
#include <fstream>
#include <iterator>
#include <string>

#include "cssr/error.hpp"
#include "cssr/image.hpp"

namespace cssr {

namespace {

bool is_space(std::uint8_t c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}

// Netpbm header tokenizer: whitespace-separated decimal fields, '#' starts a
// comment that runs to the end of the line.
class HeaderReader {
 public:
  explicit HeaderReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  unsigned read_uint(const char* field) {
    skip_space_and_comments();
    const std::size_t start = pos_;
    unsigned long value = 0;
    while (pos_ < bytes_.size() && bytes_[pos_] >= '0' && bytes_[pos_] <= '9') {
      value = value * 10 + (bytes_[pos_] - '0');
      if (value > 0xFFFFFFu) throw ParseError(std::string(field) + " is too large", start);
      ++pos_;
    }
    if (pos_ == start) {
      throw ParseError(std::string("expected ") + field,
                       pos_ < bytes_.size() ? pos_ : bytes_.size());
    }
    return static_cast<unsigned>(value);
  }

  // Exactly one whitespace byte separates maxval from the raster.
  void read_raster_separator() {
    if (pos_ >= bytes_.size() || !is_space(bytes_[pos_])) {
      throw ParseError("expected single whitespace before raster", pos_);
    }
    ++pos_;
  }

  std::size_t pos() const noexcept { return pos_; }

 private:
  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (is_space(bytes_[pos_])) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n' && bytes_[pos_] != '\r') ++pos_;
      } else {
        break;
      }
    }
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 2;  // past the magic
};

std::uint8_t quantize(float v) {
  // NaN fails the comparison and lands on 0.
  const double x = v > 0.0f ? (v < 1.0f ? static_cast<double>(v) : 1.0) : 0.0;
  return static_cast<std::uint8_t>(std::round(x * 255.0));
}

}  // namespace

Image load_ppm(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6')) {
    throw ParseError("bad magic, expected P5 or P6", 0);
  }
  const ColorSpace cs = bytes[1] == '6' ? ColorSpace::Rgb : ColorSpace::Gray;

  HeaderReader header(bytes);
  const unsigned width = header.read_uint("width");
  const std::size_t height_offset = header.pos();
  const unsigned height = header.read_uint("height");
  const std::size_t maxval_offset = header.pos();
  const unsigned maxval = header.read_uint("maxval");
  if (width == 0) throw ParseError("width must be positive", height_offset);
  if (height == 0) throw ParseError("height must be positive", maxval_offset);
  if (maxval != 255) {
    throw ParseError("unsupported maxval " + std::to_string(maxval), maxval_offset);
  }
  header.read_raster_separator();

  const std::size_t plane = static_cast<std::size_t>(width) * height;
  const std::size_t channels = channel_count(cs);
  const std::size_t needed = plane * channels;
  const std::size_t start = header.pos();
  if (bytes.size() - start < needed) {
    throw ParseError("truncated raster: need " + std::to_string(needed) + " bytes, have " +
                         std::to_string(bytes.size() - start),
                     bytes.size());
  }

  // Netpbm stores pixels interleaved; Image is planar.
  std::vector<float> samples(needed);
  for (std::size_t i = 0; i < plane; ++i) {
    for (std::size_t c = 0; c < channels; ++c) {
      samples[c * plane + i] = static_cast<float>(bytes[start + i * channels + c] / 255.0);
    }
  }
  return Image(static_cast<int>(width), static_cast<int>(height), cs, std::move(samples));
}

std::vector<std::uint8_t> save_ppm(const Image& img) {
  if (img.color_space() == ColorSpace::YCbCr) {
    throw ContractError("save_ppm needs RGB or Gray; convert YCbCr first");
  }
  const bool rgb = img.color_space() == ColorSpace::Rgb;
  const std::string header = std::string(rgb ? "P6" : "P5") + "\n" +
                             std::to_string(img.width()) + " " +
                             std::to_string(img.height()) + "\n255\n";
  const std::size_t plane = img.plane_size();
  const std::size_t channels = img.channels();

  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.reserve(header.size() + plane * channels);
  for (std::size_t i = 0; i < plane; ++i) {
    for (std::size_t c = 0; c < channels; ++c) {
      out.push_back(quantize(img.samples()[c * plane + i]));
    }
  }
  return out;
}

Image read_ppm_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  try {
    return load_ppm(bytes);
  } catch (const ParseError& e) {
    throw DataError(path + ": " + e.what());
  }
}

void write_ppm_file(const std::string& path, const Image& img) {
  const auto bytes = save_ppm(img);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("short write to " + path);
}

}  // namespace cssr
