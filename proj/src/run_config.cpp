#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "cssr/bench.hpp"
#include "cssr/error.hpp"

namespace cssr::bench {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

template <class T>
T parse_number(std::string_view text, const char* what) {
  const std::string t = trim(text);
  T value{};
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
    throw ConfigError(std::string("invalid ") + what + ": '" + std::string(text) + "'");
  }
  if constexpr (std::is_floating_point_v<T>) {
    if (!std::isfinite(value)) throw ConfigError(std::string(what) + " must be finite");
  }
  return value;
}

// Shortest text that parses back to the same double.
std::string format_double(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

}  // namespace

DownsampleKind parse_downsample(std::string_view text) {
  const std::string t = lower(trim(text));
  if (t == "nearest") return DownsampleKind::Nearest;
  if (t == "bicubic") return DownsampleKind::Bicubic;
  throw ConfigError("unknown downsample kind '" + std::string(text) + "' (nearest|bicubic)");
}

CompressOp parse_compress(std::string_view text) {
  const std::string t = trim(text);
  CompressOp op;
  if (lower(t) == "identity") {
    op = IdentityCompress{};
  } else if (t.rfind("uniform:", 0) == 0) {
    op = UniformQuant{parse_number<float>(std::string_view(t).substr(8), "uniform step")};
  } else if (t.rfind("dct:", 0) == 0) {
    std::string_view rest = std::string_view(t).substr(4);
    DctQuant q;
    const auto comma = rest.find(',');
    q.quality = parse_number<int>(rest.substr(0, comma), "dct quality");
    if (comma != std::string_view::npos) {
      const std::string opt = trim(rest.substr(comma + 1));
      if (opt.rfind("sub=", 0) != 0) {
        throw ConfigError("unknown dct option '" + opt + "' (expected sub=<bool>)");
      }
      q.chroma_subsample = parse_bool(std::string_view(opt).substr(4));
    }
    op = q;
  } else {
    throw ConfigError("unknown compression '" + t + "' (identity|uniform:<step>|dct:<q>[,sub=<bool>])");
  }
  validate(op);
  return op;
}

SrSpec parse_sr(std::string_view text) {
  const std::string t = trim(text);
  if (t.rfind("external:", 0) == 0) {
    SrSpec spec{SrKind::External, trim(std::string_view(t).substr(9))};
    if (spec.command.empty()) throw ConfigError("external SR needs a command line");
    return spec;
  }
  const std::string l = lower(t);
  if (l == "nearest") return {SrKind::Nearest, {}};
  if (l == "bilinear") return {SrKind::Bilinear, {}};
  if (l == "bicubic") return {SrKind::Bicubic, {}};
  throw ConfigError("unknown SR kind '" + t + "' (nearest|bilinear|bicubic|external:<cmd>)");
}

LoopInit parse_init(std::string_view text) {
  const std::string t = lower(trim(text));
  if (t == "serial") return InitFromSerial{};
  if (t == "zero") return InitZero{};
  if (t.rfind("random:", 0) == 0) {
    return InitRandom{parse_number<std::uint64_t>(std::string_view(t).substr(7), "random seed")};
  }
  throw ConfigError("unknown init '" + std::string(text) + "' (serial|zero|random:<seed>)");
}

MetricsMode parse_metrics_mode(std::string_view text) {
  const std::string t = lower(trim(text));
  if (t == "rgb") return MetricsMode::Rgb;
  if (t == "y") return MetricsMode::Y;
  throw ConfigError("unknown metrics mode '" + std::string(text) + "' (rgb|y)");
}

bool parse_bool(std::string_view text) {
  const std::string t = lower(trim(text));
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  throw ConfigError("invalid boolean '" + std::string(text) + "'");
}

void apply_setting(RunConfig& cfg, std::string_view raw_key, std::string_view value) {
  std::string key = lower(trim(raw_key));
  std::replace(key.begin(), key.end(), '-', '_');

  if (key == "input_dir") {
    cfg.input_dir = trim(value);
  } else if (key == "output_dir") {
    cfg.output_dir = trim(value);
  } else if (key == "ds") {
    cfg.ds = parse_downsample(value);
  } else if (key == "cp") {
    cfg.cp = parse_compress(value);
  } else if (key == "sr") {
    cfg.sr = parse_sr(value);
  } else if (key == "scale") {
    cfg.scale = parse_number<int>(value, "scale");
  } else if (key == "lambda") {
    cfg.lambda = parse_number<double>(value, "lambda");
  } else if (key == "iters") {
    cfg.iters = parse_number<int>(value, "iters");
  } else if (key == "init") {
    cfg.init = parse_init(value);
  } else if (key == "clamp_each_iter") {
    cfg.clamp_each_iter = parse_bool(value);
  } else if (key == "early_stop_tol") {
    const std::string t = lower(trim(value));
    if (t.empty() || t == "none" || t == "off") {
      cfg.early_stop_tol.reset();
    } else {
      cfg.early_stop_tol = parse_number<double>(value, "early_stop_tol");
    }
  } else if (key == "metrics_mode") {
    cfg.metrics.mode = parse_metrics_mode(value);
  } else if (key == "metrics_8bit") {
    cfg.metrics.eight_bit = parse_bool(value);
  } else if (key == "shave") {
    cfg.metrics.shave = parse_number<int>(value, "shave");
  } else if (key == "dump_images") {
    cfg.dump_images = parse_bool(value);
  } else if (key == "dump_traces") {
    cfg.dump_traces = parse_bool(value);
  } else if (key == "dump_residuals") {
    cfg.dump_residuals = parse_bool(value);
  } else if (key == "jobs") {
    cfg.jobs = parse_number<int>(value, "jobs");
  } else if (key == "handshake_timeout") {
    cfg.handshake_timeout_s = parse_number<double>(value, "handshake_timeout");
  } else if (key == "request_timeout") {
    cfg.request_timeout_s = parse_number<double>(value, "request_timeout");
  } else {
    throw ConfigError("unknown setting '" + std::string(raw_key) + "'");
  }
}

void apply_config_file(RunConfig& cfg, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": expected key=value");
    }
    try {
      apply_setting(cfg, std::string_view(t).substr(0, eq), std::string_view(t).substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

std::vector<std::pair<std::string, std::string>> resolved_settings(const RunConfig& cfg) {
  std::string init = "serial";
  if (std::holds_alternative<InitZero>(cfg.init)) init = "zero";
  if (const auto* r = std::get_if<InitRandom>(&cfg.init)) init = "random:" + std::to_string(r->seed);
  const auto b = [](bool v) { return std::string(v ? "true" : "false"); };

  return {
      {"input_dir", cfg.input_dir.string()},
      {"output_dir", cfg.output_dir.string()},
      {"ds", to_string(cfg.ds)},
      {"cp", to_string(cfg.cp)},
      {"sr", cfg.sr.kind == SrKind::External ? "external:" + cfg.sr.command : to_string(cfg.sr.kind)},
      {"scale", std::to_string(cfg.scale)},
      {"lambda", format_double(cfg.lambda)},
      {"iters", std::to_string(cfg.iters)},
      {"init", init},
      {"clamp_each_iter", b(cfg.clamp_each_iter)},
      {"early_stop_tol", cfg.early_stop_tol ? format_double(*cfg.early_stop_tol) : "none"},
      {"metrics_mode", cfg.metrics.mode == MetricsMode::Rgb ? "rgb" : "y"},
      {"metrics_8bit", b(cfg.metrics.eight_bit)},
      {"shave", std::to_string(cfg.metrics.shave)},
      {"dump_images", b(cfg.dump_images)},
      {"dump_traces", b(cfg.dump_traces)},
      {"dump_residuals", b(cfg.dump_residuals)},
      {"jobs", std::to_string(cfg.jobs)},
      {"handshake_timeout", format_double(cfg.handshake_timeout_s)},
      {"request_timeout", format_double(cfg.request_timeout_s)},
  };
}

LoopConfig RunConfig::loop_config() const {
  LoopConfig lc;
  lc.lambda = lambda;
  lc.iterations = iters;
  lc.init = init;
  lc.clamp_each_iter = clamp_each_iter;
  lc.early_stop_tol = early_stop_tol;
  return lc;
}

backend::Timeouts RunConfig::timeouts() const {
  using std::chrono::milliseconds;
  return {milliseconds(static_cast<long long>(handshake_timeout_s * 1000.0)),
          milliseconds(static_cast<long long>(request_timeout_s * 1000.0))};
}

void RunConfig::validate() const {
  if (scale < 1 || scale > 255) throw ConfigError("scale must be in 1..255");
  loop_config().validate();
  cssr::validate(cp);
  if (jobs < 1) throw ConfigError("jobs must be >= 1");
  if (metrics.shave < 0) throw ConfigError("shave must be >= 0");
  if (!(handshake_timeout_s > 0) || !(request_timeout_s > 0)) {
    throw ConfigError("timeouts must be positive");
  }
  if (sr.kind == SrKind::External && sr.command.empty()) {
    throw ConfigError("external SR needs a command line");
  }
}

OperatorChain make_chain(const RunConfig& cfg, std::shared_ptr<SrBackend> backend) {
  OperatorChain chain;
  chain.ds = {cfg.ds, cfg.scale};
  chain.cp = cfg.cp;
  chain.sr = {cfg.sr.kind, cfg.scale, std::move(backend)};
  chain.validate();
  return chain;
}

}  // namespace cssr::bench
