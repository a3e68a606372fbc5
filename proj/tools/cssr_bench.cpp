// cssr_bench: degrade/restore benchmark for closed-loop super-resolution.
//
//   cssr_bench run    -i <dir> -o <dir> [options]
//   cssr_bench single <image> -o <dir> [options]
//   cssr_bench diff   <a> <b> <out> [--gain g]
//   cssr_bench protocol-check <backend command>

#include <CLI11.hpp>
#include <iostream>
#include <map>

#include "cssr/bench.hpp"
#include "cssr/error.hpp"

namespace {

using namespace cssr;
using namespace cssr::bench;

// Options shared by `run` and `single`. Values are kept as text so that
// only flags actually given override the config file.
struct SharedFlags {
  std::string config_file;
  std::map<std::string, std::string> values;
  std::vector<std::pair<std::string, CLI::Option*>> options;

  void add(CLI::App& app, bool with_input_dir) {
    app.add_option("--config", config_file, "flat key=value config file (flags override it)");
    const auto opt = [&](const std::string& key, const std::string& flag, const std::string& help) {
      options.emplace_back(key, app.add_option(flag, values[key], help));
    };
    const auto flag = [&](const std::string& key, const std::string& name, const std::string& help) {
      options.emplace_back(key, app.add_flag(name, help));
    };
    if (with_input_dir) opt("input_dir", "-i,--input-dir", "directory of P5/P6 images");
    opt("output_dir", "-o,--output-dir", "where results are written");
    opt("ds", "--ds", "downsampling: nearest|bicubic");
    opt("cp", "--cp", "compression: identity|uniform:<step>|dct:<q>[,sub=<bool>]");
    opt("sr", "--sr", "super-resolution: nearest|bilinear|bicubic|external:<command>");
    opt("scale", "--scale", "DS and SR factor");
    opt("lambda", "--lambda", "feedback gain in (0,1]");
    opt("iters", "--iters", "number of feedback iterations");
    opt("init", "--init", "serial|zero|random:<seed>");
    flag("clamp_each_iter", "--clamp-each-iter", "clamp the estimate to [0,1] every iteration");
    opt("early_stop_tol", "--early-stop-tol", "stop once the residual L2 norm is <= tol");
    opt("metrics_mode", "--metrics-mode", "rgb|y");
    flag("metrics_8bit", "--metrics-8bit", "round to 8-bit before scoring");
    opt("shave", "--shave", "border pixels excluded from metrics");
    flag("dump_images", "--dump-images", "write reconstructions and difference maps");
    flag("dump_traces", "--dump-traces", "write per-image residual traces");
    flag("dump_residuals", "--dump-residuals", "write every error vector (debug)");
    opt("jobs", "-j,--jobs", "parallel workers");
    opt("handshake_timeout", "--handshake-timeout", "seconds");
    opt("request_timeout", "--request-timeout", "seconds");
  }

  RunConfig resolve() const {
    RunConfig cfg;
    if (!config_file.empty()) apply_config_file(cfg, config_file);
    for (const auto& [key, option] : options) {
      if (option->count() == 0) continue;
      const auto it = values.find(key);
      apply_setting(cfg, key, it != values.end() && !it->second.empty() ? it->second : "true");
    }
    return cfg;
  }
};

template <class F>
int guarded(F&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const BackendError& e) {
    std::cerr << "backend error: " << e.what() << "\n";
    return kExitBackend;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const DivergenceError& e) {
    std::cerr << "divergence: " << e.what() << "\n";
    return kExitData;
  } catch (const ContractError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "filesystem error: " << e.what() << "\n";
    return kExitData;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Closed-loop super-resolution benchmark"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);

  SharedFlags run_flags;
  auto* run = app.add_subcommand("run", "benchmark every image in a directory");
  run_flags.add(*run, true);

  SharedFlags single_flags;
  std::string single_image;
  auto* single = app.add_subcommand("single", "one image with a full residual trace");
  single->add_option("image", single_image, "P5/P6 image")->required();
  single_flags.add(*single, false);

  std::string diff_a, diff_b, diff_out;
  double gain = 1.0;
  auto* diff = app.add_subcommand("diff", "absolute-difference map of two images");
  diff->add_option("a", diff_a)->required();
  diff->add_option("b", diff_b)->required();
  diff->add_option("out", diff_out)->required();
  diff->add_option("--gain", gain, "amplification before clamping");

  std::string backend_command;
  double handshake_timeout = 10.0, request_timeout = 120.0;
  auto* check = app.add_subcommand("protocol-check", "probe an SR backend for conformance");
  check->add_option("command", backend_command, "backend command line")->required();
  check->add_option("--handshake-timeout", handshake_timeout, "seconds");
  check->add_option("--request-timeout", request_timeout, "seconds");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  if (*run) {
    return guarded([&] {
      const RunConfig cfg = run_flags.resolve();
      if (cfg.input_dir.empty()) throw ConfigError("--input-dir is required");
      const BenchmarkResult result = run_benchmark(cfg, std::cerr);
      std::cout << format_summary(result.summary);
      return kExitOk;
    });
  }
  if (*single) {
    return guarded([&] {
      run_single(single_image, single_flags.resolve(), std::cout);
      return kExitOk;
    });
  }
  if (*diff) {
    return diff_images(diff_a, diff_b, diff_out, gain, std::cerr);
  }
  if (*check) {
    return guarded([&] {
      RunConfig timeouts_cfg;
      timeouts_cfg.handshake_timeout_s = handshake_timeout;
      timeouts_cfg.request_timeout_s = request_timeout;
      timeouts_cfg.validate();
      return protocol_check(backend_command, timeouts_cfg.timeouts(), std::cout);
    });
  }
  return kExitConfig;
}
