#pragma once

#include <array>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cssr/backend_client.hpp"
#include "cssr/feedback_loop.hpp"
#include "cssr/metrics.hpp"
#include "cssr/operators.hpp"

namespace cssr::bench {

inline constexpr const char* kToolVersion = "0.3.0";

enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 1,
  kExitData = 2,
  kExitBackend = 3,
};

struct SrSpec {
  SrKind kind = SrKind::Bicubic;
  std::string command;  // External only
};

struct RunConfig {
  std::filesystem::path input_dir;
  std::filesystem::path output_dir = "out";
  DownsampleKind ds = DownsampleKind::Bicubic;
  CompressOp cp = DctQuant{10, true};
  SrSpec sr;
  int scale = 4;
  double lambda = 0.1;
  int iters = 10;
  LoopInit init = InitFromSerial{};
  bool clamp_each_iter = false;
  std::optional<double> early_stop_tol;
  MetricOptions metrics;
  bool dump_images = false;
  bool dump_traces = false;
  bool dump_residuals = false;
  int jobs = 1;
  double handshake_timeout_s = 10.0;
  double request_timeout_s = 120.0;

  LoopConfig loop_config() const;
  backend::Timeouts timeouts() const;

  /// Everything except input/output paths, which each command checks itself.
  void validate() const;
};

// Value parsers shared by the config file and the command line.
DownsampleKind parse_downsample(std::string_view text);
CompressOp parse_compress(std::string_view text);
SrSpec parse_sr(std::string_view text);
LoopInit parse_init(std::string_view text);
MetricsMode parse_metrics_mode(std::string_view text);
bool parse_bool(std::string_view text);

/// Sets one key. Keys use underscores; hyphens are accepted as synonyms.
void apply_setting(RunConfig& cfg, std::string_view key, std::string_view value);

/// Flat `key = value` file; '#' starts a comment line.
void apply_config_file(RunConfig& cfg, const std::filesystem::path& path);

/// Fully resolved settings in a stable order, as `key=value` pairs that
/// apply_setting accepts back.
std::vector<std::pair<std::string, std::string>> resolved_settings(const RunConfig& cfg);

/// Chain for this config; External SR uses `backend`.
OperatorChain make_chain(const RunConfig& cfg, std::shared_ptr<SrBackend> backend = nullptr);

// ---- results ----------------------------------------------------------------

inline constexpr std::array<const char*, 11> kCsvColumns = {
    "image_id",        "psnr_compressed",  "ssim_compressed", "psnr_serial",
    "ssim_serial",     "psnr_circular",    "ssim_circular",   "residual_initial",
    "residual_final",  "iterations_run",   "wall_ms",
};

struct ResultRow {
  std::string image_id;
  double psnr_compressed = 0;
  double ssim_compressed = 0;
  double psnr_serial = 0;
  double ssim_serial = 0;
  double psnr_circular = 0;
  double ssim_circular = 0;
  double residual_initial = 0;
  double residual_final = 0;
  int iterations_run = 0;
  double wall_ms = 0;
};

std::string format_number(double v, int precision);
std::string csv_header();
std::string csv_line(const ResultRow& row);
std::string write_csv(std::vector<ResultRow> rows);  // sorted by image_id

struct Summary {
  std::size_t images = 0;
  std::size_t skipped = 0;
  QualityScore compressed{0, 0};
  QualityScore serial{0, 0};
  QualityScore circular{0, 0};
  double psnr_increment = 0;  // mean circular - mean serial
  double ssim_increment = 0;
};

Summary summarize(const std::vector<ResultRow>& rows, std::size_t skipped);
std::string format_summary(const Summary& s);

/// Trace file body: one line per iteration,
/// `n residual control next_residual ratio [psnr_vs_reference]`.
std::string format_trace(const LoopTrace& trace);

// ---- per image --------------------------------------------------------------

struct ImageReport {
  ResultRow row;
  LoopTrace trace;
  Image ground_truth;  // x_h0 after cropping
  Image compressed_up;
  Image serial;    // x_s0
  Image circular;  // x_h
};

ImageReport process_image(const Image& original, const std::string& id, const RunConfig& cfg,
                          const OperatorChain& chain, const RefineHooks& extra = {});

/// Writes the optional dumps for one processed image into cfg.output_dir.
void write_image_outputs(const ImageReport& report, const RunConfig& cfg);

// ---- commands ---------------------------------------------------------------

struct BenchmarkResult {
  std::vector<ResultRow> rows;  // sorted by image_id
  std::vector<std::string> skipped;  // "file: reason"
  Summary summary;
};

/// Processes every file in cfg.input_dir. Unreadable files are skipped and
/// reported; backend failures abort with the offending image named.
BenchmarkResult run_benchmark(const RunConfig& cfg, std::ostream& log);

/// One image; always writes `<id>_trace.txt`; prints a report to `out`.
ImageReport run_single(const std::filesystem::path& image, const RunConfig& cfg, std::ostream& out);

/// |a - b| * gain, clamped, written as PPM/PGM with a `<out>.txt` sidecar.
/// Returns an exit code.
int diff_images(const std::filesystem::path& a, const std::filesystem::path& b,
                const std::filesystem::path& out, double gain, std::ostream& err);

/// Handshake, echo-shape and error-path probes against a backend command.
/// Returns an exit code.
int protocol_check(const std::string& command, const backend::Timeouts& timeouts, std::ostream& out);

}  // namespace cssr::bench
