#include "cssr/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "cssr/error.hpp"

namespace cssr::bench {

namespace fs = std::filesystem;

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out) throw DataError("short write to " + path.string());
}

std::string image_extension(const Image& img) {
  return img.color_space() == ColorSpace::Gray ? ".pgm" : ".ppm";
}

// Signed residual mapped around mid-gray.
Image residual_visual(const Image& x_e) {
  Image out = x_e;
  for (float& v : out.samples()) v = std::clamp(0.5f + v, 0.0f, 1.0f);
  return out;
}

std::string mean_increment_text(double v, int precision) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "+inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%+.*f", precision, v);
  return buf;
}

double increment(double circular, double serial) {
  if (std::isinf(circular) && std::isinf(serial) && circular == serial) return 0.0;
  return circular - serial;
}

void write_manifest(const RunConfig& cfg, const std::vector<fs::path>& inputs,
                    const std::vector<std::string>& skipped) {
  std::ostringstream m;
  m << "tool=cssr_bench\n";
  m << "version=" << kToolVersion << "\n";
  m << "[config]\n";
  for (const auto& [k, v] : resolved_settings(cfg)) m << k << "=" << v << "\n";
  m << "[inputs]\n";
  for (const auto& p : inputs) m << p.filename().string() << "\n";
  m << "[skipped]\n";
  for (const auto& s : skipped) m << s << "\n";
  write_text(cfg.output_dir / "manifest.txt", m.str());
}

std::vector<fs::path> list_inputs(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw ConfigError("input directory " + dir.string() + " not found");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().filename().string()[0] != '.') {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  return files;
}

}  // namespace

// ---- formatting -------------------------------------------------------------

std::string format_number(double v, int precision) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, v);
  return buf;
}

std::string csv_header() {
  std::string out;
  for (std::size_t i = 0; i < kCsvColumns.size(); ++i) {
    if (i) out += ',';
    out += kCsvColumns[i];
  }
  return out;
}

std::string csv_line(const ResultRow& r) {
  std::ostringstream s;
  s << r.image_id << ',' << format_number(r.psnr_compressed, 4) << ','
    << format_number(r.ssim_compressed, 6) << ',' << format_number(r.psnr_serial, 4) << ','
    << format_number(r.ssim_serial, 6) << ',' << format_number(r.psnr_circular, 4) << ','
    << format_number(r.ssim_circular, 6) << ',' << format_number(r.residual_initial, 6) << ','
    << format_number(r.residual_final, 6) << ',' << r.iterations_run << ','
    << format_number(r.wall_ms, 3);
  return s.str();
}

std::string write_csv(std::vector<ResultRow> rows) {
  std::sort(rows.begin(), rows.end(),
            [](const ResultRow& a, const ResultRow& b) { return a.image_id < b.image_id; });
  std::string out = csv_header() + "\n";
  for (const auto& r : rows) out += csv_line(r) + "\n";
  return out;
}

Summary summarize(const std::vector<ResultRow>& rows, std::size_t skipped) {
  Summary s;
  s.images = rows.size();
  s.skipped = skipped;
  if (rows.empty()) return s;
  for (const auto& r : rows) {
    s.compressed.psnr += r.psnr_compressed;
    s.compressed.ssim += r.ssim_compressed;
    s.serial.psnr += r.psnr_serial;
    s.serial.ssim += r.ssim_serial;
    s.circular.psnr += r.psnr_circular;
    s.circular.ssim += r.ssim_circular;
  }
  const double n = static_cast<double>(rows.size());
  for (QualityScore* q : {&s.compressed, &s.serial, &s.circular}) {
    q->psnr /= n;
    q->ssim /= n;
  }
  s.psnr_increment = increment(s.circular.psnr, s.serial.psnr);
  s.ssim_increment = increment(s.circular.ssim, s.serial.ssim);
  return s;
}

std::string format_summary(const Summary& s) {
  std::ostringstream out;
  char line[128];
  out << "images: " << s.images << "\n";
  out << "skipped: " << s.skipped << "\n";
  std::snprintf(line, sizeof line, "%-11s %10s %10s\n", "method", "psnr_db", "ssim");
  out << line;
  const std::pair<const char*, QualityScore> methods[] = {
      {"compressed", s.compressed}, {"serial", s.serial}, {"circular", s.circular}};
  for (const auto& [name, q] : methods) {
    std::snprintf(line, sizeof line, "%-11s %10s %10s\n", name, format_number(q.psnr, 2).c_str(),
                  format_number(q.ssim, 4).c_str());
    out << line;
  }
  std::snprintf(line, sizeof line, "%-11s %10s %10s\n", "increment",
                mean_increment_text(s.psnr_increment, 2).c_str(),
                mean_increment_text(s.ssim_increment, 4).c_str());
  out << line;
  return out.str();
}

std::string format_trace(const LoopTrace& trace) {
  std::ostringstream out;
  char line[256];
  for (int n = 0; n < trace.iterations_run; ++n) {
    const double current = trace.residual_l2[n];
    const double next = n + 1 < trace.iterations_run ? trace.residual_l2[n + 1]
                                                    : trace.final_residual_l2;
    std::snprintf(line, sizeof line, "%d %.9g %.9g %.9g ", n + 1, current, trace.control_l2[n],
                  next);
    out << line << (current > 0 ? format_number(next / current, 9) : "-");
    if (static_cast<std::size_t>(n) < trace.psnr_vs_reference.size()) {
      out << ' ' << format_number(trace.psnr_vs_reference[n], 4);
    }
    out << '\n';
  }
  return out.str();
}

// ---- per image --------------------------------------------------------------

ImageReport process_image(const Image& original, const std::string& id, const RunConfig& cfg,
                          const OperatorChain& chain, const RefineHooks& extra) {
  const auto start = std::chrono::steady_clock::now();
  ImageReport rep;
  rep.ground_truth = crop_to_multiple(original, cfg.scale);
  const Image& x_h0 = rep.ground_truth;

  const SerialResult serial = serial_pipeline(x_h0, chain);
  RefineHooks hooks = extra;
  hooks.reference = &x_h0;
  auto [x_h, trace] = circular_refine(serial.x_s0, chain, cfg.loop_config(), hooks);

  rep.compressed_up = upsample_for_metric(serial.x_c0, x_h0.width(), x_h0.height());
  rep.serial = clamped(serial.x_s0);
  rep.circular = std::move(x_h);
  rep.trace = std::move(trace);

  const QualityScore q_comp = evaluate(rep.compressed_up, x_h0, cfg.metrics);
  const QualityScore q_serial = evaluate(rep.serial, x_h0, cfg.metrics);
  const QualityScore q_circ = evaluate(rep.circular, x_h0, cfg.metrics);

  ResultRow& row = rep.row;
  row.image_id = id;
  row.psnr_compressed = q_comp.psnr;
  row.ssim_compressed = q_comp.ssim;
  row.psnr_serial = q_serial.psnr;
  row.ssim_serial = q_serial.ssim;
  row.psnr_circular = q_circ.psnr;
  row.ssim_circular = q_circ.ssim;
  row.residual_initial = rep.trace.initial_residual_l2;
  row.residual_final = rep.trace.final_residual_l2;
  row.iterations_run = rep.trace.iterations_run;
  row.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
                    .count();
  return rep;
}

void write_image_outputs(const ImageReport& rep, const RunConfig& cfg) {
  const std::string& id = rep.row.image_id;
  const std::string ext = image_extension(rep.ground_truth);
  if (cfg.dump_images) {
    const auto path = [&](const char* suffix) {
      return (cfg.output_dir / (id + suffix + ext)).string();
    };
    write_ppm_file(path("_compressed_up"), clamped(rep.compressed_up));
    write_ppm_file(path("_serial"), rep.serial);
    write_ppm_file(path("_circular"), rep.circular);
    write_ppm_file(path("_diff_serial"), abs_diff(rep.serial, rep.ground_truth).map);
    write_ppm_file(path("_diff_circular"), abs_diff(rep.circular, rep.ground_truth).map);
  }
  if (cfg.dump_traces) write_text(cfg.output_dir / (id + "_trace.txt"), format_trace(rep.trace));
}

namespace {

RefineHooks residual_dump_hooks(const RunConfig& cfg, const std::string& id) {
  RefineHooks hooks;
  if (!cfg.dump_residuals) return hooks;
  hooks.on_iteration = [dir = cfg.output_dir, id](const IterationState& s) {
    const std::string ext = s.error.color_space() == ColorSpace::Gray ? ".pgm" : ".ppm";
    write_ppm_file((dir / (id + "_residual_" + std::to_string(s.iteration) + ext)).string(),
                   residual_visual(s.error));
  };
  return hooks;
}

}  // namespace

// ---- commands ---------------------------------------------------------------

BenchmarkResult run_benchmark(const RunConfig& cfg, std::ostream& log) {
  cfg.validate();
  const std::vector<fs::path> inputs = list_inputs(cfg.input_dir);
  fs::create_directories(cfg.output_dir);

  std::vector<std::optional<ResultRow>> rows(inputs.size());
  std::vector<std::string> skip_reason(inputs.size());
  std::atomic<std::size_t> next{0};
  std::atomic<bool> abort{false};
  std::exception_ptr failure;
  std::mutex mutex;

  const auto worker = [&] {
    std::shared_ptr<SrBackend> backend;
    try {
      if (cfg.sr.kind == SrKind::External) {
        backend = backend::BackendClient::launch(cfg.sr.command, cfg.timeouts());
      }
      const OperatorChain chain = make_chain(cfg, backend);
      for (std::size_t i; !abort && (i = next++) < inputs.size();) {
        const std::string id = inputs[i].stem().string();
        try {
          const Image original = read_ppm_file(inputs[i].string());
          ImageReport rep = process_image(original, id, cfg, chain, residual_dump_hooks(cfg, id));
          write_image_outputs(rep, cfg);
          rows[i] = std::move(rep.row);
        } catch (const BackendError& e) {
          throw BackendError(e.kind(), "image " + inputs[i].filename().string() + ": " + e.what());
        } catch (const DivergenceError& e) {
          throw DivergenceError("image " + inputs[i].filename().string() + ": " + e.what());
        } catch (const DataError& e) {
          skip_reason[i] = e.what();
        }
      }
    } catch (...) {
      std::lock_guard lock(mutex);
      if (!failure) failure = std::current_exception();
      abort = true;
    }
  };

  const int workers = std::min<int>(cfg.jobs, std::max<std::size_t>(inputs.size(), 1));
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);

  BenchmarkResult result;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (rows[i]) {
      result.rows.push_back(std::move(*rows[i]));
    } else {
      result.skipped.push_back(inputs[i].filename().string() + ": " + skip_reason[i]);
      log << "skipped " << inputs[i].filename().string() << ": " << skip_reason[i] << "\n";
    }
  }
  std::sort(result.rows.begin(), result.rows.end(),
            [](const ResultRow& a, const ResultRow& b) { return a.image_id < b.image_id; });
  if (result.rows.empty()) {
    write_manifest(cfg, inputs, result.skipped);
    throw DataError("no loadable images in " + cfg.input_dir.string());
  }

  result.summary = summarize(result.rows, result.skipped.size());
  write_text(cfg.output_dir / "results.csv", write_csv(result.rows));
  write_text(cfg.output_dir / "summary.txt", format_summary(result.summary));
  write_manifest(cfg, inputs, result.skipped);
  return result;
}

ImageReport run_single(const fs::path& image, const RunConfig& cfg, std::ostream& out) {
  cfg.validate();
  fs::create_directories(cfg.output_dir);
  std::shared_ptr<SrBackend> backend;
  if (cfg.sr.kind == SrKind::External) {
    backend = backend::BackendClient::launch(cfg.sr.command, cfg.timeouts());
  }
  const OperatorChain chain = make_chain(cfg, backend);
  const std::string id = image.stem().string();
  const Image original = read_ppm_file(image.string());
  ImageReport rep = process_image(original, id, cfg, chain, residual_dump_hooks(cfg, id));

  RunConfig single = cfg;
  single.dump_traces = true;
  write_image_outputs(rep, single);
  write_manifest(cfg, {image}, {});

  const ResultRow& r = rep.row;
  out << "image: " << id << " (" << rep.ground_truth.width() << "x" << rep.ground_truth.height()
      << ", " << to_string(rep.ground_truth.color_space()) << ")\n";
  out << "compressed: psnr " << format_number(r.psnr_compressed, 2) << " dB, ssim "
      << format_number(r.ssim_compressed, 4) << "\n";
  out << "serial:     psnr " << format_number(r.psnr_serial, 2) << " dB, ssim "
      << format_number(r.ssim_serial, 4) << "\n";
  out << "circular:   psnr " << format_number(r.psnr_circular, 2) << " dB, ssim "
      << format_number(r.ssim_circular, 4) << "\n";
  out << "increment:  psnr "
      << mean_increment_text(increment(r.psnr_circular, r.psnr_serial), 2) << " dB, ssim "
      << mean_increment_text(increment(r.ssim_circular, r.ssim_serial), 4) << "\n";
  out << "residual:   " << format_number(r.residual_initial, 6) << " -> "
      << format_number(r.residual_final, 6) << " over " << r.iterations_run << " iterations\n";
  out << "trace (n residual control next ratio psnr):\n" << format_trace(rep.trace);
  return rep;
}

int diff_images(const fs::path& a, const fs::path& b, const fs::path& out, double gain,
                std::ostream& err) {
  if (!(gain > 0) || !std::isfinite(gain)) {
    err << "gain must be a positive number\n";
    return kExitConfig;
  }
  try {
    const Image ia = read_ppm_file(a.string());
    const Image ib = read_ppm_file(b.string());
    if (!ia.same_shape(ib)) {
      err << "shape mismatch: " << ia.width() << "x" << ia.height() << "x" << ia.channels()
          << " vs " << ib.width() << "x" << ib.height() << "x" << ib.channels() << "\n";
      return kExitData;
    }
    const DiffMap diff = abs_diff(ia, ib, a.string(), b.string());
    write_ppm_file(out.string(), clamped(scaled(diff.map, static_cast<float>(gain))));

    std::ostringstream side;
    side.precision(17);
    side << "gain=" << gain << "\nsource_a=" << diff.source_a << "\nsource_b=" << diff.source_b
         << "\n";
    write_text(out.string() + ".txt", side.str());
  } catch (const DataError& e) {
    err << e.what() << "\n";
    return kExitData;
  }
  return kExitOk;
}

}  // namespace cssr::bench
