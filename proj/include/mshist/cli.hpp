#pragma once

#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "mshist/core.hpp"
#include "mshist/io.hpp"
#include "mshist/metrics.hpp"
#include "mshist/tonemap.hpp"

namespace mshist::cli {

namespace fs = std::filesystem;

enum ExitStatus : int { kSuccess = 0, kFileFailure = 1, kUsageError = 2 };

struct RunConfig {
  std::vector<fs::path> inputs;
  std::optional<fs::path> output;
  ToneParams params;
  std::optional<fs::path> metrics_csv;
  std::vector<int> sweep_bins;
  std::vector<double> sweep_eps;
  std::optional<fs::path> dump_scales;
  int threads = 0;  ///< 0 = one per hardware thread
};

/// Epsilon as it appears in sweep file names (shortest round-trip-ish form, e.g. 0.1, 0.001).
inline std::string format_epsilon(double eps) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", eps);
  return buf;
}

inline std::optional<DisplayKind> kind_for_extension(const fs::path& p) {
  const std::string ext = p.extension().string();
  if (ext == ".png") return DisplayKind::png;
  if (ext == ".ppm") return DisplayKind::ppm;
  return std::nullopt;
}

namespace detail {

struct OutputPlan {
  fs::path directory;
  std::optional<fs::path> file;  ///< explicit single-output file name
  DisplayKind kind = DisplayKind::png;
  std::string extension = ".png";
};

inline OutputPlan plan_outputs(const RunConfig& cfg, const fs::path& input) {
  OutputPlan plan;
  if (!cfg.output) {
    plan.directory = input.parent_path();
    return plan;
  }
  if (auto kind = kind_for_extension(*cfg.output)) {
    plan.kind = *kind;
    plan.extension = cfg.output->extension().string();
    plan.directory = cfg.output->parent_path();
    if (cfg.sweep_bins.empty() && cfg.sweep_eps.empty()) plan.file = *cfg.output;
    return plan;
  }
  plan.directory = *cfg.output;
  return plan;
}

inline void ensure_directory(const fs::path& dir) {
  if (dir.empty()) return;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::io_failure, "cannot create directory '" + dir.string() + "'");
}

inline void append_metrics(const fs::path& csv, const fs::path& image, const ToneParams& p,
                           const QualityReport& r) {
  std::error_code ec;
  const bool fresh = !fs::exists(csv, ec) || fs::file_size(csv, ec) == 0;
  std::ofstream f(csv, std::ios::app);
  if (!f) throw Error(ErrorCode::io_failure, "cannot open metrics file '" + csv.string() + "'");
  if (fresh) f << "file,bins,epsilon,scales,sat," << csv_header() << "\n";
  f << image.string() << "," << p.bins << "," << format_epsilon(p.epsilon) << ","
    << p.scales.value_or(0) << "," << p.sat << "," << to_csv_row(r) << "\n";
  if (!f) throw Error(ErrorCode::io_failure, "error writing metrics file '" + csv.string() + "'");
}

inline void dump_scale_maps(const MultiScaleToneMapper& mapper, const fs::path& dir,
                            const std::string& stem, int threads) {
  ensure_directory(dir);
  for (std::size_t i = 0; i < mapper.plan().size(); ++i) {
    const std::string base = stem + "_s" + std::to_string(i + 1);
    const LuminanceField tone = mapper.scale_tone_map(i, threads);
    write_file(dir / (base + "_tone.png"),
               write_display(DisplayImage::from_gray(tone), DisplayKind::png));
    const LuminanceField score = mapper.scale_score_map(i, threads);
    std::vector<double> scaled(score.samples().begin(), score.samples().end());
    for (double& v : scaled) v *= kDisplayMax;
    const LuminanceField shown(score.width(), score.height(), std::move(scaled), Domain::display);
    write_file(dir / (base + "_score.png"),
               write_display(DisplayImage::from_gray(shown), DisplayKind::png));
  }
}

/// Tone-maps one decoded image with one parameter set and writes the result.
inline void render_one(const WdrImage& img, const LuminanceField& linear, const ToneParams& params,
                       const fs::path& out_path, DisplayKind kind, const RunConfig& cfg,
                       const fs::path& input, std::ostream& out, bool dump) {
  const ToneParams resolved = validate_params(params, img.width(), img.height());
  const MultiScaleToneMapper mapper(linear, resolved);
  const LuminanceField display = mapper.run(cfg.threads);
  const DisplayImage color = restore_color(img, linear, display, resolved.sat, resolved.log_floor);
  write_file(out_path, write_display(color, kind));
  out << input.string() << " -> " << out_path.string() << " (n=" << resolved.bins
      << ", eps=" << format_epsilon(resolved.epsilon) << ", scales=" << *resolved.scales << ")\n";
  if (cfg.metrics_csv) {
    const QualityReport report = evaluate_quality(color);
    append_metrics(*cfg.metrics_csv, out_path, resolved, report);
    out << to_text(report);
  }
  if (dump && cfg.dump_scales)
    dump_scale_maps(mapper, *cfg.dump_scales, input.stem().string(), cfg.threads);
}

inline void process_file(const RunConfig& cfg, const fs::path& input, std::ostream& out) {
  std::size_t clamped = 0;
  const WdrImage img = load_wdr(input, &clamped);
  if (clamped > 0)
    out << input.string() << ": warning: " << clamped << " negative samples clamped to 0\n";
  const LuminanceField linear = extract_luminance(img);
  const OutputPlan plan = plan_outputs(cfg, input);
  ensure_directory(plan.directory);
  const std::string stem = input.stem().string();

  if (cfg.sweep_bins.empty() && cfg.sweep_eps.empty()) {
    fs::path target = plan.file ? *plan.file
                                : plan.directory / (stem + (cfg.output ? "" : "_mshist") +
                                                    plan.extension);
    render_one(img, linear, cfg.params, target, plan.kind, cfg, input, out, true);
    return;
  }
  const std::vector<int> bins = cfg.sweep_bins.empty() ? std::vector<int>{cfg.params.bins}
                                                       : cfg.sweep_bins;
  const std::vector<double> eps = cfg.sweep_eps.empty() ? std::vector<double>{cfg.params.epsilon}
                                                        : cfg.sweep_eps;
  bool first = true;
  for (int n : bins) {
    for (double e : eps) {
      ToneParams p = cfg.params;
      p.bins = n;
      p.epsilon = e;
      const fs::path target = plan.directory / (stem + "_n" + std::to_string(n) + "_eps" +
                                                format_epsilon(e) + plan.extension);
      render_one(img, linear, p, target, plan.kind, cfg, input, out, first);
      first = false;
    }
  }
}

}  // namespace detail

/// Checks everything that does not depend on image content. Returns an error message or empty.
inline std::string check_config(const RunConfig& cfg) {
  if (cfg.inputs.empty()) return "no input files";
  if (cfg.threads < 0) return "thread count must be positive or 'auto'";
  if (cfg.output && kind_for_extension(*cfg.output) && cfg.inputs.size() > 1)
    return "-o names a single file but several inputs were given; pass a directory";
  if (cfg.params.scales && *cfg.params.scales < 1) return "scales must be >= 1";
  auto check = [](ToneParams p) -> std::string {
    p.scales.reset();
    try {
      validate_params(p, 1, 1);
    } catch (const std::exception& e) {
      return e.what();
    }
    return {};
  };
  if (auto msg = check(cfg.params); !msg.empty()) return msg;
  for (int n : cfg.sweep_bins) {
    ToneParams p = cfg.params;
    p.bins = n;
    if (auto msg = check(p); !msg.empty()) return msg;
  }
  for (double e : cfg.sweep_eps) {
    ToneParams p = cfg.params;
    p.epsilon = e;
    if (auto msg = check(p); !msg.empty()) return msg;
  }
  return {};
}

/// Processes every input; a failing file is reported and skipped.
inline int run(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  if (const std::string msg = check_config(cfg); !msg.empty()) {
    err << "mshist: " << msg << "\n";
    return kUsageError;
  }
  int status = kSuccess;
  for (const auto& input : cfg.inputs) {
    try {
      detail::process_file(cfg, input, out);
    } catch (const std::exception& e) {
      err << "mshist: " << input.string() << ": " << e.what() << "\n";
      status = kFileFailure;
    }
  }
  return status;
}

struct ParseResult {
  std::optional<RunConfig> config;
  int exit_code = kSuccess;
};

inline ParseResult parse_command_line(int argc, const char* const* argv, std::ostream& out,
                                      std::ostream& err) {
  CLI::App app{"Multi-scale histogram tone mapping for wide-dynamic-range images", "mshist"};
  RunConfig cfg;
  std::vector<std::string> inputs;
  std::string output;
  std::string metrics;
  std::string dump;
  std::string scales = "auto";
  std::string threads = "auto";

  app.add_option("inputs", inputs, "Radiance .hdr or .pfm files")->required();
  app.add_option("-o,--output", output,
                 "Output file (.png/.ppm) for one input, otherwise an output directory");
  app.add_option("--bins", cfg.params.bins, "Histogram bins n")->capture_default_str();
  app.add_option("--epsilon", cfg.params.epsilon, "Textural score regularizer")
      ->capture_default_str();
  app.add_option("--sat", cfg.params.sat, "Color saturation exponent in (0, 1]")
      ->capture_default_str();
  app.add_option("--scales", scales, "Pyramid levels, or 'auto'")->capture_default_str();
  app.add_option("--metrics", metrics, "Append brightness/sharpness/contrast rows to this CSV");
  app.add_option("--sweep-bins", cfg.sweep_bins, "Comma-separated bin counts to sweep")
      ->delimiter(',');
  app.add_option("--sweep-eps", cfg.sweep_eps, "Comma-separated epsilon values to sweep")
      ->delimiter(',');
  app.add_option("--dump-scales", dump, "Write per-scale tone and score maps to this directory");
  app.add_option("--threads", threads, "Worker threads, or 'auto'")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return {std::nullopt, code == 0 ? kSuccess : kUsageError};
  }

  auto parse_count = [&](const std::string& text, const char* what) -> std::optional<int> {
    try {
      std::size_t used = 0;
      const int v = std::stoi(text, &used);
      if (used == text.size()) return v;
    } catch (const std::exception&) {
    }
    err << "mshist: " << what << " must be an integer or 'auto', got '" << text << "'\n";
    return std::nullopt;
  };
  if (scales != "auto") {
    auto v = parse_count(scales, "--scales");
    if (!v) return {std::nullopt, kUsageError};
    cfg.params.scales = *v;
  }
  if (threads != "auto") {
    auto v = parse_count(threads, "--threads");
    if (!v || *v < 1) {
      if (v) err << "mshist: --threads must be >= 1\n";
      return {std::nullopt, kUsageError};
    }
    cfg.threads = *v;
  }
  for (const auto& in : inputs) cfg.inputs.emplace_back(in);
  if (!output.empty()) cfg.output = output;
  if (!metrics.empty()) cfg.metrics_csv = metrics;
  if (!dump.empty()) cfg.dump_scales = dump;
  return {std::move(cfg), kSuccess};
}

inline int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  ParseResult parsed = parse_command_line(argc, argv, out, err);
  if (!parsed.config) return parsed.exit_code;
  return run(*parsed.config, out, err);
}

}  // namespace mshist::cli
