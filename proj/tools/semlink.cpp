#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include "semlink/config.hpp"
#include "semlink/metrics.hpp"
#include "semlink/pipeline.hpp"
#include "semlink/restore.hpp"

using namespace semlink;

namespace {

int default_threads() {
  if (const char* env = std::getenv("SEMLINK_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n >= 1) return n;
    } catch (const std::exception&) {
    }
    throw ConfigError(std::string("SEMLINK_THREADS must be a positive integer, got '") + env + "'");
  }
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

void write_outputs(const SweepConfig& cfg, const SweepResult& result, const std::filesystem::path& out,
                   bool images) {
  export_csv(result, out / "results.csv");
  export_plotdata(result, out);
  if (images) export_images(result, out / "images");
  std::ofstream resolved(out / "config.json");
  resolved << to_json(cfg).dump(2) << '\n';
}

int run(const std::string& config_path, const std::filesystem::path& out, std::optional<int> threads,
        std::optional<std::uint64_t> seed, bool images, bool quiet) {
  SweepConfig cfg = load_sweep_config(config_path);
  if (seed) cfg.master_seed = *seed;
  std::filesystem::create_directories(out);

  SweepOptions options;
  options.threads = threads ? *threads : default_threads();
  if (options.threads < 1) throw ConfigError("--threads must be positive");
  options.keep_images = images;
  if (!quiet) {
    options.progress = [](std::size_t done, std::size_t total) {
      std::cerr << "\r[" << done << "/" << total << "]" << (done == total ? "\n" : "") << std::flush;
    };
  }
  try {
    const SweepResult result = run_sweep(cfg, options);
    write_outputs(cfg, result, out, images);
  } catch (const SweepError& e) {
    write_outputs(cfg, e.partial(), out, images);
    std::cerr << "\nsemlink: partial results written to " << out.string() << '\n';
    throw;
  }
  return 0;
}

int metrics(const std::string& ref, const std::string& test, const std::string& window, double snr) {
  SsimParams params;
  if (window == "global") {
    params.window = SsimWindow::global;
  } else if (window != "gaussian") {
    throw ConfigError("unknown --window '" + window + "'");
  }
  const MetricsReport r = evaluate(read_png(ref), read_png(test), snr, Stage::decoded, params);
  std::cout << "ber=" << format_number(r.ber) << " psnr_db=" << format_number(r.psnr_db)
            << " ssim=" << format_number(r.ssim) << '\n';
  return 0;
}

int filter(const std::string& kind, double param, const std::string& in, const std::string& out) {
  FilterSpec spec;
  switch (parse_filter_kind(kind)) {
    case FilterKind::median:
      spec = FilterSpec::median(static_cast<int>(param));
      if (spec.window != param) throw ConfigError("median window must be an odd integer");
      break;
    case FilterKind::gaussian:
      spec = FilterSpec::gaussian(param);
      break;
    case FilterKind::bm3d:
      spec = FilterSpec::bm3d(param);
      break;
  }
  write_png(apply_filter(read_png(in), spec), out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Image transmission over a massive-MIMO link with post-filtering"};
  app.require_subcommand(1);

  auto* run_cmd = app.add_subcommand("run", "run an SNR sweep over a dataset");
  std::string config_path;
  std::string out_dir;
  std::optional<int> threads;
  std::optional<std::uint64_t> seed;
  bool images = false;
  bool quiet = false;
  run_cmd->add_option("--config", config_path, "sweep config JSON")->required();
  run_cmd->add_option("--out", out_dir, "output directory")->required();
  run_cmd->add_option("--threads", threads, "worker threads (default: SEMLINK_THREADS or all cores)");
  run_cmd->add_option("--seed", seed, "override master_seed");
  run_cmd->add_flag("--images", images, "also write reconstructed PNGs");
  run_cmd->add_flag("--quiet", quiet, "no progress output");

  auto* metrics_cmd = app.add_subcommand("metrics", "compare two grayscale PNGs");
  std::string ref;
  std::string test;
  std::string window = "gaussian";
  double snr = 0.0;
  metrics_cmd->add_option("--ref", ref)->required();
  metrics_cmd->add_option("--test", test)->required();
  metrics_cmd->add_option("--window", window, "SSIM window: gaussian or global");

  auto* filter_cmd = app.add_subcommand("filter", "apply one post-filter to a PNG");
  std::string kind;
  double param = 0.0;
  std::string in;
  std::string out;
  filter_cmd->add_option("--kind", kind, "median, gaussian or bm3d")->required();
  filter_cmd->add_option("--param", param, "window, sigma or noise level")->required();
  filter_cmd->add_option("--in", in)->required();
  filter_cmd->add_option("--out", out)->required();

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run_cmd) return run(config_path, out_dir, threads, seed, images, quiet);
    if (*metrics_cmd) return metrics(ref, test, window, snr);
    if (*filter_cmd) return filter(kind, param, in, out);
  } catch (const std::exception& e) {
    std::cerr << "semlink: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
