#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "semlink/config.hpp"
#include "semlink/error.hpp"
#include "semlink/image.hpp"
#include "semlink/metrics.hpp"

namespace semlink {

struct DatasetImage {
  std::string name;  // file stem
  GrayImage image;
};

// Every *.png in `dir`, sorted by file name. Colour, palette, alpha and 16-bit
// files raise FormatError naming the file.
std::vector<DatasetImage> load_dataset(const std::filesystem::path& dir);

struct DetectionStats {
  std::size_t frames = 0;
  double iterations_mean = 0.0;
  double converged_fraction = 1.0;
};

struct Transmission {
  GrayImage decoded;
  double ber = 0.0;
  DetectionStats stats;
};

// image_to_bits -> modulate -> per coherence block: sample_channel, transmit,
// detect -> demodulate -> bits_to_image. Block b draws its channel from
// derive_seed(seed, {0, b}) and its noise from derive_seed(seed, {1, b}).
Transmission transmit_image(const GrayImage& img, double snr_db, const SweepConfig& cfg,
                            std::uint64_t seed);

// Image name used for per-SNR means across the dataset.
inline constexpr std::string_view kAverageRow = "AVERAGE";

struct SweepRow {
  std::string image;
  double snr_db = 0.0;
  Stage stage = Stage::decoded;
  double ber = 0.0;
  double psnr_db = 0.0;
  double ssim = 0.0;
  double iters_mean = 0.0;
  double wall_ms = 0.0;

  friend bool operator==(const SweepRow&, const SweepRow&) = default;
};

struct Reconstruction {
  std::string image;
  double snr_db = 0.0;
  Stage stage = Stage::decoded;
  GrayImage pixels;  // from the first trial
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::vector<Reconstruction> images;  // filled only when requested
};

struct SweepOptions {
  int threads = 1;
  bool keep_images = false;
  // Called from worker threads after each finished task, serialised.
  std::function<void(std::size_t done, std::size_t total)> progress;
};

// Raised when a task fails; carries every (image, snr) group that completed.
class SweepError : public Error {
 public:
  SweepError(const std::string& what, SweepResult partial)
      : Error(what), partial_(std::move(partial)) {}
  const SweepResult& partial() const { return partial_; }

 private:
  SweepResult partial_;
};

// Task (image i, snr j, trial t) is seeded with derive_seed(master_seed, {i, j, t}).
// Trials are averaged into one row per (image, snr, stage); AVERAGE rows hold
// the arithmetic mean over images (PSNR in dB). Rows are ordered by image,
// then SNR, then stage (decoded first, filters in configured order), with the
// AVERAGE block last. Output does not depend on the thread count.
SweepResult run_sweep(const SweepConfig& cfg, const std::vector<DatasetImage>& images,
                      const SweepOptions& options = {});
// Loads cfg.dataset_dir; throws ConfigError("no images") when it is empty.
SweepResult run_sweep(const SweepConfig& cfg, const SweepOptions& options = {});

inline constexpr std::string_view kCsvHeader =
    "image,snr_db,stage,ber,psnr_db,ssim,iters_mean,wall_ms";

// Shortest round-trip decimal; infinities print as inf and -inf.
std::string format_number(double v);

std::string to_csv(const SweepResult& result);
SweepResult parse_csv(std::string_view text);
void export_csv(const SweepResult& result, const std::filesystem::path& path);
SweepResult load_csv(const std::filesystem::path& path);

// <image>_<snr>dB_<stage>.png for every stored reconstruction.
void export_images(const SweepResult& result, const std::filesystem::path& dir);

// ber_vs_snr.csv, psnr_vs_snr.csv, ssim_vs_snr.csv from the AVERAGE rows, one
// column per stage.
void export_plotdata(const SweepResult& result, const std::filesystem::path& dir);

}  // namespace semlink
