#pragma once

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <vector>

#include "semlink/detector.hpp"
#include "semlink/metrics.hpp"
#include "semlink/modem.hpp"
#include "semlink/restore.hpp"

namespace semlink {

struct SweepConfig {
  // Ascending; +inf denotes a noiseless link.
  std::vector<double> snr_grid_db = {0, 2, 4, 6, 8, 10, 12, 14, 16, 18, 20};
  int m = 64;
  int k = 4;
  int constellation_order = 256;
  GrayLabeling labeling = GrayLabeling::first_bit_fastest;
  int coherence_frames = 1024;
  DetectorConfig detector;
  std::vector<FilterKind> filters = {FilterKind::median, FilterKind::gaussian, FilterKind::bm3d};
  FilterSchedule schedule = FilterSchedule::defaults();
  std::filesystem::path dataset_dir = "data/set12";
  std::uint64_t master_seed = 1;
  int trials_per_image = 1;
  SsimWindow ssim_window = SsimWindow::gaussian_11x11;
  // Off by default so that result files depend only on the configuration.
  bool record_wall_time = false;

  void validate() const;
};

// Keys mirror the struct fields; unknown keys throw ConfigError. Missing keys
// keep their defaults. A relative dataset_dir is resolved against `base_dir`.
SweepConfig sweep_config_from_json(const nlohmann::json& j,
                                   const std::filesystem::path& base_dir = {});
nlohmann::json to_json(const SweepConfig& cfg);
SweepConfig load_sweep_config(const std::filesystem::path& path);

}  // namespace semlink
