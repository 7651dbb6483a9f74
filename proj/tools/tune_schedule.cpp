// Picks per-SNR Gaussian sigma and BM3D noise levels that maximise the mean
// PSNR over a dataset. The 0 dB and last-grid-point values are held at the
// configured schedule's end knots; interior values are searched over a fixed
// candidate list, constrained to be non-increasing in SNR.
#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <iostream>
#include <vector>

#include "semlink/config.hpp"
#include "semlink/pipeline.hpp"
#include "semlink/random.hpp"
#include "semlink/restore.hpp"

using namespace semlink;

namespace {

struct Candidates {
  FilterKind kind;
  std::vector<double> values;  // ascending
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tune the post-filter schedule on a dataset"};
  std::string config_path;
  std::string out_path;
  std::uint64_t seed = 9001;
  app.add_option("--config", config_path, "sweep config (dataset, link, SNR grid)")->required();
  app.add_option("--out", out_path, "write schedule_knots JSON here");
  app.add_option("--seed", seed, "master seed for the tuning transmissions");
  CLI11_PARSE(app, argc, argv);

  try {
    SweepConfig cfg = load_sweep_config(config_path);
    const auto images = load_dataset(cfg.dataset_dir);
    if (images.empty()) throw ConfigError("no images");

    std::vector<Candidates> searches = {
        {FilterKind::gaussian, {0.5, 0.55, 0.6, 0.65, 0.7, 0.75, 0.8, 0.9, 1.0, 1.1, 1.2, 1.3}},
        {FilterKind::bm3d, {5, 7, 9, 11, 13, 15, 17, 20, 23, 26, 30, 35, 41}},
    };
    const auto& grid = cfg.snr_grid_db;
    nlohmann::json knots = nlohmann::json::object();
    knots["median"] = nlohmann::json::array({{grid.front(), 3}, {grid.back(), 3}});
    std::vector<std::vector<GrayImage>> decoded(grid.size());
    for (std::size_t j = 0; j < grid.size(); ++j) {
      for (std::size_t i = 0; i < images.size(); ++i) {
        decoded[j].push_back(transmit_image(images[i].image, grid[j], cfg, derive_seed(seed, {i, j, 0})).decoded);
      }
    }

    for (const Candidates& search : searches) {
      const auto& ends = cfg.schedule.knots(search.kind);
      const double first = ends.front().second;
      const double last = ends.back().second;
      std::vector<double> chosen(grid.size(), last);
      chosen.front() = first;
      for (std::size_t j = 1; j + 1 < grid.size(); ++j) {
        const double ceiling = chosen[j - 1];
        if (ceiling <= last) break;
        double best_value = last;
        double best_psnr = -1.0;
        for (const double v : search.values) {
          if (v < last || v > ceiling) continue;
          FilterSpec spec{search.kind, 3, v, v};
          double sum = 0.0;
          for (std::size_t i = 0; i < images.size(); ++i) {
            sum += psnr(images[i].image, apply_filter(decoded[j][i], spec));
          }
          const double mean = sum / static_cast<double>(images.size());
          std::fprintf(stderr, "%s snr %g value %g psnr %.3f\n", std::string(to_string(search.kind)).c_str(),
                       grid[j], v, mean);
          if (mean > best_psnr) {
            best_psnr = mean;
            best_value = v;
          }
        }
        chosen[j] = best_value;
      }
      nlohmann::json list = nlohmann::json::array();
      for (std::size_t j = 0; j < grid.size(); ++j) list.push_back({grid[j], chosen[j]});
      knots[std::string(to_string(search.kind))] = list;
    }

    const std::string text = knots.dump(2);
    if (out_path.empty()) {
      std::cout << text << '\n';
    } else {
      std::FILE* f = std::fopen(out_path.c_str(), "w");
      if (!f) throw IoError("cannot write " + out_path);
      std::fprintf(f, "%s\n", text.c_str());
      std::fclose(f);
    }
  } catch (const std::exception& e) {
    std::cerr << "tune_schedule: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
