#include "semlink/config.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <string>

#include "semlink/error.hpp"

namespace semlink {

using nlohmann::json;

void SweepConfig::validate() const {
  if (snr_grid_db.empty()) throw ConfigError("snr_grid_db is empty");
  for (std::size_t i = 0; i < snr_grid_db.size(); ++i) {
    if (std::isnan(snr_grid_db[i])) throw ConfigError("snr_grid_db contains NaN");
    if (i > 0 && !(snr_grid_db[i] > snr_grid_db[i - 1])) {
      throw ConfigError("snr_grid_db must be strictly ascending");
    }
  }
  if (k < 1 || m < k) {
    throw ConfigError("antenna counts need m >= k >= 1, got m=" + std::to_string(m) +
                      " k=" + std::to_string(k));
  }
  Constellation check(constellation_order, labeling);
  if (coherence_frames < 1) throw ConfigError("coherence_frames must be positive");
  if (trials_per_image < 1) throw ConfigError("trials_per_image must be positive");
  detector.validate();
  if (detector.variant == DetectorVariant::ml &&
      std::pow(static_cast<double>(constellation_order), k) > kMaxMlHypotheses) {
    throw SearchSpaceError("ml detector is limited to Q^K <= 1e6 hypotheses");
  }
  std::set<FilterKind> seen;
  for (const FilterKind f : filters) {
    if (!seen.insert(f).second) {
      throw ConfigError("filter '" + std::string(to_string(f)) + "' listed twice");
    }
    for (const double snr : snr_grid_db) schedule.at(snr, f);
  }
}

namespace {

void reject_unknown(const json& obj, const std::set<std::string>& known, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& [key, value] : obj.items()) {
    if (!known.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

double snr_value(const json& v) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string() && v.get<std::string>() == "inf") {
    return std::numeric_limits<double>::infinity();
  }
  throw ConfigError("snr_grid_db entries must be numbers or \"inf\"");
}

template <typename T>
T get(const json& obj, const char* key, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

std::string_view to_string(GrayLabeling l) {
  return l == GrayLabeling::first_bit_fastest ? "first_bit_fastest" : "first_bit_slowest";
}

GrayLabeling parse_labeling(const std::string& s) {
  if (s == "first_bit_fastest") return GrayLabeling::first_bit_fastest;
  if (s == "first_bit_slowest") return GrayLabeling::first_bit_slowest;
  throw ConfigError("unknown gray_labeling '" + s + "'");
}

std::string_view to_string(SsimWindow w) {
  return w == SsimWindow::global ? "global" : "gaussian_11x11";
}

SsimWindow parse_ssim_window(const std::string& s) {
  if (s == "global") return SsimWindow::global;
  if (s == "gaussian_11x11") return SsimWindow::gaussian_11x11;
  throw ConfigError("unknown ssim_window '" + s + "'");
}

}  // namespace

SweepConfig sweep_config_from_json(const json& j, const std::filesystem::path& base_dir) {
  reject_unknown(j,
                 {"snr_grid_db", "m", "k", "constellation_order", "gray_labeling",
                  "coherence_frames", "detector", "filters", "schedule_knots", "dataset_dir",
                  "master_seed", "trials_per_image", "ssim_window", "record_wall_time"},
                 "sweep config");
  SweepConfig cfg;
  if (j.contains("snr_grid_db")) {
    const json& grid = j.at("snr_grid_db");
    if (!grid.is_array()) throw ConfigError("snr_grid_db must be an array");
    cfg.snr_grid_db.clear();
    for (const json& v : grid) cfg.snr_grid_db.push_back(snr_value(v));
  }
  cfg.m = get(j, "m", cfg.m);
  cfg.k = get(j, "k", cfg.k);
  cfg.constellation_order = get(j, "constellation_order", cfg.constellation_order);
  if (j.contains("gray_labeling")) cfg.labeling = parse_labeling(get<std::string>(j, "gray_labeling", ""));
  cfg.coherence_frames = get(j, "coherence_frames", cfg.coherence_frames);
  if (j.contains("detector")) {
    const json& d = j.at("detector");
    reject_unknown(d, {"variant", "penalty", "max_iters", "tolerance", "local_search"}, "detector");
    if (d.contains("variant")) cfg.detector.variant = parse_detector_variant(get<std::string>(d, "variant", ""));
    cfg.detector.penalty = get(d, "penalty", cfg.detector.penalty);
    cfg.detector.max_iters = get(d, "max_iters", cfg.detector.max_iters);
    cfg.detector.tolerance = get(d, "tolerance", cfg.detector.tolerance);
    cfg.detector.local_search = get(d, "local_search", cfg.detector.local_search);
  }
  if (j.contains("filters")) {
    cfg.filters.clear();
    for (const auto& name : get<std::vector<std::string>>(j, "filters", {})) {
      cfg.filters.push_back(parse_filter_kind(name));
    }
  }
  if (j.contains("schedule_knots")) {
    const json& s = j.at("schedule_knots");
    reject_unknown(s, {"median", "gaussian", "bm3d"}, "schedule_knots");
    for (const auto& [name, knots] : s.items()) {
      FilterSchedule::Knots parsed;
      try {
        for (const json& knot : knots) {
          if (!knot.is_array() || knot.size() != 2) {
            throw ConfigError("schedule knots must be [snr_db, value] pairs");
          }
          parsed.emplace_back(knot.at(0).get<double>(), knot.at(1).get<double>());
        }
      } catch (const json::exception& e) {
        throw ConfigError("bad schedule for '" + name + "': " + e.what());
      }
      cfg.schedule.set(parse_filter_kind(name), std::move(parsed));
    }
  }
  if (j.contains("dataset_dir")) {
    std::filesystem::path dir = get<std::string>(j, "dataset_dir", "");
    cfg.dataset_dir = dir.is_relative() && !base_dir.empty() ? base_dir / dir : dir;
  }
  cfg.master_seed = get(j, "master_seed", cfg.master_seed);
  cfg.trials_per_image = get(j, "trials_per_image", cfg.trials_per_image);
  if (j.contains("ssim_window")) cfg.ssim_window = parse_ssim_window(get<std::string>(j, "ssim_window", ""));
  cfg.record_wall_time = get(j, "record_wall_time", cfg.record_wall_time);
  cfg.validate();
  return cfg;
}

json to_json(const SweepConfig& cfg) {
  json grid = json::array();
  for (const double s : cfg.snr_grid_db) {
    if (std::isinf(s)) {
      grid.push_back("inf");
    } else {
      grid.push_back(s);
    }
  }
  json filters = json::array();
  for (const FilterKind f : cfg.filters) filters.push_back(std::string(to_string(f)));
  json knots = json::object();
  for (const auto kind : {FilterKind::median, FilterKind::gaussian, FilterKind::bm3d}) {
    if (!cfg.schedule.has(kind)) continue;
    json list = json::array();
    for (const auto& [snr, value] : cfg.schedule.knots(kind)) list.push_back({snr, value});
    knots[std::string(to_string(kind))] = list;
  }
  return {
      {"snr_grid_db", grid},
      {"m", cfg.m},
      {"k", cfg.k},
      {"constellation_order", cfg.constellation_order},
      {"gray_labeling", std::string(to_string(cfg.labeling))},
      {"coherence_frames", cfg.coherence_frames},
      {"detector",
       {{"variant", std::string(to_string(cfg.detector.variant))},
        {"penalty", cfg.detector.penalty},
        {"max_iters", cfg.detector.max_iters},
        {"tolerance", cfg.detector.tolerance},
        {"local_search", cfg.detector.local_search}}},
      {"filters", filters},
      {"schedule_knots", knots},
      {"dataset_dir", cfg.dataset_dir.string()},
      {"master_seed", cfg.master_seed},
      {"trials_per_image", cfg.trials_per_image},
      {"ssim_window", std::string(to_string(cfg.ssim_window))},
      {"record_wall_time", cfg.record_wall_time},
  };
}

SweepConfig load_sweep_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return sweep_config_from_json(j, path.parent_path());
}

}  // namespace semlink
