#include "semlink/pipeline.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cctype>
#include <charconv>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

#include "semlink/channel.hpp"
#include "semlink/detector.hpp"
#include "semlink/modem.hpp"
#include "semlink/random.hpp"
#include "semlink/restore.hpp"

namespace semlink {

namespace fs = std::filesystem;

std::vector<DatasetImage> load_dataset(const fs::path& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw IoError("dataset directory not found: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::string ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char ch) { return std::tolower(ch); });
    if (ext == ".png") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end(),
            [](const fs::path& a, const fs::path& b) { return a.filename() < b.filename(); });
  std::vector<DatasetImage> out;
  out.reserve(files.size());
  for (const auto& f : files) out.push_back({f.stem().string(), read_png(f)});
  return out;
}

Transmission transmit_image(const GrayImage& img, double snr_db, const SweepConfig& cfg,
                            std::uint64_t seed) {
  const Constellation c(cfg.constellation_order, cfg.labeling);
  const BitStream bits = image_to_bits(img);
  const ModulatedStream stream = modulate(bits, c, cfg.k);
  const LinkPowers powers = snr_to_powers(snr_db);

  const Eigen::Index z = stream.frames.cols();
  const Eigen::Index block = cfg.coherence_frames;
  Eigen::MatrixXcd hard(cfg.k, z);
  long long iterations = 0;
  std::size_t converged = 0;
  for (Eigen::Index start = 0, b = 0; start < z; start += block, ++b) {
    const Eigen::Index n = std::min(block, z - start);
    ChannelRealization ch = sample_channel(cfg.m, cfg.k, derive_seed(seed, {0, static_cast<std::uint64_t>(b)}));
    ch.rho = powers.rho;
    ch.sigma2 = powers.sigma2;
    ComplexGaussian noise(derive_seed(seed, {1, static_cast<std::uint64_t>(b)}));
    const Eigen::MatrixXcd y = transmit_block(stream.frames.middleCols(start, n), ch, noise);
    const BlockDetector detector(ch, c, cfg.detector);
    for (Eigen::Index j = 0; j < n; ++j) {
      const DetectionResult r = detector.detect(y.col(j));
      hard.col(start + j) = r.hard_symbols;
      iterations += r.iterations_used;
      converged += r.converged ? 1 : 0;
    }
  }

  const BitStream received = demodulate(hard, c, stream.padding_bits);
  Transmission t;
  t.decoded = bits_to_image(received, img.width(), img.height());
  t.ber = ber(bits, received);
  t.stats.frames = static_cast<std::size_t>(z);
  if (z > 0) {
    t.stats.iterations_mean = static_cast<double>(iterations) / static_cast<double>(z);
    t.stats.converged_fraction = static_cast<double>(converged) / static_cast<double>(z);
  }
  return t;
}

namespace {

struct StageOutcome {
  MetricsReport report;
  GrayImage pixels;
};

struct TaskOutcome {
  std::vector<StageOutcome> stages;  // decoded, then cfg.filters
  double iters_mean = 0.0;
  double wall_ms = 0.0;
};

struct Task {
  std::size_t image;
  std::size_t snr;
  std::size_t trial;
};

TaskOutcome run_task(const SweepConfig& cfg, const DatasetImage& img, double snr_db,
                     std::uint64_t seed, bool keep_pixels) {
  const auto t0 = std::chrono::steady_clock::now();
  SsimParams params;
  params.window = cfg.ssim_window;

  const Transmission tx = transmit_image(img.image, snr_db, cfg, seed);
  TaskOutcome out;
  out.iters_mean = tx.stats.iterations_mean;
  MetricsReport decoded = evaluate(img.image, tx.decoded, snr_db, Stage::decoded, params);
  decoded.ber = tx.ber;
  out.stages.push_back({decoded, keep_pixels ? tx.decoded : GrayImage{}});
  for (const FilterKind kind : cfg.filters) {
    const GrayImage filtered = apply_filter(tx.decoded, cfg.schedule.at(snr_db, kind));
    const Stage stage = parse_stage(to_string(kind));
    out.stages.push_back({evaluate(img.image, filtered, snr_db, stage, params),
                          keep_pixels ? filtered : GrayImage{}});
  }
  if (cfg.record_wall_time) {
    out.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  }
  return out;
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (const double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

// Rows for every (image, snr) whose trials all finished, plus AVERAGE rows for
// SNR points where every image is present.
SweepResult assemble(const SweepConfig& cfg, const std::vector<DatasetImage>& images,
                     const std::vector<std::optional<TaskOutcome>>& outcomes, bool keep_images) {
  const std::size_t n_snr = cfg.snr_grid_db.size();
  const std::size_t n_trials = static_cast<std::size_t>(cfg.trials_per_image);
  const std::size_t n_stages = cfg.filters.size() + 1;
  auto outcome = [&](std::size_t i, std::size_t j, std::size_t t) -> const std::optional<TaskOutcome>& {
    return outcomes[(i * n_snr + j) * n_trials + t];
  };

  SweepResult result;
  // per snr, per stage: one mean row per complete image
  std::vector<std::vector<std::vector<SweepRow>>> by_snr(n_snr, std::vector<std::vector<SweepRow>>(n_stages));
  for (std::size_t i = 0; i < images.size(); ++i) {
    for (std::size_t j = 0; j < n_snr; ++j) {
      bool complete = true;
      for (std::size_t t = 0; t < n_trials; ++t) complete = complete && outcome(i, j, t).has_value();
      if (!complete) continue;
      for (std::size_t s = 0; s < n_stages; ++s) {
        std::vector<double> b, p, q, it, w;
        for (std::size_t t = 0; t < n_trials; ++t) {
          const TaskOutcome& o = *outcome(i, j, t);
          b.push_back(o.stages[s].report.ber);
          p.push_back(o.stages[s].report.psnr_db);
          q.push_back(o.stages[s].report.ssim);
          it.push_back(o.iters_mean);
          w.push_back(o.wall_ms);
        }
        const Stage stage = outcome(i, j, 0)->stages[s].report.stage;
        SweepRow row{images[i].name, cfg.snr_grid_db[j], stage, mean(b), mean(p), mean(q), mean(it), mean(w)};
        result.rows.push_back(row);
        by_snr[j][s].push_back(row);
        if (keep_images) {
          result.images.push_back({images[i].name, cfg.snr_grid_db[j], stage, outcome(i, j, 0)->stages[s].pixels});
        }
      }
    }
  }
  for (std::size_t j = 0; j < n_snr; ++j) {
    for (std::size_t s = 0; s < n_stages; ++s) {
      const auto& rows = by_snr[j][s];
      if (rows.size() != images.size() || rows.empty()) continue;
      std::vector<double> b, p, q, it, w;
      for (const SweepRow& r : rows) {
        b.push_back(r.ber);
        p.push_back(r.psnr_db);
        q.push_back(r.ssim);
        it.push_back(r.iters_mean);
        w.push_back(r.wall_ms);
      }
      result.rows.push_back({std::string(kAverageRow), cfg.snr_grid_db[j], rows.front().stage, mean(b),
                             mean(p), mean(q), mean(it), mean(w)});
    }
  }
  return result;
}

}  // namespace

SweepResult run_sweep(const SweepConfig& cfg, const std::vector<DatasetImage>& images,
                      const SweepOptions& options) {
  cfg.validate();
  if (images.empty()) throw ConfigError("no images");

  std::vector<Task> tasks;
  for (std::size_t i = 0; i < images.size(); ++i) {
    for (std::size_t j = 0; j < cfg.snr_grid_db.size(); ++j) {
      for (std::size_t t = 0; t < static_cast<std::size_t>(cfg.trials_per_image); ++t) {
        tasks.push_back({i, j, t});
      }
    }
  }
  std::vector<std::optional<TaskOutcome>> outcomes(tasks.size());
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first_error;
  std::mutex mutex;
  std::size_t done = 0;

  auto worker = [&] {
    for (;;) {
      if (failed.load()) return;
      const std::size_t idx = next.fetch_add(1);
      if (idx >= tasks.size()) return;
      const Task& task = tasks[idx];
      try {
        const std::uint64_t seed = derive_seed(cfg.master_seed, {task.image, task.snr, task.trial});
        outcomes[idx] = run_task(cfg, images[task.image], cfg.snr_grid_db[task.snr], seed,
                                 options.keep_images && task.trial == 0);
      } catch (...) {
        std::lock_guard lock(mutex);
        if (!first_error) first_error = std::current_exception();
        failed.store(true);
        return;
      }
      if (options.progress) {
        std::lock_guard lock(mutex);
        options.progress(++done, tasks.size());
      }
    }
  };

  const int threads = std::max(1, std::min<int>(options.threads, static_cast<int>(tasks.size())));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  }

  SweepResult result = assemble(cfg, images, outcomes, options.keep_images);
  if (first_error) {
    std::string what = "sweep aborted";
    try {
      std::rethrow_exception(first_error);
    } catch (const std::exception& e) {
      what += ": ";
      what += e.what();
    } catch (...) {
    }
    throw SweepError(what, std::move(result));
  }
  return result;
}

SweepResult run_sweep(const SweepConfig& cfg, const SweepOptions& options) {
  cfg.validate();
  const auto images = load_dataset(cfg.dataset_dir);
  if (images.empty()) throw ConfigError("no images in " + cfg.dataset_dir.string());
  return run_sweep(cfg, images, options);
}

std::string format_number(double v) {
  std::array<char, 64> buf{};
  const auto r = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), r.ptr);
}

namespace {

void check_name(const std::string& name) {
  if (name.empty() || name.find_first_of(",\n\r\"") != std::string::npos) {
    throw FormatError("image name not representable in CSV: '" + name + "'");
  }
}

double parse_number(std::string_view s, std::size_t line) {
  double v = 0.0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc{} || r.ptr != s.data() + s.size()) {
    throw FormatError("line " + std::to_string(line) + ": bad number '" + std::string(s) + "'");
  }
  return v;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << content;
  out.close();
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace

std::string to_csv(const SweepResult& result) {
  std::string out(kCsvHeader);
  out += '\n';
  for (const SweepRow& r : result.rows) {
    check_name(r.image);
    out += r.image;
    for (const std::string& field :
         {format_number(r.snr_db), std::string(to_string(r.stage)), format_number(r.ber),
          format_number(r.psnr_db), format_number(r.ssim), format_number(r.iters_mean),
          format_number(r.wall_ms)}) {
      out += ',';
      out += field;
    }
    out += '\n';
  }
  return out;
}

SweepResult parse_csv(std::string_view text) {
  SweepResult result;
  std::size_t line_no = 0;
  bool header = true;
  while (!text.empty()) {
    const std::size_t eol = text.find('\n');
    std::string_view line = text.substr(0, eol);
    text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (header) {
      if (line != kCsvHeader) throw FormatError("unexpected CSV header: '" + std::string(line) + "'");
      header = false;
      continue;
    }
    if (line.empty()) continue;
    std::vector<std::string_view> f;
    for (std::size_t pos = 0;;) {
      const std::size_t comma = line.find(',', pos);
      f.push_back(line.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos));
      if (comma == std::string_view::npos) break;
      pos = comma + 1;
    }
    if (f.size() != 8) {
      throw FormatError("line " + std::to_string(line_no) + ": expected 8 fields, got " +
                        std::to_string(f.size()));
    }
    SweepRow r;
    r.image = std::string(f[0]);
    r.snr_db = parse_number(f[1], line_no);
    r.stage = parse_stage(f[2]);
    r.ber = parse_number(f[3], line_no);
    r.psnr_db = parse_number(f[4], line_no);
    r.ssim = parse_number(f[5], line_no);
    r.iters_mean = parse_number(f[6], line_no);
    r.wall_ms = parse_number(f[7], line_no);
    result.rows.push_back(std::move(r));
  }
  if (header) throw FormatError("empty CSV");
  return result;
}

void export_csv(const SweepResult& result, const fs::path& path) { write_file(path, to_csv(result)); }

SweepResult load_csv(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_csv(ss.str());
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void export_images(const SweepResult& result, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  for (const Reconstruction& r : result.images) {
    write_png(r.pixels, dir / (r.image + "_" + format_number(r.snr_db) + "dB_" +
                               std::string(to_string(r.stage)) + ".png"));
  }
}

void export_plotdata(const SweepResult& result, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

  std::vector<Stage> stages;
  std::vector<double> snrs;
  std::map<std::pair<double, Stage>, const SweepRow*> cell;
  for (const SweepRow& r : result.rows) {
    if (r.image != kAverageRow) continue;
    if (std::find(stages.begin(), stages.end(), r.stage) == stages.end()) stages.push_back(r.stage);
    if (std::find(snrs.begin(), snrs.end(), r.snr_db) == snrs.end()) snrs.push_back(r.snr_db);
    cell[{r.snr_db, r.stage}] = &r;
  }
  const std::array<std::pair<const char*, double SweepRow::*>, 3> series = {{
      {"ber_vs_snr.csv", &SweepRow::ber},
      {"psnr_vs_snr.csv", &SweepRow::psnr_db},
      {"ssim_vs_snr.csv", &SweepRow::ssim},
  }};
  for (const auto& [file, field] : series) {
    std::string out = "snr_db";
    for (const Stage s : stages) {
      out += ',';
      out += to_string(s);
    }
    out += '\n';
    for (const double snr : snrs) {
      out += format_number(snr);
      for (const Stage s : stages) {
        out += ',';
        const auto it = cell.find({snr, s});
        if (it != cell.end()) out += format_number(it->second->*field);
      }
      out += '\n';
    }
    write_file(dir / file, out);
  }
}

}  // namespace semlink
