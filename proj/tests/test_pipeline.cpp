#include <doctest.h>
#include <png.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "semlink/config.hpp"
#include "semlink/error.hpp"
#include "semlink/pipeline.hpp"
#include "semlink/random.hpp"

using namespace semlink;
namespace fs = std::filesystem;

namespace {

const fs::path kSet12 = fs::path(SEMLINK_DATA_DIR) / "set12";

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("semlink_test_" + tag + "_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_raw_png(const fs::path& p, png_uint_32 format, int w, int h) {
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(w);
  img.height = static_cast<png_uint_32>(h);
  img.format = format;
  std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(img), 90);
  REQUIRE(png_image_write_to_file(&img, p.string().c_str(), 0, buf.data(), 0, nullptr) != 0);
}

// Top-left crop, so tests stay fast.
DatasetImage crop(const DatasetImage& src, int size) {
  GrayImage out(size, size);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) out(x, y) = src.image(x, y);
  }
  return {src.name, out};
}

SweepConfig small_config() {
  SweepConfig cfg;
  cfg.m = 16;
  cfg.k = 4;
  cfg.coherence_frames = 64;
  cfg.snr_grid_db = {6.0, 12.0};
  cfg.master_seed = 5;
  return cfg;
}

std::vector<DatasetImage> small_images(int n, int size = 48) {
  const auto all = load_dataset(kSet12);
  std::vector<DatasetImage> out;
  for (int i = 0; i < n; ++i) out.push_back(crop(all[static_cast<std::size_t>(i)], size));
  return out;
}

}  // namespace

TEST_CASE("dataset loading") {
  const auto images = load_dataset(kSet12);
  REQUIRE(images.size() == 12);
  for (std::size_t i = 1; i < images.size(); ++i) CHECK(images[i - 1].name < images[i].name);
  CHECK(images[0].name == "01_cameraman");
  CHECK(images[0].image.width() == 256);
  CHECK(images[0].image.height() == 256);

  TempDir empty("empty");
  CHECK(load_dataset(empty.path).empty());
  SweepConfig cfg;
  cfg.dataset_dir = empty.path;
  CHECK_THROWS_WITH_AS(run_sweep(cfg), doctest::Contains("no images"), ConfigError);
  CHECK_THROWS_AS(load_dataset(empty.path / "missing"), IoError);

  TempDir bad("bad");
  write_raw_png(bad.path / "b.png", PNG_FORMAT_GRAY, 4, 4);
  write_raw_png(bad.path / "c.png", PNG_FORMAT_RGB, 4, 4);
  CHECK_THROWS_WITH_AS(load_dataset(bad.path), doctest::Contains("c.png"), FormatError);
  fs::remove(bad.path / "c.png");
  write_raw_png(bad.path / "d.png", PNG_FORMAT_LINEAR_Y, 4, 4);
  CHECK_THROWS_WITH_AS(load_dataset(bad.path), doctest::Contains("d.png"), FormatError);
  fs::remove(bad.path / "d.png");
  std::ofstream(bad.path / "e.png") << "not a png";
  CHECK_THROWS_WITH_AS(load_dataset(bad.path), doctest::Contains("e.png"), Error);
  fs::remove(bad.path / "e.png");
  std::ofstream(bad.path / "notes.txt") << "ignored";
  CHECK(load_dataset(bad.path).size() == 1);
}

TEST_CASE("transmit image") {
  const auto img = small_images(1, 64)[0].image;
  SweepConfig cfg = small_config();

  const Transmission clean = transmit_image(img, INFINITY, cfg, 1);
  CHECK(clean.decoded == img);
  CHECK(clean.ber == 0.0);
  CHECK(clean.stats.frames == 64u * 64u / 4u);

  const Transmission a = transmit_image(img, 4.0, cfg, 9);
  const Transmission b = transmit_image(img, 4.0, cfg, 9);
  const Transmission c = transmit_image(img, 4.0, cfg, 10);
  CHECK(a.decoded == b.decoded);
  CHECK(a.ber == b.ber);
  CHECK(a.ber > 0.0);
  CHECK_FALSE(a.decoded == c.decoded);
  CHECK(a.ber == ber(image_to_bits(img), image_to_bits(a.decoded)));
  CHECK(a.stats.iterations_mean >= 1.0);

  cfg.detector.variant = DetectorVariant::mmse;
  CHECK(transmit_image(img, INFINITY, cfg, 1).decoded == img);
  cfg.k = 3;  // 8-bit pixels do not fill frames of three 8-bit symbols evenly
  CHECK(transmit_image(img, INFINITY, cfg, 1).decoded == img);
}

TEST_CASE("sweep row layout") {
  const auto images = small_images(1);
  SweepConfig cfg = small_config();
  cfg.snr_grid_db = {10.0};
  cfg.filters = {FilterKind::median};
  const SweepResult r = run_sweep(cfg, images);
  REQUIRE(r.rows.size() == 4);
  CHECK(r.rows[0].image == images[0].name);
  CHECK(r.rows[0].stage == Stage::decoded);
  CHECK(r.rows[1].stage == Stage::median);
  CHECK(r.rows[2].image == kAverageRow);
  CHECK(r.rows[3].image == kAverageRow);
  CHECK(r.rows[2].ber == r.rows[0].ber);
  CHECK(r.rows[0].wall_ms == 0.0);

  cfg = small_config();
  const auto three = small_images(3);
  const SweepResult full = run_sweep(cfg, three);
  CHECK(full.rows.size() == (three.size() + 1) * cfg.snr_grid_db.size() * (cfg.filters.size() + 1));
  // AVERAGE rows are arithmetic means over images, PSNR in dB.
  for (const SweepRow& avg : full.rows) {
    if (avg.image != kAverageRow) continue;
    double b = 0, p = 0, s = 0;
    int n = 0;
    for (const SweepRow& row : full.rows) {
      if (row.image == kAverageRow || row.snr_db != avg.snr_db || row.stage != avg.stage) continue;
      b += row.ber;
      p += row.psnr_db;
      s += row.ssim;
      ++n;
    }
    CHECK(n == 3);
    CHECK(avg.ber == doctest::Approx(b / n).epsilon(1e-12));
    CHECK(avg.psnr_db == doctest::Approx(p / n).epsilon(1e-12));
    CHECK(avg.ssim == doctest::Approx(s / n).epsilon(1e-12));
  }
}

TEST_CASE("sweep seeding and stage consistency") {
  const auto images = small_images(2);
  SweepConfig cfg = small_config();
  cfg.filters = {FilterKind::gaussian, FilterKind::bm3d};
  SweepOptions keep;
  keep.keep_images = true;
  const SweepResult r = run_sweep(cfg, images, keep);
  REQUIRE(r.images.size() == images.size() * cfg.snr_grid_db.size() * 3);

  for (std::size_t i = 0; i < images.size(); ++i) {
    for (std::size_t j = 0; j < cfg.snr_grid_db.size(); ++j) {
      const Transmission tx =
          transmit_image(images[i].image, cfg.snr_grid_db[j], cfg, derive_seed(cfg.master_seed, {i, j, 0}));
      for (const Reconstruction& rec : r.images) {
        if (rec.image != images[i].name || rec.snr_db != cfg.snr_grid_db[j]) continue;
        if (rec.stage == Stage::decoded) CHECK(rec.pixels == tx.decoded);
        const auto row = std::find_if(r.rows.begin(), r.rows.end(), [&](const SweepRow& x) {
          return x.image == rec.image && x.snr_db == rec.snr_db && x.stage == rec.stage;
        });
        REQUIRE(row != r.rows.end());
        const MetricsReport m = evaluate(images[i].image, rec.pixels, rec.snr_db, rec.stage);
        CHECK(row->ber == m.ber);
        CHECK(row->psnr_db == m.psnr_db);
        CHECK(row->ssim == m.ssim);
      }
    }
  }

  // Adding trials keeps trial 0's stream.
  SweepConfig two = cfg;
  two.trials_per_image = 2;
  two.filters = {};
  const SweepResult r2 = run_sweep(two, images);
  const Transmission t0 = transmit_image(images[0].image, 6.0, cfg, derive_seed(cfg.master_seed, {0, 0, 0}));
  const Transmission t1 = transmit_image(images[0].image, 6.0, cfg, derive_seed(cfg.master_seed, {0, 0, 1}));
  CHECK(r2.rows[0].ber == doctest::Approx((t0.ber + t1.ber) / 2.0).epsilon(1e-15));
}

TEST_CASE("thread count does not change output") {
  const auto images = small_images(3);
  SweepConfig cfg = small_config();
  cfg.filters = {FilterKind::median, FilterKind::gaussian};
  cfg.trials_per_image = 2;
  SweepOptions one;
  one.threads = 1;
  SweepOptions four;
  four.threads = 4;
  const std::string a = to_csv(run_sweep(cfg, images, one));
  CHECK(a == to_csv(run_sweep(cfg, images, four)));
  CHECK(a == to_csv(run_sweep(cfg, images, one)));
  cfg.master_seed += 1;
  CHECK(a != to_csv(run_sweep(cfg, images, one)));
}

TEST_CASE("failed task keeps completed groups") {
  auto images = small_images(1, 32);
  images.push_back({"tiny", GrayImage(6, 6, 50)});
  SweepConfig cfg = small_config();
  cfg.snr_grid_db = {10.0};
  cfg.filters = {FilterKind::bm3d};
  cfg.ssim_window = SsimWindow::global;
  try {
    run_sweep(cfg, images);
    FAIL("expected SweepError");
  } catch (const SweepError& e) {
    CHECK(std::string(e.what()).find("bm3d") != std::string::npos);
    REQUIRE(e.partial().rows.size() == 2);
    CHECK(e.partial().rows[0].image == images[0].name);
  }
}

TEST_CASE("csv") {
  SweepResult empty;
  CHECK(to_csv(empty) == std::string(kCsvHeader) + "\n");
  CHECK(parse_csv(to_csv(empty)).rows.empty());

  SweepResult r;
  r.rows.push_back({"a", 0.0, Stage::decoded, 0.1, 12.345678901234567, 0.3, 21.5, 0.0});
  r.rows.push_back({"b_2", 10.0, Stage::bm3d, 1e-7, INFINITY, 1.0, 0.0, 3.25});
  r.rows.push_back({"AVERAGE", INFINITY, Stage::median, 0.0, INFINITY, 1.0, 1.0 / 3.0, 0.0});
  const std::string text = to_csv(r);
  CHECK(text.find("b_2,10,bm3d,1e-07,inf,1,0,3.25\n") != std::string::npos);
  CHECK(text.find("AVERAGE,inf,median,0,inf,1,") != std::string::npos);
  CHECK(parse_csv(text).rows == r.rows);

  TempDir dir("csv");
  export_csv(r, dir.path / "out.csv");
  CHECK(slurp(dir.path / "out.csv") == text);
  CHECK(load_csv(dir.path / "out.csv").rows == r.rows);

  CHECK_THROWS_AS(parse_csv("image,snr\n"), FormatError);
  CHECK_THROWS_AS(parse_csv(""), FormatError);
  CHECK_THROWS_AS(parse_csv(std::string(kCsvHeader) + "\na,1,decoded,0,0,0,0\n"), FormatError);
  CHECK_THROWS_AS(parse_csv(std::string(kCsvHeader) + "\na,x,decoded,0,0,0,0,0\n"), FormatError);
  CHECK_THROWS_AS(parse_csv(std::string(kCsvHeader) + "\na,1,wiener,0,0,0,0,0\n"), FormatError);
  SweepResult comma;
  comma.rows.push_back({"a,b", 0.0, Stage::decoded, 0, 0, 0, 0, 0});
  CHECK_THROWS_AS(to_csv(comma), FormatError);
  CHECK_THROWS_AS(export_csv(r, dir.path / "missing" / "out.csv"), IoError);

  CHECK(format_number(0.1) == "0.1");
  CHECK(format_number(-INFINITY) == "-inf");
  for (const double v : {1.0 / 3.0, 2.0 / 7.0, 1e-300, 123456789.125}) {
    CHECK(std::stod(format_number(v)) == v);
  }
}

TEST_CASE("image and plot export") {
  const auto images = small_images(2, 32);
  SweepConfig cfg = small_config();
  cfg.filters = {FilterKind::median};
  cfg.ssim_window = SsimWindow::global;
  cfg.snr_grid_db = {4.0, 20.0};
  SweepOptions keep;
  keep.keep_images = true;
  const SweepResult r = run_sweep(cfg, images, keep);

  TempDir dir("export");
  export_images(r, dir.path / "img");
  const fs::path decoded = dir.path / "img" / (images[1].name + "_20dB_decoded.png");
  REQUIRE(fs::exists(decoded));
  const auto stored = std::find_if(r.images.begin(), r.images.end(), [&](const Reconstruction& x) {
    return x.image == images[1].name && x.snr_db == 20.0 && x.stage == Stage::decoded;
  });
  REQUIRE(stored != r.images.end());
  CHECK(read_png(decoded) == stored->pixels);
  CHECK(fs::exists(dir.path / "img" / (images[0].name + "_4dB_median.png")));
  std::size_t count = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir.path / "img")) ++count;
  CHECK(count == 2u * 2u * 2u);

  export_plotdata(r, dir.path);
  const std::string psnr_series = slurp(dir.path / "psnr_vs_snr.csv");
  std::ostringstream expect;
  expect << "snr_db,decoded,median\n";
  for (const double snr : cfg.snr_grid_db) {
    expect << format_number(snr);
    for (const Stage s : {Stage::decoded, Stage::median}) {
      for (const SweepRow& row : r.rows) {
        if (row.image == kAverageRow && row.snr_db == snr && row.stage == s) expect << ',' << format_number(row.psnr_db);
      }
    }
    expect << '\n';
  }
  CHECK(psnr_series == expect.str());
  CHECK(fs::exists(dir.path / "ber_vs_snr.csv"));
  CHECK(fs::exists(dir.path / "ssim_vs_snr.csv"));
}

TEST_CASE("config json") {
  const nlohmann::json j = nlohmann::json::parse(R"({
    "snr_grid_db": [0, 10, "inf"],
    "m": 8, "k": 2,
    "constellation_order": 16,
    "detector": {"variant": "zf"},
    "filters": ["median"],
    "schedule_knots": {"median": [[0, 3], ["inf", 3]]},
    "dataset_dir": "imgs",
    "master_seed": 77,
    "trials_per_image": 3
  })");
  CHECK_THROWS_AS(sweep_config_from_json(j), ConfigError);  // knot SNR must be numeric

  nlohmann::json ok = j;
  ok["snr_grid_db"] = {0, 10};
  ok["schedule_knots"] = {{"median", {{0, 3}, {20, 3}}}, {"gaussian", {{0, 2.0}, {20, 1.0}}}};
  const SweepConfig cfg = sweep_config_from_json(ok, "/base");
  CHECK(cfg.m == 8);
  CHECK(cfg.k == 2);
  CHECK(cfg.constellation_order == 16);
  CHECK(cfg.detector.variant == DetectorVariant::zf);
  CHECK(cfg.detector.max_iters == 50);
  CHECK(cfg.filters == std::vector<FilterKind>{FilterKind::median});
  CHECK(cfg.schedule.at(10.0, FilterKind::gaussian).sigma == doctest::Approx(1.5));
  CHECK(cfg.schedule.at(0.0, FilterKind::bm3d).noise_level == 41.0);
  CHECK(cfg.dataset_dir == fs::path("/base/imgs"));
  CHECK(cfg.master_seed == 77u);
  CHECK(cfg.trials_per_image == 3);
  CHECK(cfg.coherence_frames == 1024);

  const SweepConfig back = sweep_config_from_json(to_json(cfg));
  CHECK(to_json(back) == to_json(cfg));

  nlohmann::json inf = nlohmann::json::parse(R"({"snr_grid_db": [0, "inf"], "filters": []})");
  CHECK(std::isinf(sweep_config_from_json(inf).snr_grid_db[1]));
  CHECK(to_json(sweep_config_from_json(inf))["snr_grid_db"][1] == "inf");

  auto rejects = [](const char* text) {
    CHECK_THROWS_AS(sweep_config_from_json(nlohmann::json::parse(text)), ConfigError);
  };
  auto rejects_any = [](const char* text) {
    CHECK_THROWS_AS(sweep_config_from_json(nlohmann::json::parse(text)), Error);
  };
  rejects(R"({"snr": [0]})");
  rejects(R"({"detector": {"variant": "admm", "rho": 1}})");
  rejects(R"({"snr_grid_db": [10, 0]})");
  rejects(R"({"snr_grid_db": []})");
  rejects(R"({"snr_grid_db": ["high"]})");
  rejects(R"({"m": 2, "k": 4})");
  rejects(R"({"constellation_order": 32})");
  rejects(R"({"trials_per_image": 0})");
  rejects(R"({"coherence_frames": 0})");
  rejects(R"({"filters": ["median", "median"]})");
  rejects(R"({"filters": ["wiener"]})");
  rejects_any(R"({"snr_grid_db": [0, 30]})");  // beyond the default schedule
  rejects_any(R"({"snr_grid_db": ["inf"]})");  // filters need a finite SNR
  rejects(R"({"schedule_knots": {"gaussian": [[0, 1], [20, 2]]}})");
  rejects(R"({"m": "many"})");
  rejects(R"({"gray_labeling": "natural"})");
  rejects_any(R"({"detector": {"variant": "ml"}})");  // 256^4 hypotheses

  TempDir dir("cfg");
  std::ofstream(dir.path / "c.json") << R"({"dataset_dir": "d", "filters": []})";
  CHECK(load_sweep_config(dir.path / "c.json").dataset_dir == dir.path / "d");
  std::ofstream(dir.path / "broken.json") << "{";
  CHECK_THROWS_AS(load_sweep_config(dir.path / "broken.json"), ConfigError);
  CHECK_THROWS_AS(load_sweep_config(dir.path / "none.json"), IoError);
}
