#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "dyntta/checkpoint.hpp"
#include "dyntta/estimate.hpp"
#include "dyntta/manifest.hpp"
#include "dyntta/png_io.hpp"
#include "dyntta/report.hpp"
#include "dyntta/rng.hpp"
#include "dyntta/svg.hpp"

#include <filesystem>

using namespace dyntta;
namespace fs = std::filesystem;

namespace {
struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("dyntta_io_" + std::to_string(Rng(0).next_u64() % 100000));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};
}  // namespace

TEST_CASE("png round-trips 8-bit data exactly") {
  Rng rng(1);
  const int h = 13, w = 9;  // odd sizes exercise the row filters
  std::vector<uint8_t> rgb(h * w * 3);
  for (auto& v : rgb) v = static_cast<uint8_t>(rng.uniform_int(256));
  std::vector<uint8_t> bytes = io::encode_png(rgb, h, w);
  int h2 = 0, w2 = 0;
  std::vector<uint8_t> decoded = io::decode_png(bytes, h2, w2);
  CHECK(h2 == h);
  CHECK(w2 == w);
  CHECK(decoded == rgb);
}

TEST_CASE("png write/read uses round-half-up 255 quantization") {
  TempDir dir;
  Tensor img({3, 4, 4});
  Rng rng(2);
  for (int64_t i = 0; i < img.size(); ++i) img.data[i] = rng.uniform();
  img.data[0] = 0.5f / 255.0f;   // rounds up to 1
  img.data[1] = 0.49f / 255.0f;  // rounds down to 0
  io::write_png(dir.file("a.png"), img);
  Tensor back = io::read_png(dir.file("a.png"));
  CHECK(back.shape == img.shape);
  CHECK(back.data[0] == doctest::Approx(1.0f / 255).epsilon(1e-6));
  CHECK(back.data[1] == 0.0f);
  // quantization error bounded by half a step
  CHECK((back.data - img.data).abs().maxCoeff() <= 0.5f / 255.0f + 1e-6f);
  // a second write of the decoded image is byte-identical
  io::write_png(dir.file("b.png"), back);
  Tensor again = io::read_png(dir.file("b.png"));
  CHECK((again.data == back.data).all());
}

TEST_CASE("dataset directory round-trip preserves order and labels") {
  TempDir dir;
  corrupt::Dataset data = corrupt::make_dataset(3, 40, 20);
  io::write_dataset_dir(dir.path.string(), "train", data.train);
  corrupt::ImageBatch back = io::read_dataset_dir(dir.path.string(), "train");
  CHECK(back.n == data.train.n);
  CHECK(back.labels == data.train.labels);
  // png quantization only
  CHECK((back.data - data.train.data).abs().maxCoeff() <= 0.5f / 255.0f + 1e-6f);
}

TEST_CASE("sha1 known vectors") {
  CHECK(ckpt::sha1_hex("abc", 3) == "a9993e364706816aba3e25717850c26c9cd0d89d");
  CHECK(ckpt::sha1_hex("", 0) == "da39a3ee5e6b4b0d3255bfef95601890afd80709");
}

TEST_CASE("classifier checkpoints round-trip bit-exactly") {
  TempDir dir;
  cls::ClassifierParams params = cls::ClassifierParams::init(7, 10);
  ckpt::save_classifier(dir.file("c.ckpt"), params);
  cls::ClassifierParams back = ckpt::load_classifier(dir.file("c.ckpt"));
  CHECK(back.frozen);
  back.frozen = false;
  CHECK(ckpt::digest_params(back) == ckpt::digest_params(params));
  ckpt::save_classifier(dir.file("c2.ckpt"), back);
  CHECK(ckpt::sha1_file(dir.file("c.ckpt")) == ckpt::sha1_file(dir.file("c2.ckpt")));
}

TEST_CASE("config files parse key=value lines") {
  auto kv = io::parse_config_text(
      "# comment\n"
      "epochs = 7\n"
      "scenario=blind   # trailing comment\n"
      "\n"
      "mix_ops = rotate,solarize\n");
  CHECK(kv.at("epochs") == "7");
  CHECK(kv.at("scenario") == "blind");
  CHECK(kv.at("mix_ops") == "rotate,solarize");
  CHECK_THROWS_AS(io::parse_config_text("not a pair\n"), ContractError);

  train::TrainConfig config;
  train::apply_config_kv(config, kv);
  CHECK(config.epochs == 7);
  CHECK(config.scenario == corrupt::Scenario::Blind);
  CHECK(config.mix_ops == std::vector<std::string>({"rotate", "solarize"}));
  CHECK_THROWS_AS(train::apply_config_kv(config, {{"bogus", "1"}}), ContractError);
}

TEST_CASE("config digests mask the ablated factor") {
  train::TrainConfig a, b;
  a.mode = head::Mode::Full;
  b.mode = head::Mode::BlendOnly;
  CHECK(train::config_digest(a) != train::config_digest(b));
  CHECK(train::config_digest(a, {"mode"}) == train::config_digest(b, {"mode"}));
}

TEST_CASE("eval report serialization has one row per cell") {
  train::EvalReport report;
  report.clean_accuracy = 0.9;
  report.cells.push_back({corrupt::CorruptionKind::SpeckleNoise, 5, 0.5, 0.1});
  report.cells.push_back({corrupt::CorruptionKind::Fog, 3, 0.7, -0.02});
  report.recompute_aggregates();
  CHECK(report.all_mean == doctest::Approx(0.6));
  CHECK(report.unseen_mean == doctest::Approx(0.5));

  const std::string csv = io::eval_report_csv(report);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);  // header + clean + 2 cells
  CHECK(csv.find("speckle-noise,5,0.500000,0.100000") != std::string::npos);
  const std::string json = io::eval_report_json(report);
  CHECK(json.find("\"unseen_mean\"") != std::string::npos);
}

TEST_CASE("weight boxplot has exactly one box per kind/group") {
  est::WeightStats stats;
  Rng rng(5);
  for (const char* name : {"rotate", "scale", "lowpass", "highpass", "neural-enhance"}) {
    std::vector<float> vals;
    for (int i = 0; i < 20; ++i) vals.push_back(rng.uniform() * 0.2f);
    stats.group_names.push_back(name);
    stats.group_weights.push_back(est::summarize(vals));
  }
  stats.sample_count = 20;
  const std::string svg = io::weight_boxplot_svg(stats);
  size_t count = 0, pos = 0;
  while ((pos = svg.find("<g class=\"box\">", pos)) != std::string::npos) {
    ++count;
    pos += 10;
  }
  CHECK(count == stats.group_names.size());
}

TEST_CASE("run manifests round-trip and verify input hashes") {
  TempDir dir;
  io::write_text_atomic(dir.file("input.txt"), "payload");
  io::RunManifest m;
  m.command = "eval";
  m.config = {{"kinds", "unseen"}};
  m.seeds = {1, 2};
  m.input_hashes[dir.file("input.txt")] = ckpt::sha1_file(dir.file("input.txt"));
  m.outputs = {dir.file("out.json")};
  m.duration_seconds = 1.25;
  io::write_manifest(dir.file("out"), m);

  io::RunManifest back = io::RunManifest::from_json(io::read_text(dir.file("out.manifest.json")));
  CHECK(back.command == "eval");
  CHECK(back.seeds == m.seeds);
  io::verify_manifest_inputs(back);

  io::write_text_atomic(dir.file("input.txt"), "tampered");
  CHECK_THROWS_AS(io::verify_manifest_inputs(back), ContractError);
}

TEST_CASE("summary stats order and singleton behavior") {
  est::SummaryStats s = est::summarize({0.4f});
  CHECK(s.min == s.max);
  CHECK(s.min == s.median);
  CHECK(s.min == s.mean);

  est::SummaryStats t = est::summarize({0.1f, 0.9f, 0.5f, 0.3f, 0.7f});
  CHECK(t.min <= t.q1);
  CHECK(t.q1 <= t.median);
  CHECK(t.median <= t.q3);
  CHECK(t.q3 <= t.max);
  CHECK(t.median == doctest::Approx(0.5f));
}
