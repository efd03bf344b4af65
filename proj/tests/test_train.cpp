#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "dyntta/checkpoint.hpp"
#include "dyntta/train.hpp"

using namespace dyntta;

namespace {

// Tiny shared fixture: one dataset and one frozen classifier.
struct Fixture {
  corrupt::Dataset data;
  cls::ClassifierParams classifier;
  Fixture() {
    data = corrupt::make_dataset(2, 120, 60);
    cls::ClassifierTrainConfig config;
    config.epochs = 5;
    config.seed = 3;
    config.threads = 2;
    classifier = cls::train_classifier(data.train, config);
    classifier.frozen = true;
  }
};

Fixture& fixture() {
  static Fixture f;
  return f;
}

train::TrainConfig tiny_config() {
  train::TrainConfig config;
  config.epochs = 1;
  config.batch_size = 24;
  config.seed = 7;
  config.threads = 2;
  return config;
}

}  // namespace

TEST_CASE("train_dyntta requires a frozen classifier and zero threshold") {
  Fixture& f = fixture();
  cls::ClassifierParams thawed = f.classifier;
  thawed.frozen = false;
  CHECK_THROWS_AS(train::train_dyntta(thawed, f.data.train, tiny_config()), ContractError);

  train::TrainConfig bad = tiny_config();
  bad.prune_threshold = 0.05f;
  CHECK_THROWS_AS(train::train_dyntta(f.classifier, f.data.train, bad), ContractError);
}

TEST_CASE("training reduces the loss and never mutates the classifier") {
  Fixture& f = fixture();
  cls::ClassifierParams clf = f.classifier;
  const std::string before = ckpt::digest_params(clf);
  train::TrainConfig config = tiny_config();
  config.epochs = 4;
  train::TrainResult result = train::train_dyntta(clf, f.data.train, config);
  CHECK(result.final_loss < result.initial_loss);
  CHECK(ckpt::digest_params(clf) == before);
}

TEST_CASE("training is bitwise reproducible per seed") {
  Fixture& f = fixture();
  train::TrainConfig config = tiny_config();
  train::TrainResult a = train::train_dyntta(f.classifier, f.data.train, config);
  train::TrainResult b = train::train_dyntta(f.classifier, f.data.train, config);
  CHECK(ckpt::digest_params(a.params) == ckpt::digest_params(b.params));

  config.seed = 8;
  train::TrainResult c = train::train_dyntta(f.classifier, f.data.train, config);
  CHECK(ckpt::digest_params(a.params) != ckpt::digest_params(c.params));
}

TEST_CASE("leave-out removes whole kinds from the catalog") {
  train::TrainConfig config = tiny_config();
  config.leave_out = aug::Kind::LowPass;
  auto specs = train::catalog_for(config);
  CHECK(specs.size() == 31);  // 50 minus the 19 low-pass filters
  for (const auto& s : specs) CHECK(s.kind != aug::Kind::LowPass);

  config.leave_out = aug::Kind::NeuralEnhance;
  CHECK(train::catalog_for(config).size() == 49);
}

TEST_CASE("evaluate reports cells, aggregates and deltas") {
  Fixture& f = fixture();
  train::EvalSettings settings;
  settings.cells = {{corrupt::CorruptionKind::SpeckleNoise, 5},
                    {corrupt::CorruptionKind::Fog, 3}};
  settings.seed = 5;
  settings.threads = 2;

  // baseline: zero deltas against itself
  train::EvalReport base = train::evaluate(f.classifier, nullptr, aug::catalog(),
                                           head::Mode::Full, f.data.test, settings);
  CHECK(base.baseline_name.empty());
  CHECK(base.clean_delta == 0.0);
  for (const auto& cell : base.cells) CHECK(cell.delta == 0.0);

  // aggregates recompute exactly from cells
  double sum = 0;
  for (const auto& cell : base.cells) sum += cell.accuracy;
  CHECK(std::abs(base.all_mean - sum / base.cells.size()) < 1e-9);
  double unseen_sum = 0;
  int unseen_n = 0;
  for (const auto& cell : base.cells)
    if (corrupt::is_unseen(cell.kind)) {
      unseen_sum += cell.accuracy;
      ++unseen_n;
    }
  CHECK(std::abs(base.unseen_mean - unseen_sum / unseen_n) < 1e-9);

  // with a model: deltas against the bare classifier on identical cells
  train::TrainConfig config = tiny_config();
  train::TrainResult trained = train::train_dyntta(f.classifier, f.data.train, config);
  train::EvalReport enhanced = train::evaluate(f.classifier, &trained.params, aug::catalog(),
                                               head::Mode::Full, f.data.test, settings);
  CHECK(enhanced.baseline_name == "no-enhancement");
  for (size_t i = 0; i < enhanced.cells.size(); ++i)
    CHECK(enhanced.cells[i].accuracy - enhanced.cells[i].delta ==
          doctest::Approx(base.cells[i].accuracy).epsilon(1e-9));
  CHECK(enhanced.mean_executed == doctest::Approx(50.0));
}

TEST_CASE("evaluation is deterministic") {
  Fixture& f = fixture();
  train::EvalSettings settings;
  settings.cells = train::unseen_grid(5);
  settings.seed = 11;
  settings.threads = 2;
  train::EvalReport a = train::evaluate(f.classifier, nullptr, aug::catalog(), head::Mode::Full,
                                        f.data.test, settings);
  train::EvalReport b = train::evaluate(f.classifier, nullptr, aug::catalog(), head::Mode::Full,
                                        f.data.test, settings);
  CHECK(a.clean_accuracy == b.clean_accuracy);
  for (size_t i = 0; i < a.cells.size(); ++i) CHECK(a.cells[i].accuracy == b.cells[i].accuracy);
}

TEST_CASE("pruned evaluation reduces executed augmentations") {
  Fixture& f = fixture();
  train::TrainConfig config = tiny_config();
  train::TrainResult trained = train::train_dyntta(f.classifier, f.data.train, config);

  train::EvalSettings settings;
  settings.cells = {{corrupt::CorruptionKind::SpeckleNoise, 5}};
  settings.seed = 3;
  settings.threads = 2;
  settings.threshold = 0.05f;
  train::EvalReport pruned = train::evaluate(f.classifier, &trained.params, aug::catalog(),
                                             head::Mode::Full, f.data.test, settings);
  CHECK(pruned.mean_executed < 50.0);
  CHECK(pruned.mean_executed >= 1.0);
}

TEST_CASE("config kv round-trips") {
  train::TrainConfig config;
  config.epochs = 9;
  config.scenario = corrupt::Scenario::Blind;
  config.mode = head::Mode::BlendOnly;
  config.scale = aug::MagnitudeScale::Large;
  config.leave_out = aug::Kind::Hue;
  config.mix_ops = {"rotate", "solarize"};
  auto kv = train::config_kv(config);
  train::TrainConfig back;
  train::apply_config_kv(back, kv);
  CHECK(back.epochs == 9);
  CHECK(back.scenario == corrupt::Scenario::Blind);
  CHECK(back.mode == head::Mode::BlendOnly);
  CHECK(back.scale == aug::MagnitudeScale::Large);
  CHECK(back.leave_out == aug::Kind::Hue);
  CHECK(back.mix_ops == config.mix_ops);
  CHECK(train::config_digest(config) == train::config_digest(back));
}
