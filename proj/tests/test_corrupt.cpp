#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "dyntta/corrupt.hpp"
#include "dyntta/rng.hpp"

#include <algorithm>
#include <set>

using namespace dyntta;
using corrupt::CorruptionKind;

TEST_CASE("seen and unseen kinds partition as specified") {
  CHECK(corrupt::seen_kinds().size() == 12);
  CHECK(corrupt::unseen_kinds().size() == 4);
  std::set<CorruptionKind> seen(corrupt::seen_kinds().begin(), corrupt::seen_kinds().end());
  for (CorruptionKind k : corrupt::unseen_kinds()) CHECK(seen.count(k) == 0);
  CHECK(corrupt::is_unseen(CorruptionKind::SpeckleNoise));
  CHECK(corrupt::is_unseen(CorruptionKind::GaussianBlur));
  CHECK(corrupt::is_unseen(CorruptionKind::Spatter));
  CHECK(corrupt::is_unseen(CorruptionKind::SaturateShift));
  for (CorruptionKind k : corrupt::all_kinds())
    CHECK(corrupt::kind_from_name(corrupt::kind_name(k)) == k);
}

TEST_CASE("datasets are deterministic and class balanced") {
  corrupt::Dataset a = corrupt::make_dataset(0, 100, 40);
  corrupt::Dataset b = corrupt::make_dataset(0, 100, 40);
  CHECK((a.train.data == b.train.data).all());
  CHECK((a.test.data == b.test.data).all());
  CHECK(a.train.labels == b.train.labels);

  corrupt::Dataset c = corrupt::make_dataset(1, 100, 40);
  CHECK_FALSE((a.train.data == c.train.data).all());

  std::vector<int> counts(10, 0);
  for (int l : a.train.labels) ++counts[l];
  for (int cls = 0; cls < 10; ++cls) CHECK(counts[cls] == 10);

  CHECK(a.train.data.minCoeff() >= 0.0f);
  CHECK(a.train.data.maxCoeff() <= 1.0f);
  CHECK(a.train.h == 32);
  CHECK(a.train.w == 32);
}

TEST_CASE("corruptions are deterministic and severity 0 is the identity") {
  corrupt::Dataset data = corrupt::make_dataset(3, 10, 10);
  Tensor img = data.test.image(0);
  for (CorruptionKind kind : corrupt::all_kinds()) {
    INFO(corrupt::kind_name(kind));
    Tensor zero = corrupt::corrupt(img, kind, 0, 42);
    CHECK((zero.data == img.data).all());
    Tensor once = corrupt::corrupt(img, kind, 3, 42);
    Tensor again = corrupt::corrupt(img, kind, 3, 42);
    CHECK((once.data == again.data).all());
    Tensor other_seed = corrupt::corrupt(img, kind, 3, 43);
    CHECK(once.data.minCoeff() >= 0.0f);
    CHECK(once.data.maxCoeff() <= 1.0f);
    (void)other_seed;
  }
  CHECK_THROWS_AS(corrupt::corrupt(img, CorruptionKind::Fog, 6, 1), ContractError);
}

TEST_CASE("mean distortion strictly increases with severity") {
  corrupt::Dataset data = corrupt::make_dataset(5, 10, 100);
  for (CorruptionKind kind : corrupt::all_kinds()) {
    double prev = -1.0;
    for (int severity = 1; severity <= 5; ++severity) {
      double total = 0;
      for (int i = 0; i < data.test.n; ++i) {
        Tensor img = data.test.image(i);
        Tensor out = corrupt::corrupt(img, kind, severity, Rng::mix(9, i));
        total += (out.data - img.data).abs().mean();
      }
      const double mean_change = total / data.test.n;
      INFO(corrupt::kind_name(kind), " severity ", severity);
      CHECK(mean_change > prev);
      prev = mean_change;
    }
  }
}

TEST_CASE("mix augmentation op sets") {
  CHECK(corrupt::mix_ops_normal().size() == 9);
  const std::vector<std::string> expected = {"autocontrast", "equalize",   "posterize",
                                             "rotate",       "solarize",   "shearX",
                                             "shearY",       "translateX", "translateY"};
  CHECK(corrupt::mix_ops_normal() == expected);
  CHECK(corrupt::mix_ops_all().size() == 13);
  // the estimated inverse ops are all resolvable
  for (const char* op : {"highpass", "lowpass", "saturation", "contrast", "inverse-gamma",
                         "gamma", "blur", "brightness", "identity", "zoom", "hue", "invert"})
    CHECK(corrupt::is_known_mix_op(op));
  CHECK_FALSE(corrupt::is_known_mix_op("sharpen-more"));
}

TEST_CASE("mix augmentation determinism and blend limit") {
  corrupt::Dataset data = corrupt::make_dataset(7, 10, 10);
  Tensor img = data.test.image(3);
  Tensor a = corrupt::mix_augment(img, 5, corrupt::mix_ops_normal());
  Tensor b = corrupt::mix_augment(img, 5, corrupt::mix_ops_normal());
  CHECK((a.data == b.data).all());
  CHECK(a.data.minCoeff() >= 0.0f);
  CHECK(a.data.maxCoeff() <= 1.0f);

  // zero blend factor returns the original image
  Rng rng(11);
  Tensor zero = corrupt::mix_augment_with_blend(img, rng, corrupt::mix_ops_normal(), 0.0f);
  CHECK((zero.data == img.data).all());

  CHECK_THROWS_AS(corrupt::mix_augment(img, 1, {"not-an-op"}), ContractError);
  CHECK_THROWS_AS(corrupt::mix_augment(img, 1, {}), ContractError);
}

TEST_CASE("scenario batches are deterministic") {
  corrupt::Dataset data = corrupt::make_dataset(13, 60, 10);
  std::vector<int> idx = {0, 5, 10, 15, 20, 25};
  for (corrupt::Scenario scenario : {corrupt::Scenario::NonBlind, corrupt::Scenario::Blind}) {
    corrupt::ImageBatch a =
        corrupt::scenario_batch(data.train, idx, scenario, {}, 3, 1, 2);
    corrupt::ImageBatch b =
        corrupt::scenario_batch(data.train, idx, scenario, {}, 3, 1, 2);
    CHECK((a.data == b.data).all());
    CHECK(a.labels == b.labels);
    corrupt::ImageBatch c =
        corrupt::scenario_batch(data.train, idx, scenario, {}, 4, 1, 2);
    CHECK_FALSE((a.data == c.data).all());
  }
}

TEST_CASE("nonblind batches draw one corruption per batch, clean included") {
  corrupt::Dataset data = corrupt::make_dataset(17, 40, 10);
  std::vector<int> idx(12);
  for (int i = 0; i < 12; ++i) idx[i] = i;
  int clean_batches = 0;
  const int trials = 200;
  for (int b = 0; b < trials; ++b) {
    corrupt::ImageBatch batch =
        corrupt::scenario_batch(data.train, idx, corrupt::Scenario::NonBlind, {}, 7, 0, b);
    bool clean = true;
    for (int i = 0; i < batch.n && clean; ++i)
      clean = (batch.image(i).data == data.train.image(idx[i]).data).all();
    clean_batches += clean ? 1 : 0;
  }
  // uniform over 12*5+1 = 61 options: expect trials/61 ~ 3.3 clean batches
  CHECK(clean_batches >= 1);
  CHECK(clean_batches <= 15);
}

TEST_CASE("batch stream shuffles deterministically per epoch") {
  corrupt::BatchStream stream(100, 32, 42);
  CHECK(stream.batches_per_epoch() == 4);
  auto a = stream.batch_indices(0, 0);
  auto b = stream.batch_indices(0, 0);
  CHECK(a == b);
  auto c = stream.batch_indices(1, 0);
  CHECK(a != c);
  // all indices covered exactly once per epoch
  std::set<int> all;
  for (int i = 0; i < 4; ++i) {
    auto part = stream.batch_indices(0, i);
    all.insert(part.begin(), part.end());
  }
  CHECK(all.size() == 100);
}
