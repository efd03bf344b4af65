#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "dyntta/estimate.hpp"
#include "dyntta/rng.hpp"

using namespace dyntta;

namespace {

// Stats fixture over the 14 kind/group names with chosen maxima.
est::WeightStats stats_with_maxima(const std::map<std::string, float>& maxima) {
  est::WeightStats stats;
  std::vector<std::string> order;
  for (const auto& spec : aug::catalog()) {
    const std::string g = aug::kind_name(spec.kind);
    if (std::find(order.begin(), order.end(), g) == order.end()) order.push_back(g);
  }
  for (const auto& g : order) {
    est::SummaryStats s;
    auto it = maxima.find(g);
    s.max = it != maxima.end() ? it->second : 0.01f;
    s.min = 0;
    s.q1 = s.median = s.q3 = s.max / 2;
    s.mean = s.max / 2;
    stats.group_names.push_back(g);
    stats.group_weights.push_back(s);
  }
  stats.sample_count = 10;
  return stats;
}

}  // namespace

TEST_CASE("inverse table maps the documented pairs") {
  CHECK(est::inverse_op(aug::Kind::LowPass) == "highpass");
  CHECK(est::inverse_op(aug::Kind::HighPass) == "lowpass");
  CHECK(est::inverse_op(aug::Kind::Gamma) == "inverse-gamma");
  CHECK(est::inverse_op(aug::Kind::Contrast) == "contrast");
  CHECK(est::inverse_op(aug::Kind::Saturate) == "saturation");
  CHECK(est::inverse_op(aug::Kind::Brightness) == "brightness");
  CHECK(est::inverse_op(aug::Kind::Sharpness) == "blur");
  CHECK(est::inverse_op(aug::Kind::Rotate) == "rotate");
  // every mapped op is resolvable by the mixer
  for (const auto& spec : aug::catalog())
    CHECK(corrupt::is_known_mix_op(est::inverse_op(spec.kind)));
}

TEST_CASE("estimate_augs maps the four strongest kinds through the inverse table") {
  est::WeightStats stats = stats_with_maxima(
      {{"lowpass", 0.8f}, {"saturate", 0.7f}, {"gamma", 0.6f}, {"contrast", 0.5f}});
  est::EstimatedOps ops = est::estimate_augs(stats, 4);
  CHECK(ops.ranked_groups ==
        std::vector<std::string>({"lowpass", "saturate", "gamma", "contrast"}));
  CHECK(ops.ops ==
        std::vector<std::string>({"highpass", "saturation", "inverse-gamma", "contrast"}));
  CHECK_FALSE(ops.truncated);
}

TEST_CASE("estimate_augs corner cases") {
  est::WeightStats stats = stats_with_maxima({{"rotate", 0.9f}});
  CHECK(est::estimate_augs(stats, 0).ops.empty());

  // ties break toward the earlier catalog index
  est::WeightStats tied = stats_with_maxima({{"rotate", 0.5f}, {"scale", 0.5f}});
  est::EstimatedOps ops = est::estimate_augs(tied, 2);
  CHECK(ops.ranked_groups[0] == "rotate");
  CHECK(ops.ranked_groups[1] == "scale");

  // truncation warning when top_n exceeds distinct kinds
  est::EstimatedOps all = est::estimate_augs(tied, 99);
  CHECK(all.truncated);
  CHECK(all.ranked_groups.size() == tied.group_names.size());
}

TEST_CASE("ranking is invariant to positive scaling of the maxima") {
  est::WeightStats stats = stats_with_maxima(
      {{"hue", 0.31f}, {"highpass", 0.62f}, {"equalize", 0.11f}, {"invert", 0.44f}});
  est::EstimatedOps base = est::estimate_augs(stats, 5);
  for (auto& s : stats.group_weights) {
    s.max *= 7.5f;
    s.mean *= 7.5f;
  }
  est::EstimatedOps scaled = est::estimate_augs(stats, 5);
  CHECK(base.ranked_groups == scaled.ranked_groups);
  CHECK(base.ops == scaled.ops);
}

TEST_CASE("collect_stats per-entry means sum to one and groups aggregate") {
  const auto specs = aug::catalog();
  head::DynttaParams params = head::DynttaParams::init(3, specs);
  Rng rng(4);
  for (int64_t i = 0; i < params.head.w.size(); ++i)
    params.head.w.data[i] = rng.uniform(-1.0f, 1.0f);
  cls::ClassifierParams clf = cls::ClassifierParams::init(5, 10);

  corrupt::Dataset data = corrupt::make_dataset(6, 10, 6);
  est::WeightStats stats =
      est::collect_stats(params, clf, specs, head::Mode::Full, data.test, 2);

  CHECK(stats.sample_count == 6);
  CHECK(stats.entry_names.size() == 50);
  CHECK(stats.group_names.size() == 14);
  CHECK(stats.magnitude_names.size() == 8);

  double mean_sum = 0;
  for (const auto& s : stats.entry_weights) mean_sum += s.mean;
  CHECK(std::abs(mean_sum - 1.0) < 1e-6);

  // weights live in [0,1]; per-image group sums stay below 1
  for (const auto& s : stats.group_weights) {
    CHECK(s.min >= 0.0f);
    CHECK(s.max <= 1.0f + 1e-6f);
    CHECK(s.min <= s.q1);
    CHECK(s.q1 <= s.median);
    CHECK(s.median <= s.q3);
    CHECK(s.q3 <= s.max);
  }

  // singleton validation set collapses the summaries
  corrupt::ImageBatch one = data.test.subset(std::vector<int>{0});
  est::WeightStats single =
      est::collect_stats(params, clf, specs, head::Mode::Full, one, 1);
  for (const auto& s : single.entry_weights) {
    CHECK(s.min == s.max);
    CHECK(s.mean == s.min);
  }
}

TEST_CASE("estimate_augs is a pure function of the stats") {
  est::WeightStats stats = stats_with_maxima({{"lowpass", 0.8f}, {"sharpness", 0.3f}});
  est::EstimatedOps a = est::estimate_augs(stats, 3);
  est::EstimatedOps b = est::estimate_augs(stats, 3);
  CHECK(a.ops == b.ops);
  CHECK(a.ranked_groups == b.ranked_groups);
}
