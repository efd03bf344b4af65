#include "dyntta/estimate.hpp"

#include "dyntta/parallel.hpp"

#include <algorithm>
#include <cmath>

namespace dyntta::est {

SummaryStats summarize(std::vector<float> values) {
  require(!values.empty(), "summarize: empty sample");
  std::sort(values.begin(), values.end());
  const size_t n = values.size();
  auto quantile = [&](double q) {
    const double pos = q * static_cast<double>(n - 1);
    const size_t lo = static_cast<size_t>(pos);
    const size_t hi = std::min(lo + 1, n - 1);
    const double frac = pos - static_cast<double>(lo);
    return static_cast<float>(values[lo] * (1.0 - frac) + values[hi] * frac);
  };
  SummaryStats s;
  s.min = values.front();
  s.q1 = quantile(0.25);
  s.median = quantile(0.5);
  s.q3 = quantile(0.75);
  s.max = values.back();
  double acc = 0;
  for (float v : values) acc += v;
  s.mean = static_cast<float>(acc / static_cast<double>(n));
  return s;
}

namespace {

// kind/group key for an entry: filters collapse to their group kind
std::string group_of(const aug::AugmentationSpec& spec) { return aug::kind_name(spec.kind); }

}  // namespace

WeightStats collect_stats(const head::DynttaParams& dyntta,
                          const cls::ClassifierParams& classifier,
                          const std::vector<aug::AugmentationSpec>& specs, head::Mode mode,
                          const corrupt::ImageBatch& validation, int threads) {
  (void)classifier;  // stats come from the blending head alone
  require(validation.n >= 1, "collect_stats: empty validation set");
  const int k = static_cast<int>(specs.size());
  const int nthreads = resolve_threads(threads);

  std::vector<head::ForwardInfo> infos(validation.n);
  parallel_for(validation.n, nthreads, [&](int i) {
    head::dyntta_enhance(validation.image(i), dyntta, specs, 0.0f, mode, &infos[i]);
  });

  WeightStats stats;
  stats.sample_count = validation.n;

  // per-entry weights
  for (int e = 0; e < k; ++e) {
    std::vector<float> w(validation.n);
    for (int i = 0; i < validation.n; ++i) w[i] = infos[i].blend_weights[e];
    stats.entry_names.push_back(specs[e].name());
    stats.entry_weights.push_back(summarize(std::move(w)));
  }

  // kind/group weights in catalog order, groups counted once
  std::vector<std::string> group_order;
  for (int e = 0; e < k; ++e) {
    const std::string g = group_of(specs[e]);
    if (std::find(group_order.begin(), group_order.end(), g) == group_order.end())
      group_order.push_back(g);
  }
  for (const std::string& g : group_order) {
    std::vector<float> sums(validation.n, 0.0f);
    for (int e = 0; e < k; ++e) {
      if (group_of(specs[e]) != g) continue;
      for (int i = 0; i < validation.n; ++i) sums[i] += infos[i].blend_weights[e];
    }
    stats.group_names.push_back(g);
    stats.group_weights.push_back(summarize(std::move(sums)));
  }

  // magnitudes of parameterized kinds
  for (int e = 0; e < k; ++e) {
    if (!specs[e].parameterized()) continue;
    std::vector<float> m(validation.n);
    for (int i = 0; i < validation.n; ++i) m[i] = infos[i].magnitudes[e].value_or(0.0f);
    stats.magnitude_names.push_back(specs[e].name());
    stats.magnitudes.push_back(summarize(std::move(m)));
  }
  return stats;
}

std::string inverse_op(aug::Kind kind) {
  switch (kind) {
    case aug::Kind::LowPass: return "highpass";
    case aug::Kind::HighPass: return "lowpass";
    case aug::Kind::Gamma: return "inverse-gamma";
    case aug::Kind::Contrast: return "contrast";
    case aug::Kind::Saturate: return "saturation";
    case aug::Kind::Brightness: return "brightness";
    case aug::Kind::Sharpness: return "blur";
    case aug::Kind::Rotate: return "rotate";
    case aug::Kind::Scale: return "zoom";
    case aug::Kind::AutoContrast: return "autocontrast";
    case aug::Kind::Hue: return "hue";
    case aug::Kind::Equalize: return "equalize";
    case aug::Kind::Invert: return "invert";
    case aug::Kind::NeuralEnhance: return "identity";
  }
  return "identity";
}

EstimatedOps estimate_augs(const WeightStats& stats, int top_n) {
  require(!stats.group_names.empty(), "estimate_augs: empty stats");
  require(top_n >= 0, "estimate_augs: top_n must be nonnegative");

  // stable sort by max weight descending preserves catalog order on ties
  std::vector<int> order(stats.group_names.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return stats.group_weights[a].max > stats.group_weights[b].max;
  });

  EstimatedOps out;
  out.truncated = top_n > static_cast<int>(order.size());
  const int take = std::min<int>(top_n, static_cast<int>(order.size()));
  for (int r = 0; r < take; ++r) {
    const std::string& group = stats.group_names[order[r]];
    out.ranked_groups.push_back(group);
    auto kind = aug::kind_from_name(group);
    require(kind.has_value(), "estimate_augs: unknown group name " + group);
    const std::string op = inverse_op(*kind);
    if (std::find(out.ops.begin(), out.ops.end(), op) == out.ops.end()) out.ops.push_back(op);
  }
  return out;
}

RetrainReport retrain_and_compare(const corrupt::Dataset& data,
                                  const std::vector<std::string>& estimated_ops,
                                  const std::vector<uint64_t>& seeds,
                                  const cls::ClassifierTrainConfig& base,
                                  const corrupt::ImageBatch& heldout_test, uint64_t eval_seed,
                                  int threads) {
  require(!seeds.empty(), "retrain_and_compare: need at least one seed");
  RetrainReport report;
  for (corrupt::CorruptionKind k : corrupt::unseen_kinds())
    report.unseen_names.push_back(corrupt::kind_name(k));

  struct OpSet {
    std::string label;
    std::vector<std::string> extra;
  };
  const std::vector<OpSet> op_sets = {
      {"normal", {}},
      {"all", {"saturate", "contrast", "brightness", "sharpness"}},
      {"estimated", estimated_ops},
  };

  const int nthreads = resolve_threads(threads);
  for (uint64_t seed : seeds) {
    for (const OpSet& set : op_sets) {
      cls::ClassifierTrainConfig config = base;
      config.seed = seed;
      config.augmentation =
          set.label == "normal" ? cls::MixMode::Mix : cls::MixMode::MixPlus;
      config.mix_extra_ops = set.extra;
      cls::ClassifierParams clf = cls::train_classifier(data.train, config);

      RetrainRow row;
      row.label = set.label;
      row.seed = seed;
      double sum = 0;
      for (corrupt::CorruptionKind kind : corrupt::unseen_kinds()) {
        std::vector<uint8_t> correct(heldout_test.n, 0);
        parallel_for(heldout_test.n, nthreads, [&](int i) {
          uint64_t sub = Rng::mix(eval_seed, (static_cast<uint64_t>(kind) << 32) ^
                                                 static_cast<uint64_t>(i));
          Tensor im = corrupt::corrupt(heldout_test.image(i), kind, 5, sub);
          correct[i] = cls::predict(cls::classify(im, clf)) == heldout_test.labels[i] ? 1 : 0;
        });
        int64_t hits = 0;
        for (uint8_t c : correct) hits += c;
        const double acc = heldout_test.n ? static_cast<double>(hits) / heldout_test.n : 0.0;
        row.unseen_acc.push_back(acc);
        sum += acc;
      }
      row.average = sum / static_cast<double>(row.unseen_acc.size());
      report.rows.push_back(std::move(row));
    }
  }
  return report;
}

}  // namespace dyntta::est
