#pragma once

#include "dyntta/train.hpp"

namespace dyntta::est {

struct SummaryStats {
  float min = 0, q1 = 0, median = 0, q3 = 0, max = 0, mean = 0;
};

SummaryStats summarize(std::vector<float> values);

// Blend-weight and magnitude distributions of a trained model over a
// validation set. The 19 low-pass and 19 high-pass filters additionally
// aggregate into one group each (per-image group weight = sum of member
// weights); ranking uses the 14 kind/group entries.
struct WeightStats {
  std::vector<std::string> entry_names;      // one per catalog entry
  std::vector<SummaryStats> entry_weights;
  std::vector<std::string> group_names;      // kinds with filter groups collapsed
  std::vector<SummaryStats> group_weights;
  std::vector<std::string> magnitude_names;  // parameterized kinds
  std::vector<SummaryStats> magnitudes;
  int sample_count = 0;
};

WeightStats collect_stats(const head::DynttaParams& dyntta,
                          const cls::ClassifierParams& classifier,
                          const std::vector<aug::AugmentationSpec>& specs, head::Mode mode,
                          const corrupt::ImageBatch& validation, int threads = 0);

// Test-time kind -> training-time inverse operation.
std::string inverse_op(aug::Kind kind);

struct EstimatedOps {
  std::vector<std::string> ops;   // deduplicated, rank order
  std::vector<std::string> ranked_groups;  // kind/group names by max weight
  bool truncated = false;         // top_n exceeded the distinct kinds
};

// Ranks kinds/groups by maximum blend weight (ties broken by catalog order),
// takes top_n, and maps through the inverse table.
EstimatedOps estimate_augs(const WeightStats& stats, int top_n = 4);

struct RetrainRow {
  std::string label;                  // normal / all / estimated
  uint64_t seed = 0;
  std::vector<double> unseen_acc;     // per unseen kind, severity 5
  double average = 0;
};

struct RetrainReport {
  std::vector<std::string> unseen_names;
  std::vector<RetrainRow> rows;  // 3 op-sets x seeds
};

// Retrains the classifier with Normal / All / Estimated mix op-sets and
// evaluates on the held-out unseen split at severity 5; paired seeds.
RetrainReport retrain_and_compare(const corrupt::Dataset& data,
                                  const std::vector<std::string>& estimated_ops,
                                  const std::vector<uint64_t>& seeds,
                                  const cls::ClassifierTrainConfig& base,
                                  const corrupt::ImageBatch& heldout_test, uint64_t eval_seed,
                                  int threads = 0);

}  // namespace dyntta::est
