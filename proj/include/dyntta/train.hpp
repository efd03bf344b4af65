#pragma once

#include "dyntta/classifier.hpp"
#include "dyntta/corrupt.hpp"
#include "dyntta/head.hpp"

#include <map>

namespace dyntta::train {

struct TrainConfig {
  int epochs = 12;
  float lr = 1e-3f;
  int lr_decay_every = 10;
  float lr_decay_factor = 0.5f;
  int batch_size = 32;
  uint64_t seed = 0;
  corrupt::Scenario scenario = corrupt::Scenario::NonBlind;
  aug::MagnitudeScale scale = aug::MagnitudeScale::Standard;
  head::Mode mode = head::Mode::Full;
  float prune_threshold = 0.0f;  // pruning is inference-time only
  std::optional<aug::Kind> leave_out;
  std::vector<std::string> mix_ops;  // blind scenario op set; empty = the base 9
  int backbone_width = 32;
  int threads = 0;
};

// Catalog for a config: magnitude scale applied, leave-out kind removed
// (whole filter group for LowPass/HighPass).
std::vector<aug::AugmentationSpec> catalog_for(const TrainConfig& config);

// key=value view of a config; `masked` keys are replaced by "*" so paired
// runs can prove they differ only in the ablated factor.
std::map<std::string, std::string> config_kv(const TrainConfig& config);
std::string config_digest(const TrainConfig& config,
                          const std::vector<std::string>& masked = {});
void apply_config_kv(TrainConfig& config, const std::map<std::string, std::string>& kv);

struct TrainResult {
  head::DynttaParams params;
  double initial_loss = 0;
  double final_loss = 0;
};

// Optimizes cross_entropy(classify(blend(...))) over the blending head and
// the enhancer; the classifier must be frozen and is integrity-checked.
TrainResult train_dyntta(const cls::ClassifierParams& classifier,
                         const corrupt::ImageBatch& train_set, const TrainConfig& config);

// ---- evaluation -------------------------------------------------------------

struct EvalCell {
  corrupt::CorruptionKind kind;
  int severity = 0;
  double accuracy = 0;
  double delta = 0;  // vs baseline when present
};

struct EvalReport {
  double clean_accuracy = 0, clean_delta = 0;
  std::vector<EvalCell> cells;
  double unseen_mean = 0, all_mean = 0;
  double unseen_delta = 0, all_delta = 0;
  std::string baseline_name;  // empty when the report itself is a baseline
  double mean_executed = 0;   // avg executed augmentations per inference
  int catalog_size = 0;
  bool has_enhancer = false;

  void recompute_aggregates();
};

struct EvalSettings {
  std::vector<std::pair<corrupt::CorruptionKind, int>> cells;
  float threshold = 0.0f;
  int batch_size = 50;
  uint64_t seed = 0;
  int threads = 0;
  bool compute_baseline = true;  // deltas vs the bare classifier
};

std::vector<std::pair<corrupt::CorruptionKind, int>> full_grid();
std::vector<std::pair<corrupt::CorruptionKind, int>> unseen_grid(int severity);

// dyntta == nullptr evaluates the bare classifier (baseline). With a model,
// the same cells are also evaluated bare and reported as deltas.
EvalReport evaluate(const cls::ClassifierParams& classifier, const head::DynttaParams* dyntta,
                    const std::vector<aug::AugmentationSpec>& specs, head::Mode mode,
                    const corrupt::ImageBatch& test, const EvalSettings& settings);

// ---- ablation ---------------------------------------------------------------

enum class AblationSuite { LeaveOneOut, Modes, RangeScale };
std::string suite_name(AblationSuite s);
std::optional<AblationSuite> suite_from_name(const std::string& name);

struct AblationRun {
  std::string label;
  uint64_t seed = 0;
  std::string config_digest;         // full config
  std::string paired_digest;         // ablated factor masked out
  double clean = 0;
  double robust = 0;                 // suite-specific robustness metric
  double robust_delta = 0;           // vs the suite reference run, same seed
};

struct AblationReport {
  AblationSuite suite;
  std::string robust_metric;
  std::vector<AblationRun> runs;
};

AblationReport run_ablation(AblationSuite suite, const cls::ClassifierParams& classifier,
                            const corrupt::Dataset& data, const TrainConfig& base,
                            const std::vector<uint64_t>& seeds, const EvalSettings& eval);

}  // namespace dyntta::train
