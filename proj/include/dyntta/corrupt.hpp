#pragma once

#include "dyntta/rng.hpp"
#include "dyntta/tensor.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace dyntta::corrupt {

// Seen kinds train the non-blind setting; the four Unseen kinds are held out
// for evaluation. The two sets are disjoint by construction.
enum class CorruptionKind {
  GaussianNoise,
  ShotNoise,
  ImpulseNoise,
  DefocusBlur,
  MotionBlur,
  ZoomBlur,
  Fog,
  BrightnessShift,
  ContrastShift,
  Elastic,
  Pixelate,
  JpegLike,
  // Unseen
  SpeckleNoise,
  GaussianBlur,
  Spatter,
  SaturateShift,
};

const std::vector<CorruptionKind>& seen_kinds();    // 12
const std::vector<CorruptionKind>& unseen_kinds();  // 4
const std::vector<CorruptionKind>& all_kinds();     // 16
bool is_unseen(CorruptionKind k);

std::string kind_name(CorruptionKind k);
std::optional<CorruptionKind> kind_from_name(const std::string& name);

// N images of {C,H,W} float pixels in [0,1] with integer class labels.
struct ImageBatch {
  int n = 0, c = 0, h = 0, w = 0;
  Array data;
  std::vector<int> labels;

  int64_t image_size() const { return static_cast<int64_t>(c) * h * w; }
  Tensor image(int i) const;
  void set_image(int i, const Tensor& t);
  ImageBatch subset(std::span<const int> indices) const;
  static ImageBatch empty_like(const ImageBatch& proto, int n);
};

struct Dataset {
  ImageBatch train, test;
};

// Procedurally rendered 32x32 RGB shapes-on-texture dataset; 10 shape x
// palette classes, class-balanced, deterministic per seed.
Dataset make_dataset(uint64_t seed, int n_train, int n_test, int classes = 10);

// severity 1..5 public; severity 0 is the internal identity convention.
Tensor corrupt(const Tensor& image, CorruptionKind kind, int severity, uint64_t seed);

enum class Scenario { NonBlind, Blind };
std::string scenario_name(Scenario s);
std::optional<Scenario> scenario_from_name(const std::string& name);

// AugMix-style mixing: 3 chains of 1-3 random ops, Dirichlet(1,1,1)-weighted
// sum, Beta(1,1) blend with the original.
const std::vector<std::string>& mix_ops_normal();  // the 9 base ops
std::vector<std::string> mix_ops_all();            // base + saturate/contrast/brightness/sharpness
bool is_known_mix_op(const std::string& name);

Tensor mix_augment(const Tensor& image, uint64_t seed, const std::vector<std::string>& op_set);
// Core with an explicit original-image blend factor (testing hook).
Tensor mix_augment_with_blend(const Tensor& image, Rng& rng,
                              const std::vector<std::string>& op_set, float original_blend);

// Deterministic per-epoch shuffled batch index stream.
class BatchStream {
 public:
  BatchStream(int dataset_size, int batch_size, uint64_t seed);
  int batches_per_epoch() const;
  std::vector<int> batch_indices(int epoch, int batch) const;

 private:
  int n_, batch_size_;
  uint64_t seed_;
};

// Materializes one training batch under a scenario. NonBlind draws one
// element of Seen x {1..5} union {clean} per batch and applies it to every
// image; Blind mix-augments each image. Deterministic per
// (seed, epoch, batch_index).
ImageBatch scenario_batch(const ImageBatch& base, std::span<const int> indices,
                          Scenario scenario, const std::vector<std::string>& mix_ops,
                          uint64_t seed, int epoch, int batch_index);

}  // namespace dyntta::corrupt
