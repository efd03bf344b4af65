#pragma once

#include "dyntta/corrupt.hpp"
#include "dyntta/nn.hpp"

namespace dyntta::cls {

// Small frozen CNN classifier: conv(C->32)/relu/pool, conv(32->64)/relu/pool,
// linear -> classes. Input spatial size is fixed at init time by the linear
// layer.
struct ClassifierParams {
  nn::Conv2d c1, c2;
  nn::Linear fc;
  int class_count = 10;
  int in_channels = 3;
  int input_h = 32, input_w = 32;
  bool frozen = false;

  static ClassifierParams init(uint64_t seed, int class_count, int in_channels = 3, int h = 32,
                               int w = 32);

  template <typename F>
  void visit(F&& f) {
    f("classifier.c1.w", c1.w);
    f("classifier.c1.b", c1.b);
    f("classifier.c2.w", c2.w);
    f("classifier.c2.b", c2.b);
    f("classifier.fc.w", fc.w);
    f("classifier.fc.b", fc.b);
  }
};

struct StagedClassifier {
  nn::StagedConv c1, c2;
  nn::StagedLinear fc;
  std::vector<Var> vars() const { return {c1.w, c1.b, c2.w, c2.b, fc.w, fc.b}; }
};

// Frozen params stage as constants; gradient still flows to the image input.
StagedClassifier stage(Tape& t, const ClassifierParams& p);
StagedClassifier stage(Tape& t, const ClassifierParams& p, bool trainable);

Var classify(Tape& t, Var image, const StagedClassifier& p, const ClassifierParams& meta);
Tensor classify(const Tensor& image, const ClassifierParams& p);
int predict(const Tensor& logits);

enum class MixMode { None, Mix, MixPlus };
std::string mix_mode_name(MixMode m);
std::optional<MixMode> mix_mode_from_name(const std::string& name);

struct ClassifierTrainConfig {
  int epochs = 20;
  float lr = 1e-3f;
  int lr_decay_every = 10;
  float lr_decay_factor = 0.5f;
  int batch_size = 32;
  uint64_t seed = 0;
  MixMode augmentation = MixMode::None;
  std::vector<std::string> mix_extra_ops;  // appended to the base 9 for MixPlus
  int threads = 0;
};

// Adam training of the classifier on (optionally mix-augmented) images.
// Deterministic per seed; throws TrainingError on NaN loss.
ClassifierParams train_classifier(const corrupt::ImageBatch& train_set,
                                  const ClassifierTrainConfig& config);

double accuracy(const ClassifierParams& p, const corrupt::ImageBatch& data, int threads = 0);

// FNV-1a over raw parameter bytes; used for frozen-weight integrity checks.
uint64_t param_checksum(ClassifierParams& p);

}  // namespace dyntta::cls
