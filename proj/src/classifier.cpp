#include "dyntta/classifier.hpp"

#include "dyntta/parallel.hpp"

#include <cmath>

namespace dyntta::cls {

ClassifierParams ClassifierParams::init(uint64_t seed, int class_count, int in_channels, int h,
                                        int w) {
  require(h % 4 == 0 && w % 4 == 0, "classifier: input size must be divisible by 4");
  Rng rng(Rng::mix(seed, 0xC1A55));
  ClassifierParams p;
  p.class_count = class_count;
  p.in_channels = in_channels;
  p.input_h = h;
  p.input_w = w;
  p.c1 = nn::Conv2d::he_init(in_channels, 32, 3, rng);
  p.c2 = nn::Conv2d::he_init(32, 64, 3, rng);
  p.fc = nn::Linear::he_init(64 * (h / 4) * (w / 4), class_count, rng);
  // cool final layer: chance-level loss near ln(C) at init
  p.fc.w.data *= 0.35f;
  return p;
}

StagedClassifier stage(Tape& t, const ClassifierParams& p) { return stage(t, p, !p.frozen); }

StagedClassifier stage(Tape& t, const ClassifierParams& p, bool trainable) {
  StagedClassifier s;
  s.c1 = nn::stage(t, p.c1, trainable);
  s.c2 = nn::stage(t, p.c2, trainable);
  s.fc = nn::stage(t, p.fc, trainable);
  return s;
}

Var classify(Tape& t, Var image, const StagedClassifier& p, const ClassifierParams& meta) {
  require(t.shape(image).size() == 3, "classify: image must be {C,H,W}");
  require(t.shape(image)[0] == meta.in_channels && t.shape(image)[1] == meta.input_h &&
              t.shape(image)[2] == meta.input_w,
          "classify: image shape does not match classifier input " +
              shape_str({meta.in_channels, meta.input_h, meta.input_w}));
  Var h = ops::maxpool2(t, ops::relu(t, nn::apply(t, image, p.c1)));
  h = ops::maxpool2(t, ops::relu(t, nn::apply(t, h, p.c2)));
  return nn::apply(t, h, p.fc);
}

Tensor classify(const Tensor& image, const ClassifierParams& p) {
  Tape t;
  Var x = t.constant(image);
  StagedClassifier s = stage(t, p, false);
  return t.value(classify(t, x, s, p));
}

int predict(const Tensor& logits) {
  int best = 0;
  for (int64_t i = 1; i < logits.size(); ++i)
    if (logits.data[i] > logits.data[best]) best = static_cast<int>(i);
  return best;
}

std::string mix_mode_name(MixMode m) {
  switch (m) {
    case MixMode::None: return "none";
    case MixMode::Mix: return "mix";
    case MixMode::MixPlus: return "mix-plus";
  }
  return "?";
}

std::optional<MixMode> mix_mode_from_name(const std::string& name) {
  if (name == "none") return MixMode::None;
  if (name == "mix") return MixMode::Mix;
  if (name == "mix-plus" || name == "mixplus") return MixMode::MixPlus;
  return std::nullopt;
}

ClassifierParams train_classifier(const corrupt::ImageBatch& train_set,
                                  const ClassifierTrainConfig& config) {
  require(train_set.n >= 1, "train_classifier: empty training set");
  const int threads = resolve_threads(config.threads);

  ClassifierParams params =
      ClassifierParams::init(config.seed, 10, train_set.c, train_set.h, train_set.w);
  // class count from labels
  int classes = 0;
  for (int l : train_set.labels) classes = std::max(classes, l + 1);
  if (classes != params.class_count)
    params = ClassifierParams::init(config.seed, classes, train_set.c, train_set.h, train_set.w);

  std::vector<Tensor*> trainable = {&params.c1.w, &params.c1.b, &params.c2.w,
                                    &params.c2.b, &params.fc.w, &params.fc.b};
  nn::Adam adam(trainable, config.lr);

  std::vector<std::string> mix_ops;
  if (config.augmentation == MixMode::Mix) {
    mix_ops = corrupt::mix_ops_normal();
  } else if (config.augmentation == MixMode::MixPlus) {
    mix_ops = corrupt::mix_ops_normal();
    for (const auto& op : config.mix_extra_ops)
      if (std::find(mix_ops.begin(), mix_ops.end(), op) == mix_ops.end()) mix_ops.push_back(op);
  }

  corrupt::BatchStream stream(train_set.n, config.batch_size, Rng::mix(config.seed, 0x5B));
  const int batches = stream.batches_per_epoch();

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    adam.set_lr(config.lr *
                std::pow(config.lr_decay_factor, static_cast<float>(epoch / config.lr_decay_every)));
    for (int b = 0; b < batches; ++b) {
      std::vector<int> idx = stream.batch_indices(epoch, b);
      const int bn = static_cast<int>(idx.size());

      // augmentation happens per image, deterministic per (seed,epoch,b,i)
      std::vector<Tensor> images(bn);
      std::vector<int> labels(bn);
      for (int i = 0; i < bn; ++i) {
        images[i] = train_set.image(idx[i]);
        labels[i] = train_set.labels[idx[i]];
        if (config.augmentation != MixMode::None) {
          const uint64_t sub =
              Rng::mix(config.seed, (static_cast<uint64_t>(epoch) << 40) ^
                                        (static_cast<uint64_t>(b) << 20) ^ static_cast<uint64_t>(i));
          images[i] = corrupt::mix_augment(images[i], sub, mix_ops);
        }
      }

      std::vector<std::vector<Array>> grads(bn);
      std::vector<float> losses(bn);
      parallel_for(bn, threads, [&](int i) {
        Tape tape;
        Var x = tape.constant(images[i]);
        StagedClassifier staged = stage(tape, params, true);
        Var loss = ops::cross_entropy(tape, classify(tape, x, staged, params), labels[i]);
        losses[i] = tape.value(loss).data[0];
        tape.backward(loss);
        std::vector<Var> vars = staged.vars();
        grads[i].reserve(vars.size());
        for (Var v : vars) grads[i].push_back(tape.grad(v));
      });

      // ordered merge, then one optimizer step on the mean gradient
      double loss_sum = 0;
      std::vector<Array> mean(trainable.size());
      for (size_t p = 0; p < trainable.size(); ++p) mean[p] = Array::Zero(trainable[p]->size());
      for (int i = 0; i < bn; ++i) {
        loss_sum += losses[i];
        for (size_t p = 0; p < trainable.size(); ++p) mean[p] += grads[i][p];
      }
      for (auto& g : mean) g /= static_cast<float>(bn);
      if (!std::isfinite(loss_sum))
        throw TrainingError("train_classifier: non-finite loss at epoch " +
                            std::to_string(epoch));
      adam.step(mean);
    }
  }
  return params;
}

double accuracy(const ClassifierParams& p, const corrupt::ImageBatch& data, int threads) {
  if (data.n == 0) return 0.0;
  const int nthreads = resolve_threads(threads);
  std::vector<uint8_t> correct(data.n, 0);
  parallel_for(data.n, nthreads, [&](int i) {
    const Tensor logits = classify(data.image(i), p);
    correct[i] = predict(logits) == data.labels[i] ? 1 : 0;
  });
  int64_t hits = 0;
  for (uint8_t c : correct) hits += c;
  return static_cast<double>(hits) / data.n;
}

uint64_t param_checksum(ClassifierParams& p) {
  uint64_t h = 1469598103934665603ULL;
  auto fold = [&h](const std::string&, Tensor& t) {
    const unsigned char* bytes = reinterpret_cast<const unsigned char*>(t.data.data());
    for (int64_t i = 0; i < t.size() * 4; ++i) {
      h ^= bytes[i];
      h *= 1099511628211ULL;
    }
  };
  p.visit(fold);
  return h;
}

}  // namespace dyntta::cls
