#include "dyntta/train.hpp"

#include "dyntta/checkpoint.hpp"
#include "dyntta/ops.hpp"
#include "dyntta/parallel.hpp"

#include <cmath>
#include <sstream>

namespace dyntta::train {

std::vector<aug::AugmentationSpec> catalog_for(const TrainConfig& config) {
  std::vector<aug::AugmentationSpec> specs = aug::catalog(config.scale);
  if (config.leave_out) {
    std::erase_if(specs,
                  [&](const aug::AugmentationSpec& s) { return s.kind == *config.leave_out; });
    require(!specs.empty(), "leave-out removed the whole catalog");
  }
  return specs;
}

std::map<std::string, std::string> config_kv(const TrainConfig& config) {
  std::map<std::string, std::string> kv;
  kv["epochs"] = std::to_string(config.epochs);
  kv["lr"] = std::to_string(config.lr);
  kv["lr_decay_every"] = std::to_string(config.lr_decay_every);
  kv["lr_decay_factor"] = std::to_string(config.lr_decay_factor);
  kv["batch_size"] = std::to_string(config.batch_size);
  kv["seed"] = std::to_string(config.seed);
  kv["scenario"] = corrupt::scenario_name(config.scenario);
  kv["scale"] = aug::scale_name(config.scale);
  kv["mode"] = head::mode_name(config.mode);
  kv["prune_threshold"] = std::to_string(config.prune_threshold);
  kv["leave_out"] = config.leave_out ? aug::kind_name(*config.leave_out) : "none";
  std::string ops;
  for (const auto& op : config.mix_ops) ops += (ops.empty() ? "" : ",") + op;
  kv["mix_ops"] = ops;
  kv["backbone_width"] = std::to_string(config.backbone_width);
  return kv;
}

std::string config_digest(const TrainConfig& config, const std::vector<std::string>& masked) {
  auto kv = config_kv(config);
  for (const auto& key : masked) kv[key] = "*";
  std::ostringstream os;
  for (const auto& [k, v] : kv) os << k << "=" << v << "\n";
  const std::string text = os.str();
  return ckpt::sha1_hex(text.data(), text.size());
}

void apply_config_kv(TrainConfig& config, const std::map<std::string, std::string>& kv) {
  for (const auto& [key, value] : kv) {
    if (key == "epochs") config.epochs = std::stoi(value);
    else if (key == "lr") config.lr = std::stof(value);
    else if (key == "lr_decay_every") config.lr_decay_every = std::stoi(value);
    else if (key == "lr_decay_factor") config.lr_decay_factor = std::stof(value);
    else if (key == "batch_size") config.batch_size = std::stoi(value);
    else if (key == "seed") config.seed = std::stoull(value);
    else if (key == "scenario") {
      auto s = corrupt::scenario_from_name(value);
      require(s.has_value(), "config: unknown scenario '" + value + "'");
      config.scenario = *s;
    } else if (key == "scale") {
      auto s = aug::scale_from_name(value);
      require(s.has_value(), "config: unknown scale '" + value + "'");
      config.scale = *s;
    } else if (key == "mode") {
      auto m = head::mode_from_name(value);
      require(m.has_value(), "config: unknown mode '" + value + "'");
      config.mode = *m;
    } else if (key == "prune_threshold") config.prune_threshold = std::stof(value);
    else if (key == "leave_out") {
      if (value == "none") {
        config.leave_out.reset();
      } else {
        auto k = aug::kind_from_name(value);
        require(k.has_value(), "config: unknown leave-out kind '" + value + "'");
        config.leave_out = *k;
      }
    } else if (key == "mix_ops") {
      config.mix_ops.clear();
      std::stringstream ss(value);
      std::string op;
      while (std::getline(ss, op, ','))
        if (!op.empty()) config.mix_ops.push_back(op);
    } else if (key == "backbone_width") config.backbone_width = std::stoi(value);
    else if (key == "threads") config.threads = std::stoi(value);
    else throw ContractError("config: unknown key '" + key + "'");
  }
}

TrainResult train_dyntta(const cls::ClassifierParams& classifier,
                         const corrupt::ImageBatch& train_set, const TrainConfig& config) {
  require(classifier.frozen, "train_dyntta: classifier must be frozen");
  require(config.prune_threshold == 0.0f,
          "train_dyntta: pruning is inference-time only (threshold must be 0)");
  require(train_set.n >= 1, "train_dyntta: empty training set");

  cls::ClassifierParams clf = classifier;  // local copy; integrity-checked below
  const std::string checksum_before = ckpt::digest_params(clf);

  const auto specs = catalog_for(config);
  const int threads = resolve_threads(config.threads);

  TrainResult result;
  result.params =
      head::DynttaParams::init(config.seed, specs, train_set.c, config.backbone_width);

  std::vector<Tensor*> trainable;
  result.params.visit([&trainable](const std::string&, Tensor& t) { trainable.push_back(&t); });
  nn::Adam adam(trainable, config.lr);

  corrupt::BatchStream stream(train_set.n, config.batch_size, Rng::mix(config.seed, 0xD7));
  const int batches = stream.batches_per_epoch();

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    adam.set_lr(config.lr * std::pow(config.lr_decay_factor,
                                     static_cast<float>(epoch / config.lr_decay_every)));
    double epoch_loss = 0;
    int64_t epoch_samples = 0;
    for (int b = 0; b < batches; ++b) {
      std::vector<int> idx = stream.batch_indices(epoch, b);
      corrupt::ImageBatch batch = corrupt::scenario_batch(
          train_set, idx, config.scenario, config.mix_ops, config.seed, epoch, b);
      const int bn = batch.n;

      std::vector<std::vector<Array>> grads(bn);
      std::vector<float> losses(bn);
      parallel_for(bn, threads, [&](int i) {
        Tape tape;
        Var x = tape.constant(batch.image(i));
        head::StagedDyntta staged = head::stage(tape, result.params, true);
        cls::StagedClassifier staged_clf = cls::stage(tape, clf);
        Var out = head::dyntta_forward(tape, x, staged, specs, 0.0f, config.mode);
        Var loss =
            ops::cross_entropy(tape, cls::classify(tape, out, staged_clf, clf), batch.labels[i]);
        losses[i] = tape.value(loss).data[0];
        tape.backward(loss);
        std::vector<Var> vars = staged.vars();
        grads[i].reserve(vars.size());
        for (Var v : vars) grads[i].push_back(tape.grad(v));
      });

      double loss_sum = 0;
      std::vector<Array> mean(trainable.size());
      for (size_t p = 0; p < trainable.size(); ++p) mean[p] = Array::Zero(trainable[p]->size());
      for (int i = 0; i < bn; ++i) {  // ordered merge
        loss_sum += losses[i];
        for (size_t p = 0; p < trainable.size(); ++p) mean[p] += grads[i][p];
      }
      for (auto& g : mean) g /= static_cast<float>(bn);
      if (!std::isfinite(loss_sum))
        throw TrainingError("train_dyntta: non-finite loss at epoch " + std::to_string(epoch));
      epoch_loss += loss_sum;
      epoch_samples += bn;
      adam.step(mean);
    }
    const double mean_loss = epoch_loss / static_cast<double>(epoch_samples);
    if (epoch == 0) result.initial_loss = mean_loss;  // first-epoch mean
    result.final_loss = mean_loss;
  }

  require(ckpt::digest_params(clf) == checksum_before,
          "train_dyntta: frozen classifier was mutated");
  return result;
}

// ---- evaluation -------------------------------------------------------------

void EvalReport::recompute_aggregates() {
  double unseen_sum = 0, unseen_base = 0, all_sum = 0, all_base = 0;
  int unseen_n = 0;
  for (const EvalCell& c : cells) {
    all_sum += c.accuracy;
    all_base += c.accuracy - c.delta;
    if (corrupt::is_unseen(c.kind)) {
      unseen_sum += c.accuracy;
      unseen_base += c.accuracy - c.delta;
      ++unseen_n;
    }
  }
  all_mean = cells.empty() ? 0 : all_sum / cells.size();
  unseen_mean = unseen_n == 0 ? 0 : unseen_sum / unseen_n;
  all_delta = cells.empty() ? 0 : (all_sum - all_base) / cells.size();
  unseen_delta = unseen_n == 0 ? 0 : (unseen_sum - unseen_base) / unseen_n;
}

std::vector<std::pair<corrupt::CorruptionKind, int>> full_grid() {
  std::vector<std::pair<corrupt::CorruptionKind, int>> cells;
  for (corrupt::CorruptionKind k : corrupt::all_kinds())
    for (int s = 1; s <= 5; ++s) cells.emplace_back(k, s);
  return cells;
}

std::vector<std::pair<corrupt::CorruptionKind, int>> unseen_grid(int severity) {
  std::vector<std::pair<corrupt::CorruptionKind, int>> cells;
  for (corrupt::CorruptionKind k : corrupt::unseen_kinds()) cells.emplace_back(k, severity);
  return cells;
}

namespace {

struct CellEval {
  double accuracy = 0;
  double executed_sum = 0;  // summed over inferences
};

// Accuracy of classifier(dyntta(x)) over one corrupted copy of the test set.
CellEval eval_cell(const cls::ClassifierParams& clf, const head::DynttaParams* dyntta,
                   const std::vector<aug::AugmentationSpec>& specs, head::Mode mode,
                   const corrupt::ImageBatch& test, corrupt::CorruptionKind kind, int severity,
                   const EvalSettings& settings) {
  const int threads = resolve_threads(settings.threads);
  std::vector<uint8_t> correct(test.n, 0);
  std::vector<Tensor> images(test.n);
  parallel_for(test.n, threads, [&](int i) {
    uint64_t sub = Rng::mix(settings.seed,
                            (static_cast<uint64_t>(kind) << 40) ^
                                (static_cast<uint64_t>(severity) << 32) ^
                                static_cast<uint64_t>(i));
    images[i] = severity == 0 ? test.image(i) : corrupt::corrupt(test.image(i), kind, severity, sub);
  });

  CellEval out;
  if (!dyntta) {
    parallel_for(test.n, threads, [&](int i) {
      correct[i] = cls::predict(cls::classify(images[i], clf)) == test.labels[i] ? 1 : 0;
    });
  } else {
    // batch-level pruning: weights first, then the planned forward
    const int bs = std::max(1, settings.batch_size);
    for (int start = 0; start < test.n; start += bs) {
      const int bn = std::min(bs, test.n - start);
      std::vector<Array> rows(bn);
      parallel_for(bn, threads, [&](int i) {
        rows[i] = head::blend_weights(images[start + i], *dyntta, specs);
      });
      head::PrunePlan plan;
      if (settings.threshold == 0.0f) {
        plan = head::prune_plan(rows, 0.0f);
      } else {
        try {
          plan = head::prune_plan(rows, settings.threshold);
        } catch (const head::DegeneratePlanError& e) {
          plan = head::prune_plan_forced(rows, e.argmax);
        }
      }
      out.executed_sum += static_cast<double>(plan.executed_count()) * bn;
      parallel_for(bn, threads, [&](int i) {
        Tape tape;
        Var x = tape.constant(images[start + i]);
        head::StagedDyntta staged = head::stage(tape, *dyntta, false);
        Var enhanced = settings.threshold == 0.0f
                           ? head::dyntta_forward(tape, x, staged, specs, 0.0f, mode)
                           : head::dyntta_forward_planned(tape, x, staged, specs, mode,
                                                          plan.exec_mask, plan.redistributed[i]);
        const Tensor logits = cls::classify(tape.value(enhanced), clf);
        correct[start + i] = cls::predict(logits) == test.labels[start + i] ? 1 : 0;
      });
    }
  }
  int64_t hits = 0;
  for (uint8_t c : correct) hits += c;
  out.accuracy = test.n ? static_cast<double>(hits) / test.n : 0.0;
  return out;
}

}  // namespace

EvalReport evaluate(const cls::ClassifierParams& classifier, const head::DynttaParams* dyntta,
                    const std::vector<aug::AugmentationSpec>& specs, head::Mode mode,
                    const corrupt::ImageBatch& test, const EvalSettings& settings) {
  require(test.n >= 1, "evaluate: empty test set");
  EvalReport report;
  report.catalog_size = static_cast<int>(specs.size());
  report.has_enhancer = dyntta != nullptr;
  const bool with_baseline = dyntta != nullptr && settings.compute_baseline;
  if (with_baseline) report.baseline_name = "no-enhancement";

  double executed_sum = 0;
  int64_t inferences = 0;

  // clean accuracy
  CellEval clean = eval_cell(classifier, dyntta, specs, mode, test,
                             corrupt::CorruptionKind::GaussianNoise, 0, settings);
  report.clean_accuracy = clean.accuracy;
  executed_sum += clean.executed_sum;
  inferences += test.n;
  if (with_baseline) {
    CellEval base = eval_cell(classifier, nullptr, specs, mode, test,
                              corrupt::CorruptionKind::GaussianNoise, 0, settings);
    report.clean_delta = clean.accuracy - base.accuracy;
  }

  for (const auto& [kind, severity] : settings.cells) {
    require(severity >= 1 && severity <= 5, "evaluate: severity must be 1..5");
    CellEval cell = eval_cell(classifier, dyntta, specs, mode, test, kind, severity, settings);
    EvalCell out;
    out.kind = kind;
    out.severity = severity;
    out.accuracy = cell.accuracy;
    if (with_baseline) {
      CellEval base = eval_cell(classifier, nullptr, specs, mode, test, kind, severity, settings);
      out.delta = cell.accuracy - base.accuracy;
    }
    executed_sum += cell.executed_sum;
    inferences += test.n;
    report.cells.push_back(out);
  }

  report.mean_executed = dyntta && inferences
                             ? executed_sum / static_cast<double>(inferences)
                             : 0.0;
  if (dyntta && settings.threshold == 0.0f)
    report.mean_executed = static_cast<double>(specs.size());
  report.recompute_aggregates();
  return report;
}

}  // namespace dyntta::train
