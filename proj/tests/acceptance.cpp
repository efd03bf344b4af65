// Acceptance suite: exercises every gate criterion end to end and prints one
// pass/fail line per criterion. Exit code 0 only when everything passes.
//
// Heavy artifacts (datasets, trained models) are built once in a scratch
// directory and shared across criteria.

#include "dyntta/checkpoint.hpp"
#include "dyntta/estimate.hpp"
#include "dyntta/fft.hpp"
#include "dyntta/grad_suite.hpp"
#include "dyntta/ops.hpp"
#include "dyntta/parallel.hpp"
#include "dyntta/png_io.hpp"
#include "dyntta/report.hpp"
#include "dyntta/svg.hpp"
#include "dyntta/train.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <numeric>
#include <sstream>

using namespace dyntta;
namespace fs = std::filesystem;

namespace {

#ifndef DYNTTA_CLI
#define DYNTTA_CLI "dyntta"
#endif

struct Outcome {
  bool pass = false;
  std::string detail;
};

double now_seconds() {
  using clock = std::chrono::steady_clock;
  static const clock::time_point start = clock::now();
  return std::chrono::duration<double>(clock::now() - start).count();
}

int g_failures = 0;

void report(int id, const std::string& name, const Outcome& o, double seconds) {
  std::printf("[%s] criterion %d: %-28s %s (%.0fs)\n", o.pass ? "PASS" : "FAIL", id, name.c_str(),
              o.detail.c_str(), seconds);
  std::fflush(stdout);
  if (!o.pass) ++g_failures;
}

template <typename F>
void run(int id, const std::string& name, F&& fn) {
  const double t0 = now_seconds();
  Outcome o;
  try {
    o = fn();
  } catch (const std::exception& e) {
    o.pass = false;
    o.detail = std::string("exception: ") + e.what();
  }
  report(id, name, o, now_seconds() - t0);
}

Tensor random_image(int h, int w, Rng& rng) {
  Tensor t({3, h, w});
  for (int64_t i = 0; i < t.size(); ++i) t.data[i] = rng.uniform();
  return t;
}

// Class-balanced subsample for the reduced-scale ablation runs.
corrupt::ImageBatch subsample(const corrupt::ImageBatch& batch, int per_class, int classes) {
  std::vector<int> counts(classes, 0), idx;
  for (int i = 0; i < batch.n; ++i)
    if (counts[batch.labels[i]] < per_class) {
      ++counts[batch.labels[i]];
      idx.push_back(i);
    }
  return batch.subset(idx);
}

struct Shared {
  fs::path work;
  corrupt::Dataset data;            // 2000/500 toy dataset
  cls::ClassifierParams classifier;  // 20-epoch baseline, frozen
  std::vector<head::DynttaParams> nonblind;  // 3 seeds, trained in criterion 5
  double base_clean = 0, base_unseen5 = 0;
};

Shared g;

// ---- criteria ----------------------------------------------------------------

Outcome criterion_gradients() {
  const double t0 = now_seconds();
  GradSuiteReport suite = run_gradient_suite(5, 0);
  const double elapsed = now_seconds() - t0;
  std::ostringstream os;
  os << suite.entries.size() << " checks, worst " << suite.worst() << ", " << elapsed << "s";
  Outcome o;
  o.pass = suite.all_pass() && elapsed < 120.0;
  if (!suite.all_pass())
    for (const auto& e : suite.entries)
      if (!e.pass) os << " [" << e.name << " " << e.max_rel_err << ">" << e.tolerance << "]";
  o.detail = os.str();
  return o;
}

Outcome criterion_blend() {
  Rng rng(42);
  int checked = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int k = 2 + rng.uniform_int(7);
    const int hw = 4 + rng.uniform_int(5);
    std::vector<Tensor> images;
    for (int i = 0; i < k; ++i) images.push_back(random_image(hw, hw, rng));
    Array raw(k);
    for (int i = 0; i < k; ++i) raw[i] = rng.uniform(-3.0f, 3.0f);
    Array e = (raw - raw.maxCoeff()).exp();
    Array w = e / e.sum();
    if (std::abs(w.cast<double>().sum() - 1.0) > 1e-6) return {false, "weight sum violated"};

    Tape t;
    std::vector<Var> vars;
    for (auto& im : images) vars.push_back(t.constant(im));
    Tensor wt({k}, w);
    const Array& out = t.value(ops::blend_images(t, vars, t.constant(std::move(wt)))).data;
    for (int64_t px = 0; px < out.size(); ++px) {
      float lo = images[0].data[px], hi = images[0].data[px];
      for (int i = 1; i < k; ++i) {
        lo = std::min(lo, images[i].data[px]);
        hi = std::max(hi, images[i].data[px]);
      }
      if (out[px] < lo - 1e-6f || out[px] > hi + 1e-6f)
        return {false, "per-pixel envelope violated"};
    }
    ++checked;
  }
  // one-hot weight selects image 1 exactly
  Rng rng2(7);
  std::vector<Tensor> images = {random_image(8, 8, rng2), random_image(8, 8, rng2),
                                random_image(8, 8, rng2)};
  Tensor sel = head::blend(images, Tensor::from({3}, {1, 0, 0}).data);
  if (!(sel.data == images[0].data).all()) return {false, "one-hot selection not exact"};
  return {true, std::to_string(checked) + " random cases"};
}

Outcome criterion_filters() {
  Rng rng(3);
  float worst_recon = 0, worst_linear = 0;
  for (uint64_t seed = 0; seed < 2; ++seed) {
    Tensor x = random_image(16, 16, rng);
    Tensor y = random_image(16, 16, rng);
    const float a = rng.uniform(-2, 2), b = rng.uniform(-2, 2);
    for (int i = 1; i <= 19; ++i) {
      const float cutoff = static_cast<float>(0.05 * i);
      Tensor lp = fft::ideal_filter(x, cutoff, true);
      Tensor hp = fft::ideal_filter(x, cutoff, false);
      worst_recon = std::max(worst_recon, (lp.data + hp.data - x.data).abs().maxCoeff());
      Tensor combo({3, 16, 16}, a * x.data + b * y.data);
      Array lin = fft::ideal_filter(combo, cutoff, true).data -
                  (a * lp.data + b * fft::ideal_filter(y, cutoff, true).data);
      worst_linear = std::max(worst_linear, lin.abs().maxCoeff());
    }
  }
  std::ostringstream os;
  os << "recon err " << worst_recon << ", linearity err " << worst_linear;
  return {worst_recon < 1e-4f && worst_linear < 1e-4f, os.str()};
}

Outcome criterion_robustness() {
  const double t0 = now_seconds();
  g.data = corrupt::make_dataset(0, 2000, 500);

  cls::ClassifierTrainConfig clf_cfg;
  clf_cfg.epochs = 20;
  clf_cfg.seed = 0;
  cls::ClassifierParams clf = cls::train_classifier(g.data.train, clf_cfg);
  clf.frozen = true;
  g.classifier = clf;

  train::EvalSettings eval;
  eval.cells = train::unseen_grid(5);
  eval.seed = 100;
  eval.compute_baseline = false;
  train::EvalReport base = train::evaluate(g.classifier, nullptr, aug::catalog(),
                                           head::Mode::Full, g.data.test, eval);
  g.base_clean = base.clean_accuracy;
  g.base_unseen5 = base.unseen_mean;

  int wins = 0;
  std::ostringstream os;
  os.precision(3);
  for (uint64_t seed : {0ull, 1ull, 2ull}) {
    train::TrainConfig cfg;
    cfg.epochs = 10;
    cfg.seed = seed;
    cfg.scenario = corrupt::Scenario::NonBlind;
    train::TrainResult trained = train::train_dyntta(g.classifier, g.data.train, cfg);
    train::EvalReport r = train::evaluate(g.classifier, &trained.params, aug::catalog(),
                                          head::Mode::Full, g.data.test, eval);
    const double unseen_gain = (r.unseen_mean - g.base_unseen5) * 100.0;
    const double clean_drop = (g.base_clean - r.clean_accuracy) * 100.0;
    const bool ok = unseen_gain >= 3.0 && clean_drop <= 1.0;
    wins += ok ? 1 : 0;
    os << " s" << seed << ": unseen " << std::showpos << unseen_gain << std::noshowpos
       << "pt, clean " << -clean_drop << "pt";
    g.nonblind.push_back(std::move(trained.params));
  }
  const double elapsed = now_seconds() - t0;
  std::ostringstream detail;
  detail << wins << "/3 seeds;" << os.str() << "; " << static_cast<int>(elapsed) << "s";
  return {wins >= 2 && elapsed < 1800.0, detail.str()};
}

Outcome criterion_pruning() {
  if (g.nonblind.empty()) return {false, "no trained model (criterion 5 failed earlier)"};
  const head::DynttaParams& model = g.nonblind[0];
  const auto specs = aug::catalog();

  // threshold 0 output equals the unpruned reference path bitwise
  for (int i = 0; i < 10; ++i) {
    Tensor img = g.data.test.image(i * 37 % g.data.test.n);
    Tape ta;
    Var xa = ta.constant(img);
    head::StagedDyntta sa = head::stage(ta, model, false);
    const Array& reference =
        ta.value(head::dyntta_forward(ta, xa, sa, specs, 0.0f, head::Mode::Full)).data;
    Tensor pruned0 = head::dyntta_enhance(img, model, specs, 0.0f, head::Mode::Full);
    if (!(reference == pruned0.data).all()) return {false, "threshold 0 not bitwise equal"};
  }

  train::EvalSettings eval;
  eval.cells = train::unseen_grid(5);
  eval.seed = 100;
  eval.compute_baseline = false;
  train::EvalReport full = train::evaluate(g.classifier, &model, specs, head::Mode::Full,
                                           g.data.test, eval);
  eval.threshold = 0.05f;
  train::EvalReport pruned = train::evaluate(g.classifier, &model, specs, head::Mode::Full,
                                             g.data.test, eval);
  const double reduction = 1.0 - pruned.mean_executed / 50.0;
  const double acc_change = (pruned.unseen_mean - full.unseen_mean) * 100.0;
  std::ostringstream os;
  os.precision(3);
  os << "executed " << pruned.mean_executed << "/50 (-" << reduction * 100.0 << "%), unseen "
     << std::showpos << acc_change << "pt";
  return {reduction >= 0.5 && std::abs(acc_change) <= 1.0, os.str()};
}

Outcome criterion_ablation() {
  // reduced-scale paired runs
  corrupt::Dataset small;
  small.train = subsample(g.data.train, 40, 10);  // 400 images
  small.test = subsample(g.data.test, 10, 10);    // 100 images

  train::TrainConfig base;
  base.epochs = 3;
  base.batch_size = 32;

  train::EvalSettings eval;
  eval.seed = 55;
  eval.compute_baseline = false;

  // (a) Full >= BlendOnly on blind corruption accuracy, majority of 3 seeds
  base.scenario = corrupt::Scenario::Blind;
  eval.cells.clear();
  for (corrupt::CorruptionKind k : corrupt::all_kinds()) eval.cells.emplace_back(k, 5);
  train::AblationReport modes = train::run_ablation(train::AblationSuite::Modes, g.classifier,
                                                    small, base, {0, 1, 2}, eval);
  int mode_wins = 0;
  for (const auto& run : modes.runs)
    if (run.label == "full" && run.robust_delta >= 0.0) ++mode_wins;

  // (b) excluding the neural enhancer causes the largest leave-one-out drop
  base.scenario = corrupt::Scenario::NonBlind;
  eval.cells = train::unseen_grid(5);
  train::AblationReport loo = train::run_ablation(train::AblationSuite::LeaveOneOut,
                                                  g.classifier, small, base, {0, 1, 2}, eval);
  int loo_wins = 0;
  for (uint64_t seed : {0ull, 1ull, 2ull}) {
    double enhancer_drop = 1e9;
    double largest_other_drop = 1e9;
    for (const auto& run : loo.runs) {
      if (run.seed != seed || run.label == "all") continue;
      if (run.label == "without-neural-enhance")
        enhancer_drop = run.robust_delta;
      else
        largest_other_drop = std::min(largest_other_drop, run.robust_delta);
    }
    if (enhancer_drop <= largest_other_drop) ++loo_wins;
  }

  std::ostringstream os;
  os << "modes " << mode_wins << "/3, leave-one-out " << loo_wins << "/3";
  return {mode_wins >= 2 && loo_wins >= 2, os.str()};
}

Outcome criterion_estimation() {
  // blind-trained model for the §4.6-style analysis
  train::TrainConfig cfg;
  cfg.epochs = 8;
  cfg.seed = 0;
  cfg.scenario = corrupt::Scenario::Blind;
  train::TrainResult blind = train::train_dyntta(g.classifier, g.data.train, cfg);
  const auto specs = aug::catalog();

  // 2:8 validation/test split; validation corrupted by speckle + saturate
  std::vector<int> order(g.data.test.n);
  std::iota(order.begin(), order.end(), 0);
  Rng shuffle(Rng::mix(9, 0x5B117));
  for (int i = g.data.test.n - 1; i > 0; --i)
    std::swap(order[i], order[shuffle.uniform_int(i + 1)]);
  const int val_n = g.data.test.n / 5;
  corrupt::ImageBatch val =
      g.data.test.subset(std::vector<int>(order.begin(), order.begin() + val_n));
  corrupt::ImageBatch heldout =
      g.data.test.subset(std::vector<int>(order.begin() + val_n, order.end()));
  Rng pick(11);
  for (int i = 0; i < val.n; ++i) {
    const corrupt::CorruptionKind kind = (i % 2 == 0) ? corrupt::CorruptionKind::SpeckleNoise
                                                      : corrupt::CorruptionKind::SaturateShift;
    val.set_image(i, corrupt::corrupt(val.image(i), kind, 5, pick.next_u64()));
  }

  est::WeightStats stats =
      est::collect_stats(blind.params, g.classifier, specs, head::Mode::Full, val);
  est::EstimatedOps ops = est::estimate_augs(stats, 4);
  const bool lowpass_in = std::find(ops.ranked_groups.begin(), ops.ranked_groups.end(),
                                    "lowpass") != ops.ranked_groups.end();
  const bool saturate_in = std::find(ops.ranked_groups.begin(), ops.ranked_groups.end(),
                                     "saturate") != ops.ranked_groups.end();

  // retraining comparison on the held-out 80%
  cls::ClassifierTrainConfig retrain_cfg;
  retrain_cfg.epochs = 12;
  est::RetrainReport report =
      est::retrain_and_compare(g.data, ops.ops, {0, 1, 2}, retrain_cfg, heldout, 77);
  int estimated_wins = 0;
  for (uint64_t seed : {0ull, 1ull, 2ull}) {
    double normal = 0, estimated = 0;
    for (const auto& row : report.rows) {
      if (row.seed != seed) continue;
      if (row.label == "normal") normal = row.average;
      if (row.label == "estimated") estimated = row.average;
    }
    if (estimated > normal) ++estimated_wins;
  }

  std::ostringstream os;
  os << "ranked {";
  for (size_t i = 0; i < ops.ranked_groups.size(); ++i)
    os << (i ? " " : "") << ops.ranked_groups[i];
  os << "}, estimated>normal " << estimated_wins << "/3";
  return {lowpass_in && saturate_in && estimated_wins >= 2, os.str()};
}

int run_cmd(const std::string& args, const std::string& log) {
  const std::string cmd = std::string(DYNTTA_CLI) + " " + args + " > " + log + " 2>&1";
  return std::system(cmd.c_str());
}

std::string tree_digest(const fs::path& root, const std::string& exclude_suffix) {
  std::vector<std::string> files;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().string();
    if (name.size() >= exclude_suffix.size() &&
        name.compare(name.size() - exclude_suffix.size(), exclude_suffix.size(),
                     exclude_suffix) == 0)
      continue;
    files.push_back(name);
  }
  std::sort(files.begin(), files.end());
  std::string acc;
  for (const auto& f : files) {
    acc += fs::path(f).lexically_relative(root).string();
    acc += ":";
    acc += ckpt::sha1_file(f);
    acc += "\n";
  }
  return ckpt::sha1_hex(acc.data(), acc.size());
}

Outcome criterion_determinism() {
  const fs::path base = g.work / "determinism";
  std::vector<std::string> mismatches;

  for (int round = 0; round < 2; ++round) {
    const fs::path dir = base / ("round" + std::to_string(round));
    fs::create_directories(dir);
    const std::string d = dir.string();
    auto cli = [&](const std::string& args, const std::string& log) {
      if (run_cmd(args, d + "/" + log) != 0)
        throw NumericError("cli command failed, see " + d + "/" + log);
    };
    cli("gen-data --out " + d + "/data --seed 5 --n-train 60 --n-test 30", "gen.log");
    cli("train-classifier --data " + d + "/data --out " + d + "/clf.ckpt --epochs 2 --seed 5 "
        "--threads 2", "clf.log");
    cli("train-dyntta --data " + d + "/data --classifier " + d + "/clf.ckpt --out " + d +
        "/dyn.ckpt --epochs 1 --seed 5 --threads 2", "dyn.log");
    cli("eval --data " + d + "/data --classifier " + d + "/clf.ckpt --dyntta " + d +
        "/dyn.ckpt --kinds speckle-noise --severities 5 --seed 5 --threads 2 --out " + d +
        "/eval --svg", "eval.log");
    cli("prune-sweep --data " + d + "/data --classifier " + d + "/clf.ckpt --dyntta " + d +
        "/dyn.ckpt --thresholds 0,0.05 --kinds speckle-noise --severities 5 --seed 5 "
        "--threads 2 --out " + d + "/sweep", "sweep.log");
    cli("estimate --data " + d + "/data --classifier " + d + "/clf.ckpt --dyntta " + d +
        "/dyn.ckpt --seed 5 --threads 2 --out " + d + "/est --svg", "est.log");
    cli("retrain-estimated --data " + d + "/data --from " + d +
        "/est.ops.json --seeds 5 --epochs 1 --threads 2 --split-seed 5 --out " + d + "/retrain",
        "retrain.log");
    cli("ablate --suite modes --data " + d + "/data --classifier " + d + "/clf.ckpt --seeds 5 "
        "--epochs 1 --scenario blind --eval-kinds speckle-noise --eval-severities 5 --threads 2 "
        "--out " + d + "/modes", "modes.log");
    cli("grad-check --seeds 1 --seed 5", "grad.log");
  }

  // artifacts must match byte for byte; manifests carry wall-clock durations
  const std::string d0 = tree_digest(base / "round0", ".manifest.json");
  const std::string d1 = tree_digest(base / "round1", ".manifest.json");
  if (d0 != d1) {
    // identify the differing files for the detail line
    for (const auto& entry : fs::recursive_directory_iterator(base / "round0")) {
      if (!entry.is_regular_file()) continue;
      const std::string rel = entry.path().lexically_relative(base / "round0").string();
      if (rel.size() > 14 && rel.substr(rel.size() - 14) == ".manifest.json") continue;
      const fs::path other = base / "round1" / rel;
      if (!fs::exists(other) ||
          ckpt::sha1_file(entry.path().string()) != ckpt::sha1_file(other.string()))
        mismatches.push_back(rel);
      if (mismatches.size() > 3) break;
    }
    std::string detail = "mismatched artifacts:";
    for (const auto& m : mismatches) detail += " " + m;
    return {false, detail};
  }
  return {true, "9 subcommands, bitwise-identical artifacts across two runs"};
}

Outcome criterion_statistics() {
  const head::DynttaParams* model = g.nonblind.empty() ? nullptr : &g.nonblind[0];
  head::DynttaParams fallback = head::DynttaParams::init(1, aug::catalog());
  if (!model) model = &fallback;

  corrupt::ImageBatch val = subsample(g.data.test, 5, 10);
  est::WeightStats stats =
      est::collect_stats(*model, g.classifier, aug::catalog(), head::Mode::Full, val);
  double mean_sum = 0;
  for (const auto& s : stats.entry_weights) mean_sum += s.mean;
  if (std::abs(mean_sum - 1.0) > 1e-6)
    return {false, "entry means sum to " + std::to_string(mean_sum)};

  const std::string svg = io::weight_boxplot_svg(stats);
  size_t count = 0, pos = 0;
  while ((pos = svg.find("<g class=\"box\">", pos)) != std::string::npos) {
    ++count;
    pos += 10;
  }
  if (count != stats.group_names.size())
    return {false, "boxplot has " + std::to_string(count) + " boxes, expected " +
                       std::to_string(stats.group_names.size())};
  std::ostringstream os;
  os << "means sum " << mean_sum << ", " << count << " boxes";
  return {true, os.str()};
}

}  // namespace

int main(int argc, char** argv) {
  g.work = argc > 1 ? fs::path(argv[1]) : fs::path("acceptance_work");
  fs::create_directories(g.work);

  std::printf("acceptance suite (work dir %s)\n", g.work.string().c_str());
  run(1, "gradient suite", criterion_gradients);
  run(2, "blend contract", criterion_blend);
  run(3, "filter algebra", criterion_filters);
  run(5, "robustness gain", criterion_robustness);  // trains shared models
  run(4, "pruning equivalence", criterion_pruning);
  run(6, "ablation directions", criterion_ablation);
  run(7, "estimation pipeline", criterion_estimation);
  run(8, "determinism", criterion_determinism);
  run(9, "statistics contract", criterion_statistics);

  if (g_failures == 0) {
    std::printf("all criteria passed\n");
    return 0;
  }
  std::printf("%d criteria failed\n", g_failures);
  return 1;
}
