#include <CLI11.hpp>
#include <json.hpp>

#include "dyntta/checkpoint.hpp"
#include "dyntta/estimate.hpp"
#include "dyntta/grad_suite.hpp"
#include "dyntta/manifest.hpp"
#include "dyntta/parallel.hpp"
#include "dyntta/png_io.hpp"
#include "dyntta/report.hpp"
#include "dyntta/svg.hpp"
#include "dyntta/train.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <sstream>

namespace fs = std::filesystem;
using namespace dyntta;

namespace {

struct Timer {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

void require_fresh(const std::string& path, bool overwrite) {
  if (!overwrite && fs::exists(path))
    throw ContractError("output exists: " + path + " (use --overwrite to replace it)");
}

corrupt::Dataset load_dataset(const std::string& dir) {
  corrupt::Dataset d;
  d.train = io::read_dataset_dir(dir, "train");
  d.test = io::read_dataset_dir(dir, "test");
  return d;
}

std::vector<std::string> split_csv(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

std::vector<uint64_t> parse_seeds(const std::string& text) {
  std::vector<uint64_t> seeds;
  for (const auto& s : split_csv(text)) seeds.push_back(std::stoull(s));
  require(!seeds.empty(), "at least one seed required");
  return seeds;
}

std::vector<std::pair<corrupt::CorruptionKind, int>> parse_cells(const std::string& kinds_text,
                                                                 const std::string& sev_text) {
  std::vector<corrupt::CorruptionKind> kinds;
  if (kinds_text == "all") {
    kinds = corrupt::all_kinds();
  } else if (kinds_text == "unseen") {
    kinds = corrupt::unseen_kinds();
  } else if (kinds_text == "seen") {
    kinds = corrupt::seen_kinds();
  } else {
    for (const auto& name : split_csv(kinds_text)) {
      auto k = corrupt::kind_from_name(name);
      require(k.has_value(), "unknown corruption kind: " + name);
      kinds.push_back(*k);
    }
  }
  std::vector<int> severities;
  if (sev_text == "all") {
    severities = {1, 2, 3, 4, 5};
  } else {
    for (const auto& s : split_csv(sev_text)) severities.push_back(std::stoi(s));
  }
  std::vector<std::pair<corrupt::CorruptionKind, int>> cells;
  for (corrupt::CorruptionKind k : kinds)
    for (int s : severities) cells.emplace_back(k, s);
  return cells;
}

// Deterministic validation/heldout split of a batch (estimate & retrain
// must agree on it).
std::pair<corrupt::ImageBatch, corrupt::ImageBatch> split_val_test(
    const corrupt::ImageBatch& batch, double val_fraction, uint64_t seed) {
  std::vector<int> order(batch.n);
  for (int i = 0; i < batch.n; ++i) order[i] = i;
  Rng rng(Rng::mix(seed, 0x5B117));
  for (int i = batch.n - 1; i > 0; --i) std::swap(order[i], order[rng.uniform_int(i + 1)]);
  const int val_n = std::max(1, static_cast<int>(batch.n * val_fraction));
  std::vector<int> val_idx(order.begin(), order.begin() + val_n);
  std::vector<int> test_idx(order.begin() + val_n, order.end());
  std::sort(val_idx.begin(), val_idx.end());
  std::sort(test_idx.begin(), test_idx.end());
  return {batch.subset(val_idx), batch.subset(test_idx)};
}

struct CommonTrainOpts {
  std::string config_path;
  int threads = 0;
  bool overwrite = false;
};

void attach_train_config(CLI::App* cmd, train::TrainConfig& config, CommonTrainOpts& common) {
  cmd->add_option("--epochs", config.epochs, "training epochs");
  cmd->add_option("--lr", config.lr, "Adam learning rate");
  cmd->add_option("--lr-decay-every", config.lr_decay_every, "epochs between lr halvings");
  cmd->add_option("--batch-size", config.batch_size, "mini-batch size");
  cmd->add_option("--seed", config.seed, "random seed");
  cmd->add_option("--backbone-width", config.backbone_width, "backbone channel width");
  cmd->add_option("--threads", common.threads, "worker thread cap (env DYNTTA_THREADS fallback)");
  cmd->add_option("--config", common.config_path, "key=value config file");
  cmd->add_flag("--overwrite", common.overwrite, "replace existing outputs");
}

void finish_config(train::TrainConfig& config, const CommonTrainOpts& common) {
  if (!common.config_path.empty())
    train::apply_config_kv(config, io::read_config_file(common.config_path));
  config.threads = common.threads;
}

void build_cli(CLI::App& app) {
  app.require_subcommand(1);

  // ---- gen-data -------------------------------------------------------------
  auto* gen = app.add_subcommand("gen-data", "render the synthetic shapes dataset as PNG trees");
  auto gen_out = std::make_shared<std::string>();
  auto gen_seed = std::make_shared<uint64_t>(0);
  auto gen_train = std::make_shared<int>(2000);
  auto gen_test = std::make_shared<int>(500);
  auto gen_overwrite = std::make_shared<bool>(false);
  gen->add_option("--out", *gen_out, "output directory")->required();
  gen->add_option("--seed", *gen_seed, "random seed");
  gen->add_option("--n-train", *gen_train, "training images");
  gen->add_option("--n-test", *gen_test, "test images");
  gen->add_flag("--overwrite", *gen_overwrite, "replace existing outputs");
  gen->callback([=] {
    Timer timer;
    require_fresh(*gen_out + "/train", *gen_overwrite);
    corrupt::Dataset data = corrupt::make_dataset(*gen_seed, *gen_train, *gen_test);
    io::write_dataset_dir(*gen_out, "train", data.train);
    io::write_dataset_dir(*gen_out, "test", data.test);
    io::RunManifest m;
    m.command = "gen-data";
    m.config = {{"seed", std::to_string(*gen_seed)},
                {"n_train", std::to_string(*gen_train)},
                {"n_test", std::to_string(*gen_test)}};
    m.seeds = {*gen_seed};
    m.outputs = {*gen_out + "/train", *gen_out + "/test"};
    m.duration_seconds = timer.seconds();
    io::write_manifest(*gen_out + "/dataset", m);
    std::printf("wrote %d train and %d test images under %s\n", data.train.n, data.test.n,
                gen_out->c_str());
  });

  // ---- train-classifier -----------------------------------------------------
  auto* tc = app.add_subcommand("train-classifier", "train the frozen downstream classifier");
  auto tc_data = std::make_shared<std::string>();
  auto tc_out = std::make_shared<std::string>();
  auto tc_aug = std::make_shared<std::string>("none");
  auto tc_extra = std::make_shared<std::string>();
  auto tc_cfg = std::make_shared<cls::ClassifierTrainConfig>();
  auto tc_overwrite = std::make_shared<bool>(false);
  tc->add_option("--data", *tc_data, "dataset directory")->required();
  tc->add_option("--out", *tc_out, "checkpoint path")->required();
  tc->add_option("--epochs", tc_cfg->epochs, "training epochs");
  tc->add_option("--lr", tc_cfg->lr, "Adam learning rate");
  tc->add_option("--batch-size", tc_cfg->batch_size, "mini-batch size");
  tc->add_option("--seed", tc_cfg->seed, "random seed");
  tc->add_option("--augmentation", *tc_aug, "none | mix | mix-plus");
  tc->add_option("--mix-extra", *tc_extra, "comma list of extra mix ops (mix-plus)");
  tc->add_option("--threads", tc_cfg->threads, "worker thread cap");
  tc->add_flag("--overwrite", *tc_overwrite, "replace existing outputs");
  tc->callback([=] {
    Timer timer;
    require_fresh(*tc_out, *tc_overwrite);
    auto mode = cls::mix_mode_from_name(*tc_aug);
    require(mode.has_value(), "unknown augmentation mode: " + *tc_aug);
    tc_cfg->augmentation = *mode;
    tc_cfg->mix_extra_ops = split_csv(*tc_extra);
    for (const auto& op : tc_cfg->mix_extra_ops)
      require(corrupt::is_known_mix_op(op), "unknown mix op: " + op);
    corrupt::Dataset data = load_dataset(*tc_data);
    cls::ClassifierParams params = cls::train_classifier(data.train, *tc_cfg);
    const double train_acc = cls::accuracy(params, data.train, tc_cfg->threads);
    const double test_acc = cls::accuracy(params, data.test, tc_cfg->threads);
    ckpt::save_classifier(*tc_out, params);
    io::RunManifest m;
    m.command = "train-classifier";
    m.config = {{"epochs", std::to_string(tc_cfg->epochs)},
                {"lr", std::to_string(tc_cfg->lr)},
                {"batch_size", std::to_string(tc_cfg->batch_size)},
                {"augmentation", *tc_aug},
                {"mix_extra", *tc_extra},
                {"data", *tc_data}};
    m.seeds = {tc_cfg->seed};
    m.outputs = {*tc_out};
    m.duration_seconds = timer.seconds();
    io::write_manifest(*tc_out, m);
    std::printf("classifier: train accuracy %.4f, test accuracy %.4f -> %s\n", train_acc,
                test_acc, tc_out->c_str());
  });

  // ---- train-dyntta ----------------------------------------------------------
  auto* td = app.add_subcommand("train-dyntta", "train the enhancement model");
  auto td_data = std::make_shared<std::string>();
  auto td_clf = std::make_shared<std::string>();
  auto td_out = std::make_shared<std::string>();
  auto td_scenario = std::make_shared<std::string>("nonblind");
  auto td_mode = std::make_shared<std::string>("full");
  auto td_scale = std::make_shared<std::string>("standard");
  auto td_leave = std::make_shared<std::string>();
  auto td_mix = std::make_shared<std::string>();
  auto td_cfg = std::make_shared<train::TrainConfig>();
  auto td_common = std::make_shared<CommonTrainOpts>();
  td->add_option("--data", *td_data, "dataset directory")->required();
  td->add_option("--classifier", *td_clf, "frozen classifier checkpoint")->required();
  td->add_option("--out", *td_out, "checkpoint path")->required();
  td->add_option("--scenario", *td_scenario, "nonblind | blind");
  td->add_option("--mode", *td_mode, "full | blend-only");
  td->add_option("--scale", *td_scale, "small | standard | large");
  td->add_option("--leave-out", *td_leave, "augmentation kind to exclude");
  td->add_option("--mix-ops", *td_mix, "blind-scenario mix op list");
  attach_train_config(td, *td_cfg, *td_common);
  td->callback([=] {
    Timer timer;
    require_fresh(*td_out, td_common->overwrite);
    auto scen = corrupt::scenario_from_name(*td_scenario);
    require(scen.has_value(), "unknown scenario: " + *td_scenario);
    td_cfg->scenario = *scen;
    auto mode = head::mode_from_name(*td_mode);
    require(mode.has_value(), "unknown mode: " + *td_mode);
    td_cfg->mode = *mode;
    auto scale = aug::scale_from_name(*td_scale);
    require(scale.has_value(), "unknown scale: " + *td_scale);
    td_cfg->scale = *scale;
    if (!td_leave->empty()) {
      auto kind = aug::kind_from_name(*td_leave);
      require(kind.has_value(), "unknown leave-out kind: " + *td_leave);
      td_cfg->leave_out = *kind;
    }
    td_cfg->mix_ops = split_csv(*td_mix);
    finish_config(*td_cfg, *td_common);

    corrupt::Dataset data = load_dataset(*td_data);
    cls::ClassifierParams clf = ckpt::load_classifier(*td_clf);
    train::TrainResult result = train::train_dyntta(clf, data.train, *td_cfg);
    ckpt::DynttaCheckpoint out;
    out.params = std::move(result.params);
    out.scale = td_cfg->scale;
    out.mode = td_cfg->mode;
    out.leave_out = td_cfg->leave_out;
    ckpt::save_dyntta(*td_out, out);

    io::RunManifest m;
    m.command = "train-dyntta";
    m.config = train::config_kv(*td_cfg);
    m.config["data"] = *td_data;
    m.seeds = {td_cfg->seed};
    m.input_hashes[*td_clf] = ckpt::sha1_file(*td_clf);
    m.outputs = {*td_out};
    m.duration_seconds = timer.seconds();
    io::write_manifest(*td_out, m);
    std::printf("dyntta: loss %.4f -> %.4f over %d epochs -> %s\n", result.initial_loss,
                result.final_loss, td_cfg->epochs, td_out->c_str());
  });

  // ---- eval -------------------------------------------------------------------
  auto* ev = app.add_subcommand("eval", "accuracy over a corruption grid");
  auto ev_data = std::make_shared<std::string>();
  auto ev_clf = std::make_shared<std::string>();
  auto ev_dyntta = std::make_shared<std::string>();
  auto ev_kinds = std::make_shared<std::string>("all");
  auto ev_sevs = std::make_shared<std::string>("all");
  auto ev_out = std::make_shared<std::string>();
  auto ev_settings = std::make_shared<train::EvalSettings>();
  auto ev_svg = std::make_shared<bool>(false);
  auto ev_overwrite = std::make_shared<bool>(false);
  ev->add_option("--data", *ev_data, "dataset directory")->required();
  ev->add_option("--classifier", *ev_clf, "classifier checkpoint")->required();
  ev->add_option("--dyntta", *ev_dyntta, "enhancement checkpoint (omit for baseline)");
  ev->add_option("--kinds", *ev_kinds, "all | unseen | seen | comma list");
  ev->add_option("--severities", *ev_sevs, "all | comma list of 1..5");
  ev->add_option("--threshold", ev_settings->threshold, "pruning threshold");
  ev->add_option("--batch-size", ev_settings->batch_size, "evaluation batch size");
  ev->add_option("--seed", ev_settings->seed, "corruption seed");
  ev->add_option("--threads", ev_settings->threads, "worker thread cap");
  ev->add_option("--out", *ev_out, "output prefix (.csv/.json[/.svg])")->required();
  ev->add_flag("--svg", *ev_svg, "emit per-severity accuracy curves");
  ev->add_flag("--overwrite", *ev_overwrite, "replace existing outputs");
  ev->callback([=] {
    Timer timer;
    require_fresh(*ev_out + ".json", *ev_overwrite);
    ev_settings->cells = parse_cells(*ev_kinds, *ev_sevs);
    corrupt::Dataset data = load_dataset(*ev_data);
    cls::ClassifierParams clf = ckpt::load_classifier(*ev_clf);

    train::EvalReport report;
    io::RunManifest m;
    if (ev_dyntta->empty()) {
      report =
          train::evaluate(clf, nullptr, aug::catalog(), head::Mode::Full, data.test, *ev_settings);
    } else {
      ckpt::DynttaCheckpoint dyn = ckpt::load_dyntta(*ev_dyntta);
      report =
          train::evaluate(clf, &dyn.params, dyn.catalog(), dyn.mode, data.test, *ev_settings);
      m.input_hashes[*ev_dyntta] = ckpt::sha1_file(*ev_dyntta);
    }
    io::write_text_atomic(*ev_out + ".csv", io::eval_report_csv(report));
    io::write_text_atomic(*ev_out + ".json", io::eval_report_json(report));
    m.outputs = {*ev_out + ".csv", *ev_out + ".json"};
    if (*ev_svg) {
      io::write_text_atomic(*ev_out + ".svg", io::severity_curves_svg(report));
      m.outputs.push_back(*ev_out + ".svg");
    }
    m.command = "eval";
    m.config = {{"kinds", *ev_kinds},
                {"severities", *ev_sevs},
                {"threshold", std::to_string(ev_settings->threshold)},
                {"data", *ev_data}};
    m.seeds = {ev_settings->seed};
    m.input_hashes[*ev_clf] = ckpt::sha1_file(*ev_clf);
    m.duration_seconds = timer.seconds();
    io::write_manifest(*ev_out, m);
    std::printf("clean %.4f (%+.4f)  unseen %.4f (%+.4f)  all %.4f (%+.4f)  executed %.2f\n",
                report.clean_accuracy, report.clean_delta, report.unseen_mean,
                report.unseen_delta, report.all_mean, report.all_delta, report.mean_executed);
  });

  // ---- ablate ------------------------------------------------------------------
  auto* ab = app.add_subcommand("ablate", "paired-seed ablation suites");
  auto ab_suite = std::make_shared<std::string>();
  auto ab_data = std::make_shared<std::string>();
  auto ab_clf = std::make_shared<std::string>();
  auto ab_seeds = std::make_shared<std::string>("0,1,2");
  auto ab_out = std::make_shared<std::string>();
  auto ab_scenario = std::make_shared<std::string>("nonblind");
  auto ab_kinds = std::make_shared<std::string>("unseen");
  auto ab_sevs = std::make_shared<std::string>("5");
  auto ab_mix = std::make_shared<std::string>();
  auto ab_cfg = std::make_shared<train::TrainConfig>();
  auto ab_common = std::make_shared<CommonTrainOpts>();
  auto ab_eval = std::make_shared<train::EvalSettings>();
  ab->add_option("--suite", *ab_suite, "leave-one-out | modes | range-scale")->required();
  ab->add_option("--data", *ab_data, "dataset directory")->required();
  ab->add_option("--classifier", *ab_clf, "classifier checkpoint")->required();
  ab->add_option("--seeds", *ab_seeds, "comma list of seeds");
  ab->add_option("--scenario", *ab_scenario, "nonblind | blind");
  ab->add_option("--mix-ops", *ab_mix, "blind-scenario mix op list");
  ab->add_option("--eval-kinds", *ab_kinds, "evaluation kinds");
  ab->add_option("--eval-severities", *ab_sevs, "evaluation severities");
  ab->add_option("--eval-seed", ab_eval->seed, "corruption seed for evaluation");
  ab->add_option("--out", *ab_out, "output prefix")->required();
  attach_train_config(ab, *ab_cfg, *ab_common);
  ab->callback([=] {
    Timer timer;
    require_fresh(*ab_out + ".json", ab_common->overwrite);
    auto suite = train::suite_from_name(*ab_suite);
    require(suite.has_value(), "unknown ablation suite: " + *ab_suite);
    auto scen = corrupt::scenario_from_name(*ab_scenario);
    require(scen.has_value(), "unknown scenario: " + *ab_scenario);
    ab_cfg->scenario = *scen;
    ab_cfg->mix_ops = split_csv(*ab_mix);
    finish_config(*ab_cfg, *ab_common);
    ab_eval->cells = parse_cells(*ab_kinds, *ab_sevs);
    ab_eval->threads = ab_common->threads;

    corrupt::Dataset data = load_dataset(*ab_data);
    cls::ClassifierParams clf = ckpt::load_classifier(*ab_clf);
    train::AblationReport report =
        train::run_ablation(*suite, clf, data, *ab_cfg, parse_seeds(*ab_seeds), *ab_eval);
    io::write_text_atomic(*ab_out + ".csv", io::ablation_report_csv(report));
    io::write_text_atomic(*ab_out + ".json", io::ablation_report_json(report));

    io::RunManifest m;
    m.command = "ablate";
    m.config = train::config_kv(*ab_cfg);
    m.config["suite"] = *ab_suite;
    m.config["data"] = *ab_data;
    m.seeds = parse_seeds(*ab_seeds);
    m.input_hashes[*ab_clf] = ckpt::sha1_file(*ab_clf);
    m.outputs = {*ab_out + ".csv", *ab_out + ".json"};
    m.duration_seconds = timer.seconds();
    io::write_manifest(*ab_out, m);
    std::printf("%s: %zu runs -> %s.{csv,json}\n", ab_suite->c_str(), report.runs.size(),
                ab_out->c_str());
  });

  // ---- prune-sweep ---------------------------------------------------------------
  auto* ps = app.add_subcommand("prune-sweep", "accuracy/cost across pruning thresholds");
  auto ps_data = std::make_shared<std::string>();
  auto ps_clf = std::make_shared<std::string>();
  auto ps_dyntta = std::make_shared<std::string>();
  auto ps_out = std::make_shared<std::string>();
  auto ps_kinds = std::make_shared<std::string>("unseen");
  auto ps_sevs = std::make_shared<std::string>("5");
  auto ps_thresholds = std::make_shared<std::string>("0,0.005,0.01,0.02,0.05,0.1,0.2");
  auto ps_settings = std::make_shared<train::EvalSettings>();
  auto ps_overwrite = std::make_shared<bool>(false);
  ps->add_option("--data", *ps_data, "dataset directory")->required();
  ps->add_option("--classifier", *ps_clf, "classifier checkpoint")->required();
  ps->add_option("--dyntta", *ps_dyntta, "enhancement checkpoint")->required();
  ps->add_option("--thresholds", *ps_thresholds, "comma list of thresholds");
  ps->add_option("--kinds", *ps_kinds, "evaluation kinds");
  ps->add_option("--severities", *ps_sevs, "evaluation severities");
  ps->add_option("--seed", ps_settings->seed, "corruption seed");
  ps->add_option("--batch-size", ps_settings->batch_size, "evaluation batch size");
  ps->add_option("--threads", ps_settings->threads, "worker thread cap");
  ps->add_option("--out", *ps_out, "output prefix")->required();
  ps->add_flag("--overwrite", *ps_overwrite, "replace existing outputs");
  ps->callback([=] {
    Timer timer;
    require_fresh(*ps_out + ".json", *ps_overwrite);
    ps_settings->cells = parse_cells(*ps_kinds, *ps_sevs);
    corrupt::Dataset data = load_dataset(*ps_data);
    cls::ClassifierParams clf = ckpt::load_classifier(*ps_clf);
    ckpt::DynttaCheckpoint dyn = ckpt::load_dyntta(*ps_dyntta);

    std::ostringstream csv;
    csv << "threshold,mean_executed,clean,unseen_mean,all_mean,clean_vs_t0,all_vs_t0\n";
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    double clean0 = 0, all0 = 0;
    bool first = true;
    for (const auto& t : split_csv(*ps_thresholds)) {
      ps_settings->threshold = std::stof(t);
      train::EvalReport r =
          train::evaluate(clf, &dyn.params, dyn.catalog(), dyn.mode, data.test, *ps_settings);
      if (first) {
        clean0 = r.clean_accuracy;
        all0 = r.all_mean;
        first = false;
      }
      char line[256];
      std::snprintf(line, sizeof(line), "%s,%.4f,%.6f,%.6f,%.6f,%.6f,%.6f\n", t.c_str(),
                    r.mean_executed, r.clean_accuracy, r.unseen_mean, r.all_mean,
                    r.clean_accuracy - clean0, r.all_mean - all0);
      csv << line;
      nlohmann::ordered_json row;
      row["threshold"] = std::stod(t);
      row["mean_executed"] = r.mean_executed;
      row["clean"] = r.clean_accuracy;
      row["unseen_mean"] = r.unseen_mean;
      row["all_mean"] = r.all_mean;
      rows.push_back(std::move(row));
    }
    io::write_text_atomic(*ps_out + ".csv", csv.str());
    nlohmann::ordered_json j;
    j["rows"] = std::move(rows);
    io::write_text_atomic(*ps_out + ".json", j.dump(2) + "\n");

    io::RunManifest m;
    m.command = "prune-sweep";
    m.config = {{"thresholds", *ps_thresholds},
                {"kinds", *ps_kinds},
                {"severities", *ps_sevs},
                {"data", *ps_data}};
    m.seeds = {ps_settings->seed};
    m.input_hashes[*ps_clf] = ckpt::sha1_file(*ps_clf);
    m.input_hashes[*ps_dyntta] = ckpt::sha1_file(*ps_dyntta);
    m.outputs = {*ps_out + ".csv", *ps_out + ".json"};
    m.duration_seconds = timer.seconds();
    io::write_manifest(*ps_out, m);
    std::printf("prune sweep -> %s.{csv,json}\n", ps_out->c_str());
  });

  // ---- estimate -------------------------------------------------------------------
  auto* es = app.add_subcommand("estimate",
                                "estimate training-time augmentations from blend weights");
  auto es_data = std::make_shared<std::string>();
  auto es_clf = std::make_shared<std::string>();
  auto es_dyntta = std::make_shared<std::string>();
  auto es_out = std::make_shared<std::string>();
  auto es_corruptions = std::make_shared<std::string>("speckle-noise,saturate-shift");
  auto es_val_fraction = std::make_shared<double>(0.2);
  auto es_severity = std::make_shared<int>(5);
  auto es_top = std::make_shared<int>(4);
  auto es_threads = std::make_shared<int>(0);
  auto es_seed = std::make_shared<uint64_t>(0);
  auto es_svg = std::make_shared<bool>(false);
  auto es_overwrite = std::make_shared<bool>(false);
  es->add_option("--data", *es_data, "dataset directory")->required();
  es->add_option("--classifier", *es_clf, "classifier checkpoint")->required();
  es->add_option("--dyntta", *es_dyntta, "enhancement checkpoint")->required();
  es->add_option("--corruptions", *es_corruptions, "kinds applied to the validation split");
  es->add_option("--val-fraction", *es_val_fraction, "validation share of the test split");
  es->add_option("--severity", *es_severity, "corruption severity");
  es->add_option("--top-n", *es_top, "ranked kinds to keep");
  es->add_option("--seed", *es_seed, "split/corruption seed");
  es->add_option("--threads", *es_threads, "worker thread cap");
  es->add_option("--out", *es_out, "output prefix")->required();
  es->add_flag("--svg", *es_svg, "emit the blend-weight boxplot");
  es->add_flag("--overwrite", *es_overwrite, "replace existing outputs");
  es->callback([=] {
    Timer timer;
    require_fresh(*es_out + ".stats.json", *es_overwrite);
    corrupt::Dataset data = load_dataset(*es_data);
    cls::ClassifierParams clf = ckpt::load_classifier(*es_clf);
    ckpt::DynttaCheckpoint dyn = ckpt::load_dyntta(*es_dyntta);

    auto [val, heldout] = split_val_test(data.test, *es_val_fraction, *es_seed);
    std::vector<corrupt::CorruptionKind> kinds;
    for (const auto& name : split_csv(*es_corruptions)) {
      auto k = corrupt::kind_from_name(name);
      require(k.has_value(), "unknown corruption kind: " + name);
      kinds.push_back(*k);
    }
    require(!kinds.empty(), "estimate: at least one corruption kind required");
    Rng pick(Rng::mix(*es_seed, 0xE57));
    for (int i = 0; i < val.n; ++i) {
      const corrupt::CorruptionKind k = kinds[pick.uniform_int(static_cast<int>(kinds.size()))];
      val.set_image(i, corrupt::corrupt(val.image(i), k, *es_severity, pick.next_u64()));
    }

    est::WeightStats stats =
        est::collect_stats(dyn.params, clf, dyn.catalog(), dyn.mode, val, *es_threads);
    est::EstimatedOps ops = est::estimate_augs(stats, *es_top);
    if (ops.truncated)
      std::fprintf(stderr, "warning: top-n exceeds distinct kinds; list truncated\n");

    io::write_text_atomic(*es_out + ".stats.json", io::weight_stats_json(stats));
    nlohmann::ordered_json j;
    j["ranked_groups"] = ops.ranked_groups;
    j["ops"] = ops.ops;
    j["truncated"] = ops.truncated;
    io::write_text_atomic(*es_out + ".ops.json", j.dump(2) + "\n");

    io::RunManifest m;
    m.command = "estimate";
    m.config = {{"corruptions", *es_corruptions},
                {"val_fraction", std::to_string(*es_val_fraction)},
                {"severity", std::to_string(*es_severity)},
                {"top_n", std::to_string(*es_top)},
                {"data", *es_data}};
    m.seeds = {*es_seed};
    m.input_hashes[*es_clf] = ckpt::sha1_file(*es_clf);
    m.input_hashes[*es_dyntta] = ckpt::sha1_file(*es_dyntta);
    m.outputs = {*es_out + ".stats.json", *es_out + ".ops.json"};
    if (*es_svg) {
      io::write_text_atomic(*es_out + ".svg", io::weight_boxplot_svg(stats));
      m.outputs.push_back(*es_out + ".svg");
    }
    m.duration_seconds = timer.seconds();
    io::write_manifest(*es_out, m);
    std::printf("ranked:");
    for (const auto& g : ops.ranked_groups) std::printf(" %s", g.c_str());
    std::printf("\nestimated ops:");
    for (const auto& op : ops.ops) std::printf(" %s", op.c_str());
    std::printf("\n");
  });

  // ---- retrain-estimated -------------------------------------------------------
  auto* re = app.add_subcommand("retrain-estimated",
                                "retrain classifiers with normal/all/estimated mix ops");
  auto re_data = std::make_shared<std::string>();
  auto re_ops = std::make_shared<std::string>();
  auto re_from = std::make_shared<std::string>();
  auto re_out = std::make_shared<std::string>();
  auto re_seeds = std::make_shared<std::string>("0,1,2");
  auto re_cfg = std::make_shared<cls::ClassifierTrainConfig>();
  auto re_val_fraction = std::make_shared<double>(0.2);
  auto re_split_seed = std::make_shared<uint64_t>(0);
  auto re_overwrite = std::make_shared<bool>(false);
  re->add_option("--data", *re_data, "dataset directory")->required();
  re->add_option("--estimated", *re_ops, "comma list of estimated ops");
  re->add_option("--from", *re_from, "ops.json produced by estimate");
  re->add_option("--seeds", *re_seeds, "comma list of seeds");
  re->add_option("--epochs", re_cfg->epochs, "training epochs");
  re->add_option("--lr", re_cfg->lr, "Adam learning rate");
  re->add_option("--batch-size", re_cfg->batch_size, "mini-batch size");
  re->add_option("--val-fraction", *re_val_fraction, "validation share carved off the test split");
  re->add_option("--split-seed", *re_split_seed, "validation split seed (match estimate)");
  re->add_option("--threads", re_cfg->threads, "worker thread cap");
  re->add_option("--out", *re_out, "output prefix")->required();
  re->add_flag("--overwrite", *re_overwrite, "replace existing outputs");
  re->callback([=] {
    Timer timer;
    require_fresh(*re_out + ".json", *re_overwrite);
    std::vector<std::string> estimated = split_csv(*re_ops);
    if (!re_from->empty()) {
      auto j = nlohmann::ordered_json::parse(io::read_text(*re_from));
      estimated = j.at("ops").get<std::vector<std::string>>();
    }
    require(!estimated.empty(), "no estimated ops given (use --estimated or --from)");
    for (const auto& op : estimated)
      require(corrupt::is_known_mix_op(op), "unknown mix op: " + op);

    corrupt::Dataset data = load_dataset(*re_data);
    auto [val, heldout] = split_val_test(data.test, *re_val_fraction, *re_split_seed);
    (void)val;
    est::RetrainReport report =
        est::retrain_and_compare(data, estimated, parse_seeds(*re_seeds), *re_cfg, heldout,
                                 Rng::mix(*re_split_seed, 0xEE), re_cfg->threads);
    io::write_text_atomic(*re_out + ".csv", io::retrain_report_csv(report));
    io::write_text_atomic(*re_out + ".json", io::retrain_report_json(report));

    io::RunManifest m;
    m.command = "retrain-estimated";
    m.config = {{"estimated", re_ops->empty() ? *re_from : *re_ops},
                {"epochs", std::to_string(re_cfg->epochs)},
                {"data", *re_data}};
    m.seeds = parse_seeds(*re_seeds);
    m.outputs = {*re_out + ".csv", *re_out + ".json"};
    m.duration_seconds = timer.seconds();
    io::write_manifest(*re_out, m);
    std::printf("retrain report -> %s.{csv,json}\n", re_out->c_str());
  });

  // ---- grad-check ------------------------------------------------------------------
  auto* gc = app.add_subcommand("grad-check", "finite-difference verification of every op");
  auto gc_seeds = std::make_shared<int>(5);
  auto gc_seed = std::make_shared<uint64_t>(0);
  gc->add_option("--seeds", *gc_seeds, "random seeds per op");
  gc->add_option("--seed", *gc_seed, "base seed");
  gc->callback([=] {
    GradSuiteReport report = run_gradient_suite(*gc_seeds, *gc_seed);
    for (const auto& e : report.entries)
      std::printf("%-44s max rel err %.3e  (tol %.0e)  %s\n", e.name.c_str(), e.max_rel_err,
                  e.tolerance, e.pass ? "pass" : "FAIL");
    if (!report.all_pass()) throw NumericError("gradient suite failed");
    std::printf("all %zu checks passed\n", report.entries.size());
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"differentiable test-time augmentation toolkit"};
  build_cli(app);
  try {
    app.parse(argc, argv);
    return 0;
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 64;  // usage error
  } catch (const ContractError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const TrainingError& e) {
    std::fprintf(stderr, "training error: %s\n", e.what());
    return 2;
  } catch (const NumericError& e) {
    std::fprintf(stderr, "numeric error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
