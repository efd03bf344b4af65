#include "dyntta/train.hpp"

namespace dyntta::train {

std::string suite_name(AblationSuite s) {
  switch (s) {
    case AblationSuite::LeaveOneOut: return "leave-one-out";
    case AblationSuite::Modes: return "modes";
    case AblationSuite::RangeScale: return "range-scale";
  }
  return "?";
}

std::optional<AblationSuite> suite_from_name(const std::string& name) {
  if (name == "leave-one-out" || name == "loo") return AblationSuite::LeaveOneOut;
  if (name == "modes") return AblationSuite::Modes;
  if (name == "range-scale" || name == "rangescale") return AblationSuite::RangeScale;
  return std::nullopt;
}

namespace {

double robust_metric(const EvalReport& report) { return report.all_mean; }

AblationRun run_one(const std::string& label, const cls::ClassifierParams& classifier,
                    const corrupt::Dataset& data, const TrainConfig& config,
                    const EvalSettings& eval, const std::vector<std::string>& masked) {
  TrainResult trained = train_dyntta(classifier, data.train, config);
  const auto specs = catalog_for(config);
  EvalReport report =
      evaluate(classifier, &trained.params, specs, config.mode, data.test, eval);
  AblationRun run;
  run.label = label;
  run.seed = config.seed;
  run.config_digest = config_digest(config);
  run.paired_digest = config_digest(config, masked);
  run.clean = report.clean_accuracy;
  run.robust = robust_metric(report);
  return run;
}

}  // namespace

AblationReport run_ablation(AblationSuite suite, const cls::ClassifierParams& classifier,
                            const corrupt::Dataset& data, const TrainConfig& base,
                            const std::vector<uint64_t>& seeds, const EvalSettings& eval) {
  require(!seeds.empty(), "run_ablation: need at least one seed");
  AblationReport report;
  report.suite = suite;
  report.robust_metric = "mean accuracy over evaluated cells";

  for (uint64_t seed : seeds) {
    TrainConfig config = base;
    config.seed = seed;

    if (suite == AblationSuite::LeaveOneOut) {
      // reference first, then one run per excluded kind; filter groups are
      // excluded whole, 14 exclusions in total
      static const std::vector<aug::Kind> exclusions = {
          aug::Kind::Rotate,     aug::Kind::Scale,        aug::Kind::Saturate,
          aug::Kind::Contrast,   aug::Kind::Sharpness,    aug::Kind::Brightness,
          aug::Kind::AutoContrast, aug::Kind::Hue,        aug::Kind::Equalize,
          aug::Kind::Invert,     aug::Kind::Gamma,        aug::Kind::LowPass,
          aug::Kind::HighPass,   aug::Kind::NeuralEnhance};
      config.leave_out.reset();
      AblationRun ref = run_one("all", classifier, data, config, eval, {"leave_out"});
      report.runs.push_back(ref);
      for (aug::Kind kind : exclusions) {
        config.leave_out = kind;
        AblationRun run = run_one("without-" + aug::kind_name(kind), classifier, data, config,
                                  eval, {"leave_out"});
        run.robust_delta = run.robust - ref.robust;
        report.runs.push_back(run);
      }
    } else if (suite == AblationSuite::Modes) {
      config.mode = head::Mode::BlendOnly;
      AblationRun blend = run_one("blend-only", classifier, data, config, eval, {"mode"});
      config.mode = head::Mode::Full;
      AblationRun full = run_one("full", classifier, data, config, eval, {"mode"});
      full.robust_delta = full.robust - blend.robust;
      report.runs.push_back(blend);
      report.runs.push_back(full);
    } else {
      AblationRun reference;
      bool have_reference = false;
      for (aug::MagnitudeScale scale : {aug::MagnitudeScale::Small, aug::MagnitudeScale::Standard,
                                        aug::MagnitudeScale::Large}) {
        config.scale = scale;
        AblationRun run =
            run_one(aug::scale_name(scale), classifier, data, config, eval, {"scale"});
        if (scale == aug::MagnitudeScale::Standard) {
          reference = run;
          have_reference = true;
        }
        report.runs.push_back(run);
      }
      if (have_reference)
        for (AblationRun& run : report.runs)
          if (run.seed == seed) run.robust_delta = run.robust - reference.robust;
    }
  }
  return report;
}

}  // namespace dyntta::train
