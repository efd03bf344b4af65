#pragma once

#include "dyntta/estimate.hpp"
#include "dyntta/train.hpp"

#include <map>
#include <string>

namespace dyntta::io {

// Atomic text write: temp file in the same directory, then rename.
void write_text_atomic(const std::string& path, const std::string& text);
std::string read_text(const std::string& path);

// EvalReport: CSV has one row per kind x severity plus a clean row; JSON is
// the full structured report.
std::string eval_report_csv(const train::EvalReport& report);
std::string eval_report_json(const train::EvalReport& report);

std::string ablation_report_csv(const train::AblationReport& report);
std::string ablation_report_json(const train::AblationReport& report);

std::string weight_stats_json(const est::WeightStats& stats);
std::string retrain_report_csv(const est::RetrainReport& report);
std::string retrain_report_json(const est::RetrainReport& report);

// Flat key=value config file: one pair per line, '#' comments, blank lines
// ignored. Keys match the TrainConfig field names.
std::map<std::string, std::string> parse_config_text(const std::string& text);
std::map<std::string, std::string> read_config_file(const std::string& path);

}  // namespace dyntta::io
