#include "dyntta/report.hpp"

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace dyntta::io {

namespace {

using Json = nlohmann::ordered_json;

std::string fixed6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace

void write_text_atomic(const std::string& path, const std::string& text) {
  namespace fs = std::filesystem;
  fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    require(f.good(), "cannot open for writing: " + tmp.string());
    f.write(text.data(), static_cast<std::streamsize>(text.size()));
    require(f.good(), "write failed: " + tmp.string());
  }
  fs::rename(tmp, target);
}

std::string read_text(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  require(f.good(), "cannot open file: " + path);
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

std::string eval_report_csv(const train::EvalReport& report) {
  std::ostringstream os;
  os << "kind,severity,accuracy,delta\n";
  os << "clean,0," << fixed6(report.clean_accuracy) << "," << fixed6(report.clean_delta) << "\n";
  for (const auto& cell : report.cells)
    os << corrupt::kind_name(cell.kind) << "," << cell.severity << "," << fixed6(cell.accuracy)
       << "," << fixed6(cell.delta) << "\n";
  return os.str();
}

std::string eval_report_json(const train::EvalReport& report) {
  Json j;
  j["clean_accuracy"] = report.clean_accuracy;
  j["clean_delta"] = report.clean_delta;
  j["baseline"] = report.baseline_name;
  j["catalog_size"] = report.catalog_size;
  j["mean_executed_augmentations"] = report.mean_executed;
  j["unseen_mean"] = report.unseen_mean;
  j["unseen_delta"] = report.unseen_delta;
  j["all_mean"] = report.all_mean;
  j["all_delta"] = report.all_delta;
  Json cells = Json::array();
  for (const auto& cell : report.cells) {
    Json c;
    c["kind"] = corrupt::kind_name(cell.kind);
    c["severity"] = cell.severity;
    c["accuracy"] = cell.accuracy;
    c["delta"] = cell.delta;
    cells.push_back(std::move(c));
  }
  j["cells"] = std::move(cells);
  return j.dump(2) + "\n";
}

std::string ablation_report_csv(const train::AblationReport& report) {
  std::ostringstream os;
  os << "suite,label,seed,clean,robust,robust_delta,config_digest,paired_digest\n";
  for (const auto& run : report.runs)
    os << train::suite_name(report.suite) << "," << run.label << "," << run.seed << ","
       << fixed6(run.clean) << "," << fixed6(run.robust) << "," << fixed6(run.robust_delta) << ","
       << run.config_digest << "," << run.paired_digest << "\n";
  return os.str();
}

std::string ablation_report_json(const train::AblationReport& report) {
  Json j;
  j["suite"] = train::suite_name(report.suite);
  j["robust_metric"] = report.robust_metric;
  Json runs = Json::array();
  for (const auto& run : report.runs) {
    Json r;
    r["label"] = run.label;
    r["seed"] = run.seed;
    r["clean"] = run.clean;
    r["robust"] = run.robust;
    r["robust_delta"] = run.robust_delta;
    r["config_digest"] = run.config_digest;
    r["paired_digest"] = run.paired_digest;
    runs.push_back(std::move(r));
  }
  j["runs"] = std::move(runs);
  return j.dump(2) + "\n";
}

namespace {
Json stats_json(const std::vector<std::string>& names, const std::vector<est::SummaryStats>& s) {
  Json arr = Json::array();
  for (size_t i = 0; i < names.size(); ++i) {
    Json e;
    e["name"] = names[i];
    e["min"] = s[i].min;
    e["q1"] = s[i].q1;
    e["median"] = s[i].median;
    e["q3"] = s[i].q3;
    e["max"] = s[i].max;
    e["mean"] = s[i].mean;
    arr.push_back(std::move(e));
  }
  return arr;
}
}  // namespace

std::string weight_stats_json(const est::WeightStats& stats) {
  Json j;
  j["sample_count"] = stats.sample_count;
  j["entry_weights"] = stats_json(stats.entry_names, stats.entry_weights);
  j["group_weights"] = stats_json(stats.group_names, stats.group_weights);
  j["magnitudes"] = stats_json(stats.magnitude_names, stats.magnitudes);
  return j.dump(2) + "\n";
}

std::string retrain_report_csv(const est::RetrainReport& report) {
  std::ostringstream os;
  os << "opset,seed";
  for (const auto& name : report.unseen_names) os << "," << name;
  os << ",average\n";
  for (const auto& row : report.rows) {
    os << row.label << "," << row.seed;
    for (double acc : row.unseen_acc) os << "," << fixed6(acc);
    os << "," << fixed6(row.average) << "\n";
  }
  return os.str();
}

std::string retrain_report_json(const est::RetrainReport& report) {
  Json j;
  j["unseen"] = report.unseen_names;
  Json rows = Json::array();
  for (const auto& row : report.rows) {
    Json r;
    r["opset"] = row.label;
    r["seed"] = row.seed;
    r["unseen_accuracy"] = row.unseen_acc;
    r["average"] = row.average;
    rows.push_back(std::move(r));
  }
  j["rows"] = std::move(rows);
  return j.dump(2) + "\n";
}

std::map<std::string, std::string> parse_config_text(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    auto trim = [](std::string s) {
      const char* ws = " \t\r\n";
      const size_t a = s.find_first_not_of(ws);
      if (a == std::string::npos) return std::string();
      const size_t b = s.find_last_not_of(ws);
      return s.substr(a, b - a + 1);
    };
    line = trim(line);
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    require(eq != std::string::npos,
            "config: missing '=' on line " + std::to_string(lineno));
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

std::map<std::string, std::string> read_config_file(const std::string& path) {
  return parse_config_text(read_text(path));
}

}  // namespace dyntta::io
