#include "dyntta/manifest.hpp"

#include "dyntta/checkpoint.hpp"
#include "dyntta/report.hpp"
#include "dyntta/tensor.hpp"

#include <json.hpp>

namespace dyntta::io {

namespace {
using Json = nlohmann::ordered_json;
}

std::string RunManifest::to_json() const {
  Json j;
  j["command"] = command;
  j["config"] = config;
  j["seeds"] = seeds;
  j["input_hashes"] = input_hashes;
  j["outputs"] = outputs;
  j["duration_seconds"] = duration_seconds;
  return j.dump(2) + "\n";
}

RunManifest RunManifest::from_json(const std::string& text) {
  Json j = Json::parse(text);
  RunManifest m;
  m.command = j.at("command").get<std::string>();
  m.config = j.at("config").get<std::map<std::string, std::string>>();
  m.seeds = j.at("seeds").get<std::vector<uint64_t>>();
  m.input_hashes = j.at("input_hashes").get<std::map<std::string, std::string>>();
  m.outputs = j.at("outputs").get<std::vector<std::string>>();
  m.duration_seconds = j.at("duration_seconds").get<double>();
  return m;
}

void write_manifest(const std::string& output_path, const RunManifest& manifest) {
  write_text_atomic(output_path + ".manifest.json", manifest.to_json());
}

void verify_manifest_inputs(const RunManifest& manifest) {
  for (const auto& [path, digest] : manifest.input_hashes) {
    const std::string actual = ckpt::sha1_file(path);
    require(actual == digest,
            "manifest input hash mismatch for " + path + " (expected " + digest + ")");
  }
}

}  // namespace dyntta::io
