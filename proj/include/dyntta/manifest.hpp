#pragma once

#include <map>
#include <string>
#include <vector>

namespace dyntta::io {

// Provenance record written next to every CLI output (<output>.manifest.json):
// command, config snapshot, seeds, content hashes of input checkpoints,
// output paths, wall-clock duration. Written atomically on completion.
struct RunManifest {
  std::string command;
  std::map<std::string, std::string> config;
  std::vector<uint64_t> seeds;
  std::map<std::string, std::string> input_hashes;  // path -> sha1
  std::vector<std::string> outputs;
  double duration_seconds = 0;

  std::string to_json() const;
  static RunManifest from_json(const std::string& text);
};

void write_manifest(const std::string& output_path, const RunManifest& manifest);

// Re-hashes the manifest's inputs and compares; throws ContractError on
// mismatch (tamper check).
void verify_manifest_inputs(const RunManifest& manifest);

}  // namespace dyntta::io
