#pragma once

#include "dyntta/classifier.hpp"
#include "dyntta/head.hpp"

#include <string>

namespace dyntta::ckpt {

// Checkpoint container: 8-byte magic, u64 little-endian JSON length, JSON
// manifest (tensor names, shapes, byte offsets, model metadata), then a raw
// little-endian float32 blob. Round-trips are bit-exact.

struct DynttaCheckpoint {
  head::DynttaParams params;
  aug::MagnitudeScale scale = aug::MagnitudeScale::Standard;
  head::Mode mode = head::Mode::Full;
  std::optional<aug::Kind> leave_out;

  std::vector<aug::AugmentationSpec> catalog() const;
};

void save_classifier(const std::string& path, cls::ClassifierParams& params);
cls::ClassifierParams load_classifier(const std::string& path);

void save_dyntta(const std::string& path, DynttaCheckpoint& ckpt);
DynttaCheckpoint load_dyntta(const std::string& path);

// SHA-1 digest (hex) of a file or byte range; used by run manifests and
// frozen-weight integrity checks.
std::string sha1_hex(const void* data, size_t len);
std::string sha1_file(const std::string& path);

// Content digest over a parameter set (names + raw float bytes).
std::string digest_params(cls::ClassifierParams& params);
std::string digest_params(head::DynttaParams& params);

}  // namespace dyntta::ckpt
