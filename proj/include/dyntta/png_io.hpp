#pragma once

#include "dyntta/corrupt.hpp"
#include "dyntta/tensor.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace dyntta::io {

// 8-bit RGB PNG, non-interlaced. Float pixels are scaled by 255 with
// round-half-up on write and divided by 255 on read.
void write_png(const std::string& path, const Tensor& image);
Tensor read_png(const std::string& path);

std::vector<uint8_t> encode_png(const std::vector<uint8_t>& rgb, int h, int w);
// Accepts bit-depth 8 gray / RGB / RGBA (alpha dropped), non-interlaced.
std::vector<uint8_t> decode_png(const std::vector<uint8_t>& bytes, int& h, int& w);

// Dataset directory layout: <dir>/<split>/class_<id>/img_<n>.png
void write_dataset_dir(const std::string& dir, const std::string& split,
                       const corrupt::ImageBatch& batch);
corrupt::ImageBatch read_dataset_dir(const std::string& dir, const std::string& split);

}  // namespace dyntta::io
