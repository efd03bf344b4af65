#include "dyntta/png_io.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>

namespace dyntta::io {

namespace {

namespace fs = std::filesystem;

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
  out.push_back(static_cast<uint8_t>(v >> 24));
  out.push_back(static_cast<uint8_t>(v >> 16));
  out.push_back(static_cast<uint8_t>(v >> 8));
  out.push_back(static_cast<uint8_t>(v));
}

uint32_t get_u32(const uint8_t* p) {
  return (uint32_t(p[0]) << 24) | (uint32_t(p[1]) << 16) | (uint32_t(p[2]) << 8) | uint32_t(p[3]);
}

void put_chunk(std::vector<uint8_t>& out, const char type[4], const std::vector<uint8_t>& data) {
  put_u32(out, static_cast<uint32_t>(data.size()));
  size_t start = out.size();
  out.insert(out.end(), type, type + 4);
  out.insert(out.end(), data.begin(), data.end());
  uint32_t crc = crc32(0L, out.data() + start, static_cast<uInt>(out.size() - start));
  put_u32(out, crc);
}

std::vector<uint8_t> zlib_deflate(const std::vector<uint8_t>& raw) {
  uLongf bound = compressBound(static_cast<uLong>(raw.size()));
  std::vector<uint8_t> out(bound);
  int rc = compress2(out.data(), &bound, raw.data(), static_cast<uLong>(raw.size()), 6);
  require(rc == Z_OK, "png: deflate failed");
  out.resize(bound);
  return out;
}

std::vector<uint8_t> zlib_inflate(const uint8_t* data, size_t len, size_t expected) {
  std::vector<uint8_t> out(expected);
  z_stream zs;
  std::memset(&zs, 0, sizeof(zs));
  require(inflateInit(&zs) == Z_OK, "png: inflate init failed");
  zs.next_in = const_cast<Bytef*>(data);
  zs.avail_in = static_cast<uInt>(len);
  zs.next_out = out.data();
  zs.avail_out = static_cast<uInt>(out.size());
  int rc = inflate(&zs, Z_FINISH);
  inflateEnd(&zs);
  require(rc == Z_STREAM_END && zs.avail_out == 0, "png: corrupt compressed data");
  return out;
}

int paeth(int a, int b, int c) {
  int p = a + b - c;
  int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
  if (pa <= pb && pa <= pc) return a;
  if (pb <= pc) return b;
  return c;
}

}  // namespace

std::vector<uint8_t> encode_png(const std::vector<uint8_t>& rgb, int h, int w) {
  require(static_cast<int64_t>(rgb.size()) == static_cast<int64_t>(h) * w * 3,
          "encode_png: buffer size mismatch");
  std::vector<uint8_t> out = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};
  std::vector<uint8_t> ihdr;
  put_u32(ihdr, static_cast<uint32_t>(w));
  put_u32(ihdr, static_cast<uint32_t>(h));
  ihdr.push_back(8);  // bit depth
  ihdr.push_back(2);  // color type RGB
  ihdr.push_back(0);  // compression
  ihdr.push_back(0);  // filter
  ihdr.push_back(0);  // no interlace
  put_chunk(out, "IHDR", ihdr);

  std::vector<uint8_t> raw;
  raw.reserve(static_cast<size_t>(h) * (static_cast<size_t>(w) * 3 + 1));
  for (int y = 0; y < h; ++y) {
    raw.push_back(0);  // filter: none
    raw.insert(raw.end(), rgb.begin() + static_cast<size_t>(y) * w * 3,
               rgb.begin() + static_cast<size_t>(y + 1) * w * 3);
  }
  put_chunk(out, "IDAT", zlib_deflate(raw));
  put_chunk(out, "IEND", {});
  return out;
}

std::vector<uint8_t> decode_png(const std::vector<uint8_t>& bytes, int& h, int& w) {
  static const uint8_t sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};
  require(bytes.size() > 8 && std::memcmp(bytes.data(), sig, 8) == 0, "not a png file");
  size_t pos = 8;
  int bit_depth = 0, color_type = 0, width = 0, height = 0;
  std::vector<uint8_t> idat;
  while (pos + 8 <= bytes.size()) {
    uint32_t len = get_u32(bytes.data() + pos);
    require(pos + 12 + len <= bytes.size(), "png: truncated chunk");
    const char* type = reinterpret_cast<const char*>(bytes.data() + pos + 4);
    const uint8_t* data = bytes.data() + pos + 8;
    if (std::memcmp(type, "IHDR", 4) == 0) {
      require(len == 13, "png: bad IHDR");
      width = static_cast<int>(get_u32(data));
      height = static_cast<int>(get_u32(data + 4));
      bit_depth = data[8];
      color_type = data[9];
      require(bit_depth == 8, "png: only bit depth 8 is supported");
      require(color_type == 0 || color_type == 2 || color_type == 6,
              "png: only gray/RGB/RGBA are supported");
      require(data[12] == 0, "png: interlaced images are not supported");
    } else if (std::memcmp(type, "IDAT", 4) == 0) {
      idat.insert(idat.end(), data, data + len);
    } else if (std::memcmp(type, "IEND", 4) == 0) {
      break;
    }
    pos += 12 + len;
  }
  require(width > 0 && height > 0 && !idat.empty(), "png: missing image data");

  const int channels = color_type == 0 ? 1 : (color_type == 2 ? 3 : 4);
  const size_t stride = static_cast<size_t>(width) * channels;
  std::vector<uint8_t> raw =
      zlib_inflate(idat.data(), idat.size(), static_cast<size_t>(height) * (stride + 1));

  std::vector<uint8_t> pixels(static_cast<size_t>(height) * stride);
  for (int y = 0; y < height; ++y) {
    const uint8_t filter = raw[static_cast<size_t>(y) * (stride + 1)];
    const uint8_t* src = raw.data() + static_cast<size_t>(y) * (stride + 1) + 1;
    uint8_t* dst = pixels.data() + static_cast<size_t>(y) * stride;
    const uint8_t* prev = y > 0 ? pixels.data() + static_cast<size_t>(y - 1) * stride : nullptr;
    for (size_t x = 0; x < stride; ++x) {
      const int a = x >= static_cast<size_t>(channels) ? dst[x - channels] : 0;
      const int b = prev ? prev[x] : 0;
      const int c = (prev && x >= static_cast<size_t>(channels)) ? prev[x - channels] : 0;
      int v = src[x];
      switch (filter) {
        case 0: break;
        case 1: v += a; break;
        case 2: v += b; break;
        case 3: v += (a + b) / 2; break;
        case 4: v += paeth(a, b, c); break;
        default: throw ContractError("png: unknown filter type");
      }
      dst[x] = static_cast<uint8_t>(v);
    }
  }

  h = height;
  w = width;
  std::vector<uint8_t> rgb(static_cast<size_t>(height) * width * 3);
  for (int64_t i = 0; i < static_cast<int64_t>(height) * width; ++i) {
    if (channels == 1) {
      rgb[3 * i] = rgb[3 * i + 1] = rgb[3 * i + 2] = pixels[i];
    } else {
      rgb[3 * i] = pixels[channels * i];
      rgb[3 * i + 1] = pixels[channels * i + 1];
      rgb[3 * i + 2] = pixels[channels * i + 2];
    }
  }
  return rgb;
}

void write_png(const std::string& path, const Tensor& image) {
  require(image.shape.size() == 3 && image.shape[0] == 3, "write_png: image must be {3,H,W}");
  const int h = image.shape[1], w = image.shape[2];
  const int64_t hw = static_cast<int64_t>(h) * w;
  std::vector<uint8_t> rgb(static_cast<size_t>(hw) * 3);
  for (int64_t i = 0; i < hw; ++i)
    for (int c = 0; c < 3; ++c) {
      // scale by 255, round half up
      const float v = std::clamp(image.data[c * hw + i], 0.0f, 1.0f);
      rgb[3 * i + c] = static_cast<uint8_t>(std::floor(v * 255.0f + 0.5f));
    }
  std::vector<uint8_t> bytes = encode_png(rgb, h, w);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  require(f.good(), "cannot open png for writing: " + path);
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  require(f.good(), "png write failed: " + path);
}

Tensor read_png(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  require(f.good(), "cannot open png: " + path);
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                             std::istreambuf_iterator<char>());
  int h = 0, w = 0;
  std::vector<uint8_t> rgb = decode_png(bytes, h, w);
  Tensor out({3, h, w});
  const int64_t hw = static_cast<int64_t>(h) * w;
  for (int64_t i = 0; i < hw; ++i)
    for (int c = 0; c < 3; ++c) out.data[c * hw + i] = rgb[3 * i + c] / 255.0f;
  return out;
}

void write_dataset_dir(const std::string& dir, const std::string& split,
                       const corrupt::ImageBatch& batch) {
  int classes = 0;
  for (int l : batch.labels) classes = std::max(classes, l + 1);
  std::vector<int> counter(classes, 0);
  for (int i = 0; i < batch.n; ++i) {
    const int cls = batch.labels[i];
    fs::path cdir = fs::path(dir) / split / ("class_" + std::to_string(cls));
    fs::create_directories(cdir);
    fs::path file = cdir / ("img_" + std::to_string(counter[cls]++) + ".png");
    write_png(file.string(), batch.image(i));
  }
}

corrupt::ImageBatch read_dataset_dir(const std::string& dir, const std::string& split) {
  fs::path root = fs::path(dir) / split;
  require(fs::is_directory(root), "dataset split directory not found: " + root.string());

  std::vector<std::pair<int, fs::path>> class_dirs;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (!entry.is_directory()) continue;
    const std::string name = entry.path().filename().string();
    if (name.rfind("class_", 0) != 0) continue;
    class_dirs.emplace_back(std::stoi(name.substr(6)), entry.path());
  }
  std::sort(class_dirs.begin(), class_dirs.end());
  require(!class_dirs.empty(), "no class directories under " + root.string());

  std::vector<Tensor> images;
  std::vector<int> labels;
  for (const auto& [cls, cdir] : class_dirs) {
    std::vector<std::pair<int, fs::path>> files;
    for (const auto& entry : fs::directory_iterator(cdir)) {
      const std::string name = entry.path().filename().string();
      if (name.rfind("img_", 0) != 0 || entry.path().extension() != ".png") continue;
      files.emplace_back(std::stoi(name.substr(4)), entry.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& [idx, file] : files) {
      images.push_back(read_png(file.string()));
      labels.push_back(cls);
    }
  }
  require(!images.empty(), "empty dataset under " + root.string());

  corrupt::ImageBatch batch;
  batch.n = static_cast<int>(images.size());
  batch.c = images[0].shape[0];
  batch.h = images[0].shape[1];
  batch.w = images[0].shape[2];
  batch.data = Array(static_cast<int64_t>(batch.n) * batch.image_size());
  batch.labels = std::move(labels);
  for (int i = 0; i < batch.n; ++i) {
    require(images[i].shape == images[0].shape, "dataset images must share one shape");
    batch.set_image(i, images[i]);
  }
  return batch;
}

}  // namespace dyntta::io
