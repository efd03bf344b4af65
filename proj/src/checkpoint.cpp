#include "dyntta/checkpoint.hpp"

#include <json.hpp>

#include <cstring>
#include <fstream>

namespace dyntta::ckpt {

namespace {

using Json = nlohmann::ordered_json;

constexpr char kMagic[8] = {'D', 'Y', 'N', 'T', 'T', 'A', '0', '1'};

struct NamedTensor {
  std::string name;
  Tensor* tensor;
};

template <typename Params>
std::vector<NamedTensor> named_tensors(Params& p) {
  std::vector<NamedTensor> out;
  p.visit([&out](const std::string& name, Tensor& t) { out.push_back({name, &t}); });
  return out;
}

void write_file(const std::string& path, const Json& manifest,
                const std::vector<NamedTensor>& tensors) {
  std::string json_text = manifest.dump();
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  require(f.good(), "cannot open checkpoint for writing: " + path);
  f.write(kMagic, 8);
  uint64_t len = json_text.size();
  f.write(reinterpret_cast<const char*>(&len), 8);
  f.write(json_text.data(), static_cast<std::streamsize>(json_text.size()));
  for (const auto& nt : tensors)
    f.write(reinterpret_cast<const char*>(nt.tensor->data.data()),
            static_cast<std::streamsize>(nt.tensor->size() * 4));
  require(f.good(), "checkpoint write failed: " + path);
}

Json tensor_manifest(const std::vector<NamedTensor>& tensors) {
  Json arr = Json::array();
  uint64_t offset = 0;
  for (const auto& nt : tensors) {
    Json t;
    t["name"] = nt.name;
    t["shape"] = nt.tensor->shape;
    t["offset"] = offset;
    arr.push_back(std::move(t));
    offset += static_cast<uint64_t>(nt.tensor->size()) * 4;
  }
  return arr;
}

struct Loaded {
  Json manifest;
  std::string blob;
};

Loaded read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  require(f.good(), "cannot open checkpoint: " + path);
  char magic[8];
  f.read(magic, 8);
  require(f.good() && std::memcmp(magic, kMagic, 8) == 0,
          "not a dyntta checkpoint: " + path);
  uint64_t len = 0;
  f.read(reinterpret_cast<char*>(&len), 8);
  require(f.good() && len < (1ull << 30), "corrupt checkpoint header: " + path);
  std::string json_text(len, '\0');
  f.read(json_text.data(), static_cast<std::streamsize>(len));
  require(f.good(), "truncated checkpoint manifest: " + path);
  Loaded out;
  out.manifest = Json::parse(json_text);
  out.blob.assign(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
  return out;
}

void load_tensors(const Loaded& loaded, const std::vector<NamedTensor>& tensors,
                  const std::string& path) {
  const Json& arr = loaded.manifest.at("tensors");
  require(arr.size() == tensors.size(), "checkpoint tensor count mismatch: " + path);
  for (size_t i = 0; i < tensors.size(); ++i) {
    const Json& entry = arr.at(i);
    require(entry.at("name").get<std::string>() == tensors[i].name,
            "checkpoint tensor name mismatch: expected " + tensors[i].name);
    Shape shape = entry.at("shape").get<Shape>();
    require(shape == tensors[i].tensor->shape,
            "checkpoint tensor shape mismatch for " + tensors[i].name);
    const uint64_t offset = entry.at("offset").get<uint64_t>();
    const uint64_t bytes = static_cast<uint64_t>(tensors[i].tensor->size()) * 4;
    require(offset + bytes <= loaded.blob.size(), "checkpoint blob out of range: " + path);
    std::memcpy(tensors[i].tensor->data.data(), loaded.blob.data() + offset, bytes);
  }
}

}  // namespace

std::vector<aug::AugmentationSpec> DynttaCheckpoint::catalog() const {
  std::vector<aug::AugmentationSpec> specs = aug::catalog(scale);
  if (leave_out) {
    std::erase_if(specs, [this](const aug::AugmentationSpec& s) { return s.kind == *leave_out; });
  }
  return specs;
}

void save_classifier(const std::string& path, cls::ClassifierParams& params) {
  Json m;
  m["format"] = "dyntta-checkpoint-v1";
  m["kind"] = "classifier";
  m["class_count"] = params.class_count;
  m["in_channels"] = params.in_channels;
  m["input_h"] = params.input_h;
  m["input_w"] = params.input_w;
  auto tensors = named_tensors(params);
  m["tensors"] = tensor_manifest(tensors);
  write_file(path, m, tensors);
}

cls::ClassifierParams load_classifier(const std::string& path) {
  Loaded loaded = read_file(path);
  require(loaded.manifest.at("kind") == "classifier", "checkpoint is not a classifier: " + path);
  cls::ClassifierParams params = cls::ClassifierParams::init(
      0, loaded.manifest.at("class_count").get<int>(),
      loaded.manifest.at("in_channels").get<int>(), loaded.manifest.at("input_h").get<int>(),
      loaded.manifest.at("input_w").get<int>());
  auto tensors = named_tensors(params);
  load_tensors(loaded, tensors, path);
  params.frozen = true;
  return params;
}

void save_dyntta(const std::string& path, DynttaCheckpoint& ckpt) {
  Json m;
  m["format"] = "dyntta-checkpoint-v1";
  m["kind"] = "dyntta";
  m["catalog_scale"] = aug::scale_name(ckpt.scale);
  m["mode"] = head::mode_name(ckpt.mode);
  m["leave_out"] = ckpt.leave_out ? aug::kind_name(*ckpt.leave_out) : "none";
  m["p_count"] = ckpt.params.p_count;
  m["k_count"] = ckpt.params.k_count;
  m["width"] = ckpt.params.width;
  auto tensors = named_tensors(ckpt.params);
  m["tensors"] = tensor_manifest(tensors);
  write_file(path, m, tensors);
}

DynttaCheckpoint load_dyntta(const std::string& path) {
  Loaded loaded = read_file(path);
  require(loaded.manifest.at("kind") == "dyntta", "checkpoint is not a dyntta model: " + path);
  DynttaCheckpoint ckpt;
  auto scale = aug::scale_from_name(loaded.manifest.at("catalog_scale").get<std::string>());
  require(scale.has_value(), "unknown catalog scale in checkpoint: " + path);
  ckpt.scale = *scale;
  auto mode = head::mode_from_name(loaded.manifest.at("mode").get<std::string>());
  require(mode.has_value(), "unknown mode in checkpoint: " + path);
  ckpt.mode = *mode;
  const std::string lo = loaded.manifest.at("leave_out").get<std::string>();
  if (lo != "none") {
    auto kind = aug::kind_from_name(lo);
    require(kind.has_value(), "unknown leave-out kind in checkpoint: " + path);
    ckpt.leave_out = *kind;
  }
  ckpt.params = head::DynttaParams::init(0, ckpt.catalog(), 3,
                                         loaded.manifest.at("width").get<int>());
  require(ckpt.params.p_count == loaded.manifest.at("p_count").get<int>() &&
              ckpt.params.k_count == loaded.manifest.at("k_count").get<int>(),
          "checkpoint catalog does not match stored head width: " + path);
  auto tensors = named_tensors(ckpt.params);
  load_tensors(loaded, tensors, path);
  return ckpt;
}

// ---- SHA-1 -----------------------------------------------------------------

namespace {

struct Sha1 {
  uint32_t h[5] = {0x67452301u, 0xEFCDAB89u, 0x98BADCFEu, 0x10325476u, 0xC3D2E1F0u};
  uint64_t total = 0;
  uint8_t buf[64];
  size_t fill = 0;

  static uint32_t rol(uint32_t v, int s) { return (v << s) | (v >> (32 - s)); }

  void block(const uint8_t* p) {
    uint32_t w[80];
    for (int i = 0; i < 16; ++i)
      w[i] = (uint32_t(p[4 * i]) << 24) | (uint32_t(p[4 * i + 1]) << 16) |
             (uint32_t(p[4 * i + 2]) << 8) | uint32_t(p[4 * i + 3]);
    for (int i = 16; i < 80; ++i) w[i] = rol(w[i - 3] ^ w[i - 8] ^ w[i - 14] ^ w[i - 16], 1);
    uint32_t a = h[0], b = h[1], c = h[2], d = h[3], e = h[4];
    for (int i = 0; i < 80; ++i) {
      uint32_t f, k;
      if (i < 20) {
        f = (b & c) | (~b & d);
        k = 0x5A827999u;
      } else if (i < 40) {
        f = b ^ c ^ d;
        k = 0x6ED9EBA1u;
      } else if (i < 60) {
        f = (b & c) | (b & d) | (c & d);
        k = 0x8F1BBCDCu;
      } else {
        f = b ^ c ^ d;
        k = 0xCA62C1D6u;
      }
      uint32_t t = rol(a, 5) + f + e + k + w[i];
      e = d;
      d = c;
      c = rol(b, 30);
      b = a;
      a = t;
    }
    h[0] += a;
    h[1] += b;
    h[2] += c;
    h[3] += d;
    h[4] += e;
  }

  void update(const void* data, size_t len) {
    const uint8_t* p = static_cast<const uint8_t*>(data);
    total += len;
    while (len > 0) {
      size_t take = std::min(len, 64 - fill);
      std::memcpy(buf + fill, p, take);
      fill += take;
      p += take;
      len -= take;
      if (fill == 64) {
        block(buf);
        fill = 0;
      }
    }
  }

  std::string finish() {
    uint64_t bits = total * 8;
    uint8_t pad = 0x80;
    update(&pad, 1);
    uint8_t zero = 0;
    while (fill != 56) update(&zero, 1);
    uint8_t lenb[8];
    for (int i = 0; i < 8; ++i) lenb[i] = static_cast<uint8_t>(bits >> (56 - 8 * i));
    update(lenb, 8);
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(40);
    for (uint32_t v : h)
      for (int i = 28; i >= 0; i -= 4) out.push_back(hex[(v >> i) & 0xF]);
    return out;
  }
};

}  // namespace

std::string sha1_hex(const void* data, size_t len) {
  Sha1 s;
  s.update(data, len);
  return s.finish();
}

std::string sha1_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  require(f.good(), "cannot open file for hashing: " + path);
  Sha1 s;
  char buf[65536];
  while (f.good()) {
    f.read(buf, sizeof(buf));
    s.update(buf, static_cast<size_t>(f.gcount()));
  }
  return s.finish();
}

namespace {
template <typename Params>
std::string digest_impl(Params& p) {
  Sha1 s;
  p.visit([&s](const std::string& name, Tensor& t) {
    s.update(name.data(), name.size());
    s.update(t.data.data(), static_cast<size_t>(t.size()) * 4);
  });
  return s.finish();
}
}  // namespace

std::string digest_params(cls::ClassifierParams& params) { return digest_impl(params); }
std::string digest_params(head::DynttaParams& params) { return digest_impl(params); }

}  // namespace dyntta::ckpt
