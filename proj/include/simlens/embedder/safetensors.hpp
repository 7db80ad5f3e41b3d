#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "simlens/error.hpp"

namespace simlens {

// Reader for the safetensors container: an 8-byte little-endian header
// length, a JSON header mapping tensor names to dtype/shape/byte range, then
// the raw data. F32, F16 and BF16 tensors are widened to float on access.
class SafetensorsFile {
public:
  struct Entry {
    std::string dtype;
    std::vector<std::size_t> shape;
    std::size_t begin = 0;
    std::size_t end = 0;
  };

  static SafetensorsFile load(const std::filesystem::path& path) {
    static_assert(std::endian::native == std::endian::little,
                  "safetensors reader assumes a little-endian host");
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ModelLoadError("cannot open model weights: " + path.string());
    std::uint64_t header_len = 0;
    in.read(reinterpret_cast<char*>(&header_len), sizeof header_len);
    if (!in || header_len == 0 || header_len > (100u << 20)) {
      throw ModelLoadError("not a safetensors file: " + path.string());
    }
    std::string header(header_len, '\0');
    in.read(header.data(), static_cast<std::streamsize>(header_len));
    if (!in) throw ModelLoadError("truncated safetensors header: " + path.string());

    SafetensorsFile f;
    try {
      const auto doc = nlohmann::json::parse(header);
      for (const auto& [name, info] : doc.items()) {
        if (name == "__metadata__") {
          for (const auto& [k, v] : info.items())
            if (v.is_string()) f.metadata_[k] = v.get<std::string>();
          continue;
        }
        Entry e;
        e.dtype = info.at("dtype").get<std::string>();
        e.shape = info.at("shape").get<std::vector<std::size_t>>();
        e.begin = info.at("data_offsets").at(0).get<std::size_t>();
        e.end = info.at("data_offsets").at(1).get<std::size_t>();
        f.entries_.emplace(name, std::move(e));
      }
    } catch (const nlohmann::json::exception& e) {
      throw ModelLoadError("malformed safetensors header in " + path.string() + ": " + e.what());
    }

    std::vector<char> rest((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    f.data_ = std::move(rest);
    for (const auto& [name, e] : f.entries_) {
      if (e.end < e.begin || e.end > f.data_.size()) {
        throw ModelLoadError("tensor '" + name + "' lies outside the data section");
      }
    }
    return f;
  }

  bool contains(const std::string& name) const { return entries_.count(name) != 0; }
  const std::map<std::string, Entry>& entries() const noexcept { return entries_; }
  const std::map<std::string, std::string>& metadata() const noexcept { return metadata_; }

  const Entry& entry(const std::string& name) const {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw ModelLoadError("model weights lack tensor '" + name + "'");
    return it->second;
  }

  std::vector<float> read(const std::string& name) const {
    const Entry& e = entry(name);
    std::size_t count = 1;
    for (auto s : e.shape) count *= s;
    const char* p = data_.data() + e.begin;
    const std::size_t bytes = e.end - e.begin;
    std::vector<float> out(count);
    if (e.dtype == "F32") {
      check_size(name, bytes, count * 4);
      std::memcpy(out.data(), p, bytes);
    } else if (e.dtype == "F16") {
      check_size(name, bytes, count * 2);
      for (std::size_t i = 0; i < count; ++i) out[i] = half_to_float(load_u16(p + 2 * i));
    } else if (e.dtype == "BF16") {
      check_size(name, bytes, count * 2);
      for (std::size_t i = 0; i < count; ++i) {
        out[i] = std::bit_cast<float>(static_cast<std::uint32_t>(load_u16(p + 2 * i)) << 16);
      }
    } else {
      throw ModelLoadError("tensor '" + name + "' has unsupported dtype " + e.dtype);
    }
    return out;
  }

private:
  std::map<std::string, Entry> entries_;
  std::map<std::string, std::string> metadata_;
  std::vector<char> data_;

  static void check_size(const std::string& name, std::size_t have, std::size_t want) {
    if (have != want) throw ModelLoadError("tensor '" + name + "' has inconsistent byte size");
  }

  static std::uint16_t load_u16(const char* p) {
    std::uint16_t v;
    std::memcpy(&v, p, 2);
    return v;
  }

  static float half_to_float(std::uint16_t h) {
    const std::uint32_t sign = static_cast<std::uint32_t>(h & 0x8000) << 16;
    std::uint32_t exp = (h >> 10) & 0x1F;
    std::uint32_t mant = h & 0x3FF;
    std::uint32_t bits;
    if (exp == 0) {
      if (mant == 0) {
        bits = sign;
      } else {
        exp = 127 - 15 + 1;
        while ((mant & 0x400) == 0) {
          mant <<= 1;
          --exp;
        }
        mant &= 0x3FF;
        bits = sign | (exp << 23) | (mant << 13);
      }
    } else if (exp == 0x1F) {
      bits = sign | 0x7F800000 | (mant << 13);
    } else {
      bits = sign | ((exp + 127 - 15) << 23) | (mant << 13);
    }
    return std::bit_cast<float>(bits);
  }
};

}  // namespace simlens
