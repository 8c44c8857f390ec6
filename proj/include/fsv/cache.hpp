// fsv/cache.hpp

// Copyright 2026 The fsv Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.
#pragma once

#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <string_view>

#include "fsv/common.hpp"

namespace fsv {

/// 64-bit FNV-1a.
class ContentHash {
 public:
  ContentHash &update(const void *data, std::size_t n) {
    const auto *p = static_cast<const unsigned char *>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h_ ^= p[i];
      h_ *= 0x100000001b3ull;
    }
    return *this;
  }
  ContentHash &update(std::string_view s) {
    const auto n = static_cast<std::uint64_t>(s.size());
    update(&n, sizeof n);  // length-prefixed so concatenations differ
    return update(s.data(), s.size());
  }
  ContentHash &update(std::uint64_t v) { return update(&v, sizeof v); }

  std::uint64_t value() const { return h_; }
  std::string hex() const {
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h_;
    return os.str();
  }

 private:
  std::uint64_t h_ = 0xcbf29ce484222325ull;
};

inline std::string hash_file(const std::string &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open " + path);
  ContentHash h;
  char buf[1 << 14];
  while (is.read(buf, sizeof buf) || is.gcount() > 0) h.update(buf, static_cast<std::size_t>(is.gcount()));
  return h.hex();
}

/// Content-addressed artifact store: <root>/<stage>/<key>.<ext>.
class ArtifactCache {
 public:
  explicit ArtifactCache(std::filesystem::path root) : root_(std::move(root)) {}

  /// FSV_CACHE_DIR, else `configured`, else <output_dir>/cache.
  static ArtifactCache resolve(const std::string &configured, const std::string &output_dir) {
    if (const char *env = std::getenv("FSV_CACHE_DIR"); env && *env) return ArtifactCache(env);
    if (!configured.empty()) return ArtifactCache(configured);
    return ArtifactCache(std::filesystem::path(output_dir) / "cache");
  }

  const std::filesystem::path &root() const { return root_; }

  std::filesystem::path path(const std::string &stage, const std::string &key,
                             const std::string &ext) const {
    return root_ / stage / (key + "." + ext);
  }

  bool has(const std::filesystem::path &p) const { return std::filesystem::is_regular_file(p); }

  /// Writes through a temporary name so interrupted runs leave no partial artifact.
  template <typename Writer>
  void store(const std::filesystem::path &p, Writer &&write) const {
    std::filesystem::create_directories(p.parent_path());
    static std::atomic<std::uint64_t> counter{0};
    auto tmp = p;
    tmp += ".tmp" + std::to_string(counter++);
    write(tmp.string());
    std::filesystem::rename(tmp, p);
  }

 private:
  std::filesystem::path root_;
};

}  // namespace fsv
