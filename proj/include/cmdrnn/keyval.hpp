#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>

#include "cmdrnn/tensor.hpp"

namespace cmdrnn {

// Flat `key = value` config files. Blank lines and '#' comments are ignored.
// Readers mark keys as consumed; ensure_consumed() rejects leftovers so
// typos in manifests fail loudly.
class KeyValues {
 public:
  static KeyValues parse_file(const std::string& path);
  static KeyValues parse_string(const std::string& text, const std::string& origin = "<string>");

  bool has(const std::string& key) const { return entries_.count(key) != 0; }

  std::string get_string(const std::string& key, const std::string& fallback);
  double get_double(const std::string& key, double fallback);
  std::int64_t get_int(const std::string& key, std::int64_t fallback);
  std::uint64_t get_uint(const std::string& key, std::uint64_t fallback);
  bool get_bool(const std::string& key, bool fallback);

  // Required variant: throws ConfigError when missing.
  std::string require_string(const std::string& key);
  std::uint64_t require_uint(const std::string& key);

  void ensure_consumed() const;
  const std::string& origin() const { return origin_; }

 private:
  std::map<std::string, std::string> entries_;
  std::set<std::string> consumed_;
  std::string origin_;

  const std::string* lookup(const std::string& key);
};

}  // namespace cmdrnn
