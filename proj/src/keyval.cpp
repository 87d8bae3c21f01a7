#include "cmdrnn/keyval.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace cmdrnn {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

}  // namespace

KeyValues KeyValues::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_string(buf.str(), path);
}

KeyValues KeyValues::parse_string(const std::string& text, const std::string& origin) {
  KeyValues kv;
  kv.origin_ = origin;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ParseError(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw ParseError(origin + ":" + std::to_string(lineno) + ": empty key");
    }
    if (kv.entries_.count(key)) {
      throw ParseError(origin + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'");
    }
    kv.entries_[key] = val;
  }
  return kv;
}

const std::string* KeyValues::lookup(const std::string& key) {
  auto it = entries_.find(key);
  if (it == entries_.end()) return nullptr;
  consumed_.insert(key);
  return &it->second;
}

std::string KeyValues::get_string(const std::string& key, const std::string& fallback) {
  const std::string* v = lookup(key);
  return v ? *v : fallback;
}

double KeyValues::get_double(const std::string& key, double fallback) {
  const std::string* v = lookup(key);
  if (!v) return fallback;
  try {
    std::size_t pos = 0;
    double d = std::stod(*v, &pos);
    if (pos != v->size()) throw std::invalid_argument("");
    return d;
  } catch (const std::exception&) {
    throw ConfigError(origin_ + ": key '" + key + "' is not a number: '" + *v + "'");
  }
}

std::int64_t KeyValues::get_int(const std::string& key, std::int64_t fallback) {
  const std::string* v = lookup(key);
  if (!v) return fallback;
  std::int64_t out = 0;
  auto [p, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
  if (ec != std::errc{} || p != v->data() + v->size()) {
    throw ConfigError(origin_ + ": key '" + key + "' is not an integer: '" + *v + "'");
  }
  return out;
}

std::uint64_t KeyValues::get_uint(const std::string& key, std::uint64_t fallback) {
  const std::string* v = lookup(key);
  if (!v) return fallback;
  std::uint64_t out = 0;
  auto [p, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
  if (ec != std::errc{} || p != v->data() + v->size()) {
    throw ConfigError(origin_ + ": key '" + key + "' is not a nonnegative integer: '" + *v + "'");
  }
  return out;
}

bool KeyValues::get_bool(const std::string& key, bool fallback) {
  const std::string* v = lookup(key);
  if (!v) return fallback;
  if (*v == "true" || *v == "1" || *v == "yes") return true;
  if (*v == "false" || *v == "0" || *v == "no") return false;
  throw ConfigError(origin_ + ": key '" + key + "' is not a boolean: '" + *v + "'");
}

std::string KeyValues::require_string(const std::string& key) {
  const std::string* v = lookup(key);
  if (!v) throw ConfigError(origin_ + ": missing required key '" + key + "'");
  return *v;
}

std::uint64_t KeyValues::require_uint(const std::string& key) {
  if (!has(key)) throw ConfigError(origin_ + ": missing required key '" + key + "'");
  return get_uint(key, 0);
}

void KeyValues::ensure_consumed() const {
  std::string unknown;
  for (const auto& [k, v] : entries_) {
    if (!consumed_.count(k)) {
      if (!unknown.empty()) unknown += ", ";
      unknown += "'" + k + "'";
    }
  }
  if (!unknown.empty()) {
    throw ConfigError(origin_ + ": unknown key(s) " + unknown);
  }
}

}  // namespace cmdrnn
