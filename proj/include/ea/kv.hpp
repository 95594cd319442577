#pragma once

#include <fstream>
#include <map>
#include <string>

#include "ea/util.hpp"

namespace ea {

// Flat key=value text: one pair per line, '#' comments, keys sorted on write.
using KvMap = std::map<std::string, std::string>;

inline KvMap parse_kv_text(const std::string& text) {
  KvMap kv;
  size_t pos = 0;
  while (pos <= text.size()) {
    size_t nl = text.find('\n', pos);
    std::string line = text.substr(pos, nl == std::string::npos ? std::string::npos : nl - pos);
    pos = nl == std::string::npos ? text.size() + 1 : nl + 1;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    size_t eq = line.find('=');
    require(eq != std::string::npos, "config: expected key=value, got: " + line);
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return kv;
}

inline KvMap load_kv_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  require(static_cast<bool>(is), "config: cannot read " + path);
  std::string text((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  return parse_kv_text(text);
}

inline std::string kv_to_text(const KvMap& kv) {
  std::string out;
  for (const auto& [k, v] : kv) out += k + "=" + v + "\n";
  return out;
}

inline void save_kv_file(const std::string& path, const KvMap& kv) {
  std::ofstream os(path, std::ios::binary);
  require(static_cast<bool>(os), "config: cannot write " + path);
  os << kv_to_text(kv);
}

inline std::string kv_fingerprint(const KvMap& kv) { return hex64(fnv1a64(kv_to_text(kv))); }

}  // namespace ea
