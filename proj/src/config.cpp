#include "tatsr/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace tatsr {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

}  // namespace

ConfigMap ConfigMap::from_file(const fs::path& path) {
  ConfigMap m;
  m.merge_file(path);
  return m;
}

void ConfigMap::merge_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  std::string line;
  int64_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(path.string() + ":" + std::to_string(lineno) +
                        ": expected key = value");
    }
    const auto key = trim(stripped.substr(0, eq));
    if (key.empty()) {
      throw ConfigError(path.string() + ":" + std::to_string(lineno) +
                        ": empty key");
    }
    values_[key] = trim(stripped.substr(eq + 1));
  }
}

void ConfigMap::set(const std::string& key, const std::string& value) {
  values_[key] = value;
}

std::string ConfigMap::take(const std::string& key, const std::string& def) {
  consumed_.insert(key);
  auto it = values_.find(key);
  if (it == values_.end()) {
    values_[key] = def;
    return def;
  }
  return it->second;
}

std::string ConfigMap::get_string(const std::string& key, const std::string& def) {
  return take(key, def);
}

int64_t ConfigMap::get_int(const std::string& key, int64_t def) {
  const auto raw = take(key, std::to_string(def));
  try {
    size_t pos = 0;
    const auto v = std::stoll(raw, &pos);
    if (pos != raw.size()) throw std::invalid_argument(raw);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': '" + raw + "' is not an integer");
  }
}

uint64_t ConfigMap::get_uint(const std::string& key, uint64_t def) {
  const auto raw = take(key, std::to_string(def));
  try {
    size_t pos = 0;
    const auto v = std::stoull(raw, &pos);
    if (pos != raw.size() || raw[0] == '-') throw std::invalid_argument(raw);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': '" + raw +
                      "' is not a non-negative integer");
  }
}

double ConfigMap::get_double(const std::string& key, double def) {
  const auto raw = take(key, format_double(def));
  try {
    size_t pos = 0;
    const auto v = std::stod(raw, &pos);
    if (pos != raw.size()) throw std::invalid_argument(raw);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': '" + raw + "' is not a number");
  }
}

bool ConfigMap::get_bool(const std::string& key, bool def) {
  const auto raw = take(key, def ? "true" : "false");
  if (raw == "true" || raw == "1" || raw == "yes") return true;
  if (raw == "false" || raw == "0" || raw == "no") return false;
  throw ConfigError("config key '" + key + "': '" + raw + "' is not a boolean");
}

std::vector<double> ConfigMap::get_doubles(const std::string& key,
                                           const std::vector<double>& def) {
  const auto raw = take(key, format_doubles(def));
  std::vector<double> out;
  std::stringstream ss(raw);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    try {
      size_t pos = 0;
      out.push_back(std::stod(item, &pos));
      if (pos != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("config key '" + key + "': '" + item + "' is not a number");
    }
  }
  return out;
}

void ConfigMap::finish() const {
  std::vector<std::string> unknown;
  for (const auto& [k, _] : values_) {
    if (!consumed_.count(k)) unknown.push_back(k);
  }
  if (!unknown.empty()) {
    std::string msg = "unknown config keys:";
    for (const auto& k : unknown) msg += " " + k;
    throw ConfigError(msg);
  }
}

std::string ConfigMap::snapshot_text() const {
  std::string out;
  for (const auto& [k, v] : values_) {
    out += k;
    out += " = ";
    out += v;
    out += "\n";
  }
  return out;
}

void ConfigMap::write_snapshot(const fs::path& path) const {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write config snapshot: " + path.string());
  out << snapshot_text();
}

std::string format_double(double v) {
  if (v == std::floor(v) && std::abs(v) < 1e15) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.1f", v);
    return buf;
  }
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string format_doubles(const std::vector<double>& v) {
  std::string out;
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += format_double(v[i]);
  }
  return out;
}

}  // namespace tatsr
