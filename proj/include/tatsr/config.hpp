#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "tatsr/common.hpp"

namespace tatsr {

// Flat `key = value` config with dotted keys. Commands seed defaults, file
// values overwrite them, CLI flags overwrite both; reading a key marks it
// consumed and finish() rejects leftovers. items() after resolution is the
// reproducibility snapshot.
class ConfigMap {
 public:
  ConfigMap() = default;

  static ConfigMap from_file(const std::filesystem::path& path);
  void merge_file(const std::filesystem::path& path);

  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const { return values_.count(key) > 0; }

  // Getters record the default when the key is absent, so the snapshot
  // always carries every effective value.
  std::string get_string(const std::string& key, const std::string& def);
  int64_t get_int(const std::string& key, int64_t def);
  uint64_t get_uint(const std::string& key, uint64_t def);
  double get_double(const std::string& key, double def);
  bool get_bool(const std::string& key, bool def);
  std::vector<double> get_doubles(const std::string& key,
                                  const std::vector<double>& def);

  // Throws ConfigError naming any key that was never consumed.
  void finish() const;

  const std::map<std::string, std::string>& items() const { return values_; }
  std::string snapshot_text() const;
  void write_snapshot(const std::filesystem::path& path) const;

 private:
  std::string take(const std::string& key, const std::string& def);
  std::map<std::string, std::string> values_;
  std::set<std::string> consumed_;
};

std::string format_double(double v);
std::string format_doubles(const std::vector<double>& v);

}  // namespace tatsr
