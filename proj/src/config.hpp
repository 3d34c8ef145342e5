// Flat typed config files.
//
//   # comment
//   key: type = value
//
// type is one of int, float, bool, string, float[] (whitespace separated).
#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace mfdpc {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ValueType { kInt, kFloat, kBool, kString, kFloatArray };

struct ConfigValue {
  ValueType type = ValueType::kString;
  std::int64_t i = 0;
  double f = 0.0;
  bool b = false;
  std::string s;
  std::vector<double> arr;
};

class Config {
 public:
  static Config parse(const std::string& text, const std::string& origin = "<config>");
  static Config load(const std::string& path);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  const std::map<std::string, ConfigValue>& values() const { return values_; }

  std::int64_t get_int(const std::string& key) const;
  double get_float(const std::string& key) const;  // accepts int too
  bool get_bool(const std::string& key) const;
  const std::string& get_string(const std::string& key) const;
  const std::vector<double>& get_array(const std::string& key) const;

  void set(const std::string& key, ConfigValue v) { values_[key] = std::move(v); }
  void set_int(const std::string& key, std::int64_t v);
  void set_float(const std::string& key, double v);
  void set_bool(const std::string& key, bool v);
  void set_string(const std::string& key, const std::string& v);
  void set_array(const std::string& key, const std::vector<double>& v);

  // Canonical text: sorted keys, round-trip float formatting.
  std::string canonical() const;
  // FNV-1a 64 of canonical(), as 16 hex digits.
  std::string hash() const;

 private:
  const ConfigValue& require(const std::string& key, ValueType t) const;
  std::map<std::string, ConfigValue> values_;
};

std::string format_double(double v);
std::string fnv1a_hex(const std::string& data);

}  // namespace mfdpc
