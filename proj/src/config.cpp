#include "config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace mfdpc {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

const char* type_name(ValueType t) {
  switch (t) {
    case ValueType::kInt: return "int";
    case ValueType::kFloat: return "float";
    case ValueType::kBool: return "bool";
    case ValueType::kString: return "string";
    case ValueType::kFloatArray: return "float[]";
  }
  return "?";
}

double parse_double(const std::string& tok, const std::string& where) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(tok, &used);
  } catch (const std::exception&) {
    throw ConfigError(where + ": not a number: '" + tok + "'");
  }
  if (used != tok.size()) throw ConfigError(where + ": trailing characters in '" + tok + "'");
  return v;
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fnv1a_hex(const std::string& data) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Config Config::parse(const std::string& text, const std::string& origin) {
  Config cfg;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = origin + ":" + std::to_string(lineno);
    const auto colon = line.find(':');
    const auto eq = line.find('=');
    if (colon == std::string::npos || eq == std::string::npos || eq < colon)
      throw ConfigError(where + ": expected 'key: type = value'");
    const std::string key = trim(line.substr(0, colon));
    const std::string type = trim(line.substr(colon + 1, eq - colon - 1));
    const std::string raw = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(where + ": empty key");
    if (cfg.has(key)) throw ConfigError(where + ": duplicate key '" + key + "'");
    ConfigValue v;
    if (type == "int") {
      v.type = ValueType::kInt;
      std::size_t used = 0;
      try {
        v.i = std::stoll(raw, &used);
      } catch (const std::exception&) {
        throw ConfigError(where + ": not an integer");
      }
      if (used != raw.size()) throw ConfigError(where + ": not an integer");
    } else if (type == "float") {
      v.type = ValueType::kFloat;
      v.f = parse_double(raw, where);
    } else if (type == "bool") {
      v.type = ValueType::kBool;
      if (raw == "true") v.b = true;
      else if (raw == "false") v.b = false;
      else throw ConfigError(where + ": bool must be true or false");
    } else if (type == "string") {
      v.type = ValueType::kString;
      v.s = raw;
      if (v.s.size() >= 2 && v.s.front() == '"' && v.s.back() == '"') v.s = v.s.substr(1, v.s.size() - 2);
    } else if (type == "float[]") {
      v.type = ValueType::kFloatArray;
      std::istringstream ts(raw);
      std::string tok;
      while (ts >> tok) v.arr.push_back(parse_double(tok, where));
    } else {
      throw ConfigError(where + ": unknown type '" + type + "'");
    }
    cfg.values_[key] = std::move(v);
  }
  return cfg;
}

Config Config::load(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse(ss.str(), path);
}

const ConfigValue& Config::require(const std::string& key, ValueType t) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("missing config key: " + key);
  if (it->second.type != t && !(t == ValueType::kFloat && it->second.type == ValueType::kInt))
    throw ConfigError("config key " + key + " must be " + type_name(t));
  return it->second;
}

std::int64_t Config::get_int(const std::string& key) const { return require(key, ValueType::kInt).i; }

double Config::get_float(const std::string& key) const {
  const ConfigValue& v = require(key, ValueType::kFloat);
  return v.type == ValueType::kInt ? static_cast<double>(v.i) : v.f;
}

bool Config::get_bool(const std::string& key) const { return require(key, ValueType::kBool).b; }

const std::string& Config::get_string(const std::string& key) const { return require(key, ValueType::kString).s; }

const std::vector<double>& Config::get_array(const std::string& key) const {
  return require(key, ValueType::kFloatArray).arr;
}

void Config::set_int(const std::string& key, std::int64_t v) {
  ConfigValue c;
  c.type = ValueType::kInt;
  c.i = v;
  values_[key] = c;
}

void Config::set_float(const std::string& key, double v) {
  ConfigValue c;
  c.type = ValueType::kFloat;
  c.f = v;
  values_[key] = c;
}

void Config::set_bool(const std::string& key, bool v) {
  ConfigValue c;
  c.type = ValueType::kBool;
  c.b = v;
  values_[key] = c;
}

void Config::set_string(const std::string& key, const std::string& v) {
  ConfigValue c;
  c.type = ValueType::kString;
  c.s = v;
  values_[key] = c;
}

void Config::set_array(const std::string& key, const std::vector<double>& v) {
  ConfigValue c;
  c.type = ValueType::kFloatArray;
  c.arr = v;
  values_[key] = c;
}

std::string Config::canonical() const {
  std::ostringstream os;
  for (const auto& [k, v] : values_) {
    os << k << ": " << type_name(v.type) << " = ";
    switch (v.type) {
      case ValueType::kInt: os << v.i; break;
      case ValueType::kFloat: os << format_double(v.f); break;
      case ValueType::kBool: os << (v.b ? "true" : "false"); break;
      case ValueType::kString: os << v.s; break;
      case ValueType::kFloatArray:
        for (std::size_t i = 0; i < v.arr.size(); ++i) os << (i ? " " : "") << format_double(v.arr[i]);
        break;
    }
    os << '\n';
  }
  return os.str();
}

std::string Config::hash() const { return fnv1a_hex(canonical()); }

}  // namespace mfdpc
