#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "etpf/types.hpp"

namespace etpf {

/// Sectioned key-value configuration stored as JSON (comments allowed).
///
///   { "sim": { "h": 0.01, "x0": [1, 1] }, "trigger": { "mode": "linear" } }
///
/// Every leaf is addressable as `section.key` for overrides.
class Config {
 public:
  using json = nlohmann::json;

  Config() : root_(json::object()) {}
  explicit Config(json root, std::string source = "<memory>")
      : root_(std::move(root)), source_(std::move(source)) {
    check_shape();
  }

  static Config parse(const std::string& text, const std::string& source = "<memory>") {
    json root;
    try {
      root = json::parse(text, nullptr, true, /*ignore_comments=*/true);
    } catch (const json::parse_error& err) {
      throw ConfigError(source + ": " + describe_parse_error(text, err));
    }
    return Config(std::move(root), source);
  }

  static Config load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path + ": cannot open config file");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str(), path);
  }

  /// Applies `section.key=value`; the value is read as JSON when it parses,
  /// otherwise as a bare string.
  void apply_override(const std::string& assignment) {
    const auto eq = assignment.find('=');
    const auto dot = assignment.find('.');
    if (eq == std::string::npos || dot == std::string::npos || dot > eq || dot == 0 || dot + 1 == eq)
      throw ConfigError("override '" + assignment + "': expected section.key=value");
    const std::string section = assignment.substr(0, dot);
    const std::string key = assignment.substr(dot + 1, eq - dot - 1);
    const std::string raw = assignment.substr(eq + 1);
    json value = json::parse(raw, nullptr, false);
    if (value.is_discarded()) value = raw;
    if (!root_.contains(section)) root_[section] = json::object();
    root_[section][key] = std::move(value);
  }

  const json& root() const { return root_; }
  /// Optional top-level "name" string.
  std::string name() const {
    if (!root_.contains("name")) return "custom";
    if (!root_.at("name").is_string()) throw ConfigError(source_ + ": field name: expected a string");
    return root_.at("name").get<std::string>();
  }
  const std::string& source() const { return source_; }
  std::string dump() const { return root_.dump(2) + "\n"; }

  bool has_section(const std::string& section) const {
    return root_.contains(section) && root_.at(section).is_object();
  }
  bool has(const std::string& section, const std::string& key) const {
    return has_section(section) && root_.at(section).contains(key) && !root_.at(section).at(key).is_null();
  }

  double number(const std::string& section, const std::string& key) const {
    const json& v = at(section, key);
    if (!v.is_number()) fail(section, key, "expected a number, got " + std::string(v.type_name()));
    return v.get<double>();
  }
  double number_or(const std::string& section, const std::string& key, double fallback) const {
    return has(section, key) ? number(section, key) : fallback;
  }

  std::int64_t integer(const std::string& section, const std::string& key) const {
    const json& v = at(section, key);
    if (!v.is_number_integer()) fail(section, key, "expected an integer, got " + dump_short(v));
    return v.get<std::int64_t>();
  }
  std::int64_t integer_or(const std::string& section, const std::string& key, std::int64_t fallback) const {
    return has(section, key) ? integer(section, key) : fallback;
  }

  std::string string(const std::string& section, const std::string& key) const {
    const json& v = at(section, key);
    if (!v.is_string()) fail(section, key, "expected a string, got " + std::string(v.type_name()));
    return v.get<std::string>();
  }
  std::string string_or(const std::string& section, const std::string& key, const std::string& fallback) const {
    return has(section, key) ? string(section, key) : fallback;
  }

  bool boolean_or(const std::string& section, const std::string& key, bool fallback) const {
    if (!has(section, key)) return fallback;
    const json& v = at(section, key);
    if (!v.is_boolean()) fail(section, key, "expected true or false, got " + dump_short(v));
    return v.get<bool>();
  }

  /// A number or a flat array of numbers.
  std::vector<double> numbers(const std::string& section, const std::string& key) const {
    const json& v = at(section, key);
    if (v.is_number()) return {v.get<double>()};
    if (!v.is_array()) fail(section, key, "expected an array of numbers");
    std::vector<double> out;
    for (const auto& e : v) {
      if (!e.is_number()) fail(section, key, "expected an array of numbers, found " + dump_short(e));
      out.push_back(e.get<double>());
    }
    return out;
  }

  Vector vector(const std::string& section, const std::string& key) const {
    const auto xs = numbers(section, key);
    return Eigen::Map<const Vector>(xs.data(), static_cast<Eigen::Index>(xs.size()));
  }

  /// Row-major nested arrays; a flat array is read as a column.
  Matrix matrix(const std::string& section, const std::string& key) const {
    const json& v = at(section, key);
    if (!v.is_array() || v.empty()) fail(section, key, "expected a nonempty array");
    if (!v.front().is_array()) {
      const Vector col = vector(section, key);
      return col;
    }
    const std::size_t cols = v.front().size();
    Matrix m(static_cast<Eigen::Index>(v.size()), static_cast<Eigen::Index>(cols));
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_array() || v[i].size() != cols)
        fail(section, key, "row " + std::to_string(i) + " has inconsistent length");
      for (std::size_t j = 0; j < cols; ++j) {
        if (!v[i][j].is_number()) fail(section, key, "non-numeric entry " + dump_short(v[i][j]));
        m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v[i][j].get<double>();
      }
    }
    return m;
  }

  [[noreturn]] void fail(const std::string& section, const std::string& key, const std::string& what) const {
    throw ConfigError(source_ + ": field " + section + "." + key + ": " + what);
  }

 private:
  const json& at(const std::string& section, const std::string& key) const {
    if (!has(section, key)) fail(section, key, "missing required field");
    return root_.at(section).at(key);
  }

  void check_shape() const {
    if (!root_.is_object()) throw ConfigError(source_ + ": top level must be an object of sections");
    for (const auto& [name, section] : root_.items())
      if (name != "name" && !section.is_object())
        throw ConfigError(source_ + ": section '" + name + "' must be an object");
  }

  static std::string dump_short(const json& v) {
    std::string s = v.dump();
    return s.size() > 40 ? s.substr(0, 37) + "..." : s;
  }

  static std::string describe_parse_error(const std::string& text, const json::parse_error& err) {
    std::size_t line = 1, col = 1;
    const std::size_t stop = std::min<std::size_t>(err.byte == 0 ? 0 : err.byte - 1, text.size());
    for (std::size_t i = 0; i < stop; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    std::string what = err.what();
    const auto pos = what.find("; ");
    if (pos != std::string::npos) what = what.substr(pos + 2);
    return "line " + std::to_string(line) + ", column " + std::to_string(col) + ": " + what;
  }

  json root_;
  std::string source_ = "<memory>";
};

}  // namespace etpf
