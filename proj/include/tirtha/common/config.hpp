#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace tirtha {

/// Flat dotted-key configuration ("iqa.dr_min", "backend.stage.Meshing.cmd", ...).
///
/// Files are JSON; nested objects flatten to dotted keys, so
/// {"iqa": {"dr_min": 90}} and {"iqa.dr_min": 90} are equivalent.
/// Environment variables override file values: for key `a.b_c` the
/// variable `TIRTHA_A_B_C` (dots to underscores) or `TIRTHA_A.B_C` is read.
class Config {
 public:
  Config() = default;

  static Config from_json(const nlohmann::json& doc);
  static Config load(const std::filesystem::path& path);

  /// Applies TIRTHA_* overrides for every key in known_keys() plus any key already set.
  void apply_env();

  void set(std::string key, nlohmann::json value);
  bool contains(std::string_view key) const;

  double get_double(std::string_view key, double fallback) const;
  std::int64_t get_int(std::string_view key, std::int64_t fallback) const;
  bool get_bool(std::string_view key, bool fallback) const;
  std::string get_string(std::string_view key, std::string fallback) const;
  std::vector<std::string> get_string_list(std::string_view key) const;

  /// Keys under `prefix.` with the prefix stripped.
  std::map<std::string, nlohmann::json> subtree(std::string_view prefix) const;

  const std::map<std::string, nlohmann::json, std::less<>>& values() const { return values_; }

  static const std::vector<std::string>& known_keys();

 private:
  const nlohmann::json* find(std::string_view key) const;

  std::map<std::string, nlohmann::json, std::less<>> values_;
};

}  // namespace tirtha
