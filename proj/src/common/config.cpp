#include "tirtha/common/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>

#include "tirtha/common/error.hpp"

namespace tirtha {
namespace {

void flatten(const nlohmann::json& node, const std::string& prefix,
             std::map<std::string, nlohmann::json, std::less<>>& out) {
  if (node.is_object()) {
    for (const auto& [k, v] : node.items()) {
      flatten(v, prefix.empty() ? k : prefix + "." + k, out);
    }
  } else {
    out[prefix] = node;
  }
}

std::string env_name(std::string_view key, bool dots_to_underscores) {
  std::string name = "TIRTHA_";
  for (char c : key) {
    if (c == '.' && dots_to_underscores) c = '_';
    name.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  }
  return name;
}

nlohmann::json parse_env_value(const char* raw) {
  // Numbers, booleans and JSON arrays are parsed; anything else stays a string.
  auto parsed = nlohmann::json::parse(raw, nullptr, false);
  if (!parsed.is_discarded() && !parsed.is_object()) return parsed;
  return std::string(raw);
}

}  // namespace

const std::vector<std::string>& Config::known_keys() {
  static const std::vector<std::string> keys = {
      "iqa.dr_min",          "iqa.cnr_min",          "iqa.nr_min",
      "iqa.dr_mode",         "iqa.nr_midpoint",      "iqa.nr_slope",
      "ingest.min_short_side", "safety.safe_ceiling", "safety.unsafe_floor",
      "safety.default_score", "run.min_images",       "run.auto_trigger_image_count",
      "run.seed",            "queue.visibility_timeout", "queue.max_attempts",
      "backend.kind",        "maintenance.prune_days", "maintenance.archive_days",
      "maintenance.backup_path", "archive.root",      "storage.root",
      "storage.db",          "ark.naan",             "ark.shoulder",
      "ark.blade_length",    "upload.max_bytes",     "upload.per_ip_daily",
      "auth.hs256_secret",   "auth.issuer",          "admin.tokens",
      "site.base_url",       "ark.license",          "ark.seed",
      "maintenance.archive_keep_latest", "maintenance.prune_interval", "maintenance.archive_interval",
      "maintenance.backup_interval", "mesh.quantize",
      "server.bind",         "server.threads",
  };
  return keys;
}

Config Config::from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw Error(ErrorCode::Validation, "config root must be an object");
  Config cfg;
  flatten(doc, "", cfg.values_);
  return cfg;
}

Config Config::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::NotFound, "config not found: " + path.string());
  auto doc = nlohmann::json::parse(in, nullptr, false);
  if (doc.is_discarded()) throw Error(ErrorCode::Validation, "config is not valid JSON: " + path.string());
  return from_json(doc);
}

void Config::apply_env() {
  std::vector<std::string> keys = known_keys();
  for (const auto& [k, v] : values_) keys.push_back(k);
  std::sort(keys.begin(), keys.end());
  keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
  for (const auto& key : keys) {
    for (bool underscores : {true, false}) {
      if (const char* raw = std::getenv(env_name(key, underscores).c_str())) {
        values_[key] = parse_env_value(raw);
        break;
      }
    }
  }
}

void Config::set(std::string key, nlohmann::json value) { values_[std::move(key)] = std::move(value); }

bool Config::contains(std::string_view key) const { return find(key) != nullptr; }

const nlohmann::json* Config::find(std::string_view key) const {
  auto it = values_.find(key);
  return it == values_.end() ? nullptr : &it->second;
}

double Config::get_double(std::string_view key, double fallback) const {
  const auto* v = find(key);
  if (!v) return fallback;
  if (v->is_number()) return v->get<double>();
  if (v->is_string()) return std::stod(v->get<std::string>());
  throw Error(ErrorCode::Validation, "config key " + std::string(key) + " is not numeric");
}

std::int64_t Config::get_int(std::string_view key, std::int64_t fallback) const {
  const auto* v = find(key);
  if (!v) return fallback;
  if (v->is_number()) return v->get<std::int64_t>();
  if (v->is_string()) return std::stoll(v->get<std::string>());
  throw Error(ErrorCode::Validation, "config key " + std::string(key) + " is not an integer");
}

bool Config::get_bool(std::string_view key, bool fallback) const {
  const auto* v = find(key);
  if (!v) return fallback;
  if (v->is_boolean()) return v->get<bool>();
  if (v->is_number()) return v->get<double>() != 0.0;
  if (v->is_string()) {
    auto s = v->get<std::string>();
    return s == "1" || s == "true" || s == "yes";
  }
  return fallback;
}

std::string Config::get_string(std::string_view key, std::string fallback) const {
  const auto* v = find(key);
  if (!v) return fallback;
  if (v->is_string()) return v->get<std::string>();
  return v->dump();
}

std::vector<std::string> Config::get_string_list(std::string_view key) const {
  const auto* v = find(key);
  std::vector<std::string> out;
  if (!v) return out;
  if (v->is_array()) {
    for (const auto& item : *v) out.push_back(item.is_string() ? item.get<std::string>() : item.dump());
  } else if (v->is_string()) {
    // comma separated, as environment overrides tend to be
    std::string s = v->get<std::string>();
    std::size_t start = 0;
    while (start <= s.size()) {
      auto end = s.find(',', start);
      if (end == std::string::npos) end = s.size();
      if (end > start) out.push_back(s.substr(start, end - start));
      start = end + 1;
    }
  }
  return out;
}

std::map<std::string, nlohmann::json> Config::subtree(std::string_view prefix) const {
  std::map<std::string, nlohmann::json> out;
  std::string p(prefix);
  p.push_back('.');
  for (auto it = values_.lower_bound(p); it != values_.end() && it->first.starts_with(p); ++it) {
    out[it->first.substr(p.size())] = it->second;
  }
  return out;
}

}  // namespace tirtha
