#include "tirtha/ark/ark.hpp"

#include <algorithm>
#include <cctype>
#include <limits>

#include "tirtha/common/error.hpp"

namespace tirtha::ark {

int ordinal(char c) {
  auto pos = kAlphabet.find(c);
  return pos == std::string_view::npos ? 0 : static_cast<int>(pos);
}

char check_char(std::string_view s) {
  std::uint64_t sum = 0;
  for (std::size_t i = 0; i < s.size(); ++i) sum += (i + 1) * static_cast<std::uint64_t>(ordinal(s[i]));
  return kAlphabet[sum % kAlphabet.size()];
}

std::string ArkName::render() const { return "ark:/" + naan + "/" + name; }

bool validates(std::string_view naan, std::string_view name) {
  if (name.size() < 2) return false;
  std::string scope;
  scope.reserve(naan.size() + 1 + name.size());
  scope.append(naan).append("/").append(name.substr(0, name.size() - 1));
  return check_char(scope) == name.back();
}

ArkName parse(std::string_view text) {
  if (text.size() < 4) throw Error(ErrorCode::Malformed, "not an ARK");
  std::string scheme(text.substr(0, 4));
  std::transform(scheme.begin(), scheme.end(), scheme.begin(), [](unsigned char c) { return std::tolower(c); });
  if (scheme != "ark:") throw Error(ErrorCode::Malformed, "missing ark: scheme");
  std::string_view rest = text.substr(4);
  if (!rest.empty() && rest.front() == '/') rest.remove_prefix(1);

  auto slash = rest.find('/');
  if (slash == std::string_view::npos) throw Error(ErrorCode::Malformed, "ARK has no name part");
  std::string_view naan = rest.substr(0, slash);
  std::string_view raw_name = rest.substr(slash + 1);
  if (naan.empty() || !std::all_of(naan.begin(), naan.end(), [](unsigned char c) { return std::isdigit(c); })) {
    throw Error(ErrorCode::Malformed, "NAAN must be a non-empty digit string");
  }
  std::string name;
  for (char c : raw_name) {
    if (c == '-') continue;
    if (c == '/' || c == '?' || std::isspace(static_cast<unsigned char>(c))) {
      throw Error(ErrorCode::Malformed, "unexpected character in ARK name");
    }
    name.push_back(c);
  }
  if (name.size() < 2) throw Error(ErrorCode::Malformed, "ARK name is empty");
  if (!validates(naan, name)) throw Error(ErrorCode::BadCheck, "check character mismatch");

  ArkName out;
  out.naan = std::string(naan);
  out.name = std::move(name);
  return out;
}

std::uint64_t uniform_index(std::mt19937_64& rng, std::uint64_t n) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % n;
}

ArkRecord mint(const MintOptions& options, std::mt19937_64& rng, NameRegistry& registry) {
  if (options.naan.empty()) throw Error(ErrorCode::Validation, "ark.naan is not configured");
  if (options.blade_length < 8) throw Error(ErrorCode::Validation, "blade length must be at least 8");
  for (int attempt = 0; attempt < kMintRetries; ++attempt) {
    ArkRecord record;
    record.naan = options.naan;
    record.shoulder = options.shoulder;
    record.blade.resize(static_cast<std::size_t>(options.blade_length));
    for (auto& c : record.blade) c = kAlphabet[uniform_index(rng, kAlphabet.size())];
    record.check_char = check_char(options.naan + "/" + options.shoulder + record.blade);
    record.metadata = "{}";
    record.created_at = options.now;
    if (registry.try_insert(record)) return record;
  }
  throw Error(ErrorCode::Exhausted, "could not mint a unique ARK after " + std::to_string(kMintRetries) + " attempts");
}

Resolved resolve(const Store& store, const ArkName& ark) {
  Resolved out;
  out.record = store.find_ark(ark.naan, ark.name);
  if (!out.record) return out;
  out.status = Resolution::Found;
  if (out.record->run_id) {
    auto run = store.find_run(*out.record->run_id);
    if (run && run->state == RunState::Archived) out.status = Resolution::Gone;
  }
  return out;
}

void bind(Store& store, const ArkName& ark, std::string_view target, const nlohmann::json& metadata) {
  store.bind_ark(ark.naan, ark.name, target, metadata.dump());
}

}  // namespace tirtha::ark
