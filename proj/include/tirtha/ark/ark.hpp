#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "tirtha/domain/store.hpp"

namespace tirtha::ark {

/// Betanumeric alphabet: digits and consonants without 'l'.
inline constexpr std::string_view kAlphabet = "0123456789bcdfghjkmnpqrstvwxz";
inline constexpr int kDefaultBladeLength = 16;
inline constexpr int kMintRetries = 16;

/// Position of c in kAlphabet, or 0 for anything else (including '/').
int ordinal(char c);

/// NCDA check character: sum of (1-based position * ordinal) mod 29.
char check_char(std::string_view s);

struct ArkName {
  std::string naan;
  std::string shoulder;  // empty when parsed without shoulder knowledge
  std::string name;      // shoulder + blade + check char

  /// "ark:/naan/name"
  std::string render() const;
  char check() const { return name.empty() ? '\0' : name.back(); }

  friend bool operator==(const ArkName&, const ArkName&) = default;
};

/// Accepts "ark:/NAAN/name" and "ark:NAAN/name" (scheme case-insensitive),
/// drops hyphens from the name and verifies the check character.
/// Throws MALFORMED or BAD_CHECK.
ArkName parse(std::string_view text);

/// True iff `name`'s last character is the check char of naan/name-prefix.
bool validates(std::string_view naan, std::string_view name);

/// Uniqueness authority for minted names.
class NameRegistry {
 public:
  virtual ~NameRegistry() = default;
  /// Persists the record; false if its name is already taken.
  virtual bool try_insert(const ArkRecord& record) = 0;
};

class StoreRegistry : public NameRegistry {
 public:
  explicit StoreRegistry(Store& store) : store_(store) {}
  bool try_insert(const ArkRecord& record) override { return store_.try_insert_ark(record); }

 private:
  Store& store_;
};

class MemoryRegistry : public NameRegistry {
 public:
  bool try_insert(const ArkRecord& record) override { return names_.insert(record.naan + "/" + record.name()).second; }
  std::size_t size() const { return names_.size(); }

 private:
  std::unordered_set<std::string> names_;
};

struct MintOptions {
  std::string naan;
  std::string shoulder = "t1";
  int blade_length = kDefaultBladeLength;
  Timestamp now = 0;
};

/// Draws a random blade, appends its check char and registers it with empty
/// metadata; retries on collision, EXHAUSTED after kMintRetries attempts.
ArkRecord mint(const MintOptions& options, std::mt19937_64& rng, NameRegistry& registry);

/// Uniform index in [0, n) by rejection, independent of the standard
/// library's distribution implementation.
std::uint64_t uniform_index(std::mt19937_64& rng, std::uint64_t n);

/// Resolution outcome for the HTTP resolver.
enum class Resolution { Found, Unknown, Gone };

struct Resolved {
  Resolution status = Resolution::Unknown;
  std::optional<ArkRecord> record;
};

/// Gone when the bound run has been archived.
Resolved resolve(const Store& store, const ArkName& ark);

/// Binds target and metadata; target is write-once (ALREADY_BOUND), unknown ark throws UNKNOWN_ARK.
void bind(Store& store, const ArkName& ark, std::string_view target, const nlohmann::json& metadata);

}  // namespace tirtha::ark
