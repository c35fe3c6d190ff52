#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tirtha/common/clock.hpp"
#include "tirtha/common/config.hpp"

namespace tirtha::api {

struct AuthContext {
  std::string subject;
  std::string email;
  std::string name;
  bool verified = false;
};

/// Verifies bearer tokens issued by the identity provider.
class TokenVerifier {
 public:
  virtual ~TokenVerifier() = default;
  /// nullopt for any token that is malformed, badly signed, expired or from the wrong issuer.
  virtual std::optional<AuthContext> verify(const std::string& token) const = 0;
};

/// HS256 JWT verifier with a static key. Claims used: sub, email, name,
/// email_verified, exp, iss.
class Hs256JwtVerifier : public TokenVerifier {
 public:
  Hs256JwtVerifier(std::string secret, std::string issuer, const Clock& clock)
      : secret_(std::move(secret)), issuer_(std::move(issuer)), clock_(clock) {}

  std::optional<AuthContext> verify(const std::string& token) const override;

 private:
  std::string secret_;
  std::string issuer_;  // empty: not checked
  const Clock& clock_;
};

/// Compact HS256 JWT for `claims`.
std::string sign_hs256(const nlohmann::json& claims, const std::string& secret);

/// "Bearer <token>" -> token; empty when the header has another shape.
std::string bearer_token(const std::string& authorization);

/// Static admin tokens from admin.tokens; compared in constant time.
class AdminTokens {
 public:
  explicit AdminTokens(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {}
  static AdminTokens from_config(const Config& config) { return AdminTokens(config.get_string_list("admin.tokens")); }
  bool contains(const std::string& token) const;

 private:
  std::vector<std::string> tokens_;
};

}  // namespace tirtha::api
