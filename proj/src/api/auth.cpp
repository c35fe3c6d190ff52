#include "tirtha/api/auth.hpp"

#include <openssl/crypto.h>

#include "tirtha/common/digest.hpp"

namespace tirtha::api {

namespace {

bool equal_ct(const std::string& a, const std::string& b) {
  return a.size() == b.size() && CRYPTO_memcmp(a.data(), b.data(), a.size()) == 0;
}

}  // namespace

std::string sign_hs256(const nlohmann::json& claims, const std::string& secret) {
  nlohmann::json header = {{"alg", "HS256"}, {"typ", "JWT"}};
  std::string signing_input = base64url_encode(header.dump()) + "." + base64url_encode(claims.dump());
  return signing_input + "." + base64url_encode(hmac_sha256(secret, signing_input));
}

std::optional<AuthContext> Hs256JwtVerifier::verify(const std::string& token) const {
  if (secret_.empty()) return std::nullopt;  // unconfigured: nobody is authenticated
  auto first = token.find('.');
  if (first == std::string::npos) return std::nullopt;
  auto second = token.find('.', first + 1);
  if (second == std::string::npos || token.find('.', second + 1) != std::string::npos) return std::nullopt;

  std::string header_raw, claims_raw, signature;
  if (!base64url_decode(std::string_view(token).substr(0, first), header_raw) ||
      !base64url_decode(std::string_view(token).substr(first + 1, second - first - 1), claims_raw) ||
      !base64url_decode(std::string_view(token).substr(second + 1), signature)) {
    return std::nullopt;
  }
  auto header = nlohmann::json::parse(header_raw, nullptr, false);
  if (!header.is_object() || header.value("alg", "") != "HS256") return std::nullopt;
  if (!equal_ct(signature, hmac_sha256(secret_, token.substr(0, second)))) return std::nullopt;

  auto claims = nlohmann::json::parse(claims_raw, nullptr, false);
  if (!claims.is_object()) return std::nullopt;
  if (claims.contains("exp")) {
    if (!claims["exp"].is_number()) return std::nullopt;
    // exp is in seconds
    if (claims["exp"].get<double>() * 1000.0 <= static_cast<double>(clock_.now())) return std::nullopt;
  }
  if (!issuer_.empty() && claims.value("iss", "") != issuer_) return std::nullopt;
  if (!claims.contains("sub") || !claims["sub"].is_string()) return std::nullopt;

  AuthContext ctx;
  ctx.subject = claims["sub"].get<std::string>();
  ctx.email = claims.value("email", "");
  ctx.name = claims.value("name", "");
  ctx.verified = claims.value("email_verified", false);
  return ctx;
}

std::string bearer_token(const std::string& authorization) {
  static const std::string prefix = "Bearer ";
  if (authorization.size() <= prefix.size() || authorization.compare(0, prefix.size(), prefix) != 0) return {};
  return authorization.substr(prefix.size());
}

bool AdminTokens::contains(const std::string& token) const {
  if (token.empty()) return false;
  bool found = false;
  for (const auto& t : tokens_) found |= equal_ct(t, token);
  return found;
}

}  // namespace tirtha::api
