#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>

namespace tirtha {

std::string sha256_hex(std::span<const std::uint8_t> bytes);
std::string sha256_hex(std::string_view text);
std::string sha256_file(const std::filesystem::path& path);

/// HMAC-SHA256, raw 32-byte digest.
std::string hmac_sha256(std::string_view key, std::string_view message);

std::string base64url_encode(std::string_view raw);
/// Returns false on characters outside the url-safe alphabet.
bool base64url_decode(std::string_view text, std::string& out);

}  // namespace tirtha
