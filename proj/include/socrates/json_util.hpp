#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include <json.hpp>

namespace socrates {

using json = nlohmann::json;

// Sorted keys (nlohmann::json objects are std::map-backed), two-space indent,
// LF line endings, trailing newline. Non-ASCII is emitted verbatim as UTF-8.
std::string canonical_dump(const json& j);

// Lowercase hex SHA-256 of the bytes.
std::string sha256_hex(std::string_view bytes);

// Hex string of `n` bytes from the OpenSSL CSPRNG.
std::string random_hex(std::size_t n);

// RFC 6901 escaping of a single reference token.
std::string json_pointer_escape(std::string_view token);

// Whole file as bytes; throws std::runtime_error when unreadable.
std::string read_file(const std::string& path);

// ISO-8601 UTC with millisecond precision, e.g. 2026-10-18T09:15:02.114Z.
std::string format_utc_millis(std::int64_t unix_millis);

}  // namespace socrates
