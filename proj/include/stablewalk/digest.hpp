#pragma once

#include <string>

namespace stablewalk {

// SHA-256 of a byte string, lowercase hex.
std::string sha256_hex(const std::string& bytes);

// Digest of a file's contents; throws IoError when unreadable.
std::string file_digest(const std::string& path);

}  // namespace stablewalk
