#pragma once

#include <cstdint>
#include <istream>
#include <string>

namespace csight {

// FNV-1a over a byte stream; used to fingerprint run inputs in manifests.
// Not a cryptographic hash.
std::uint64_t fnv1a64(std::istream& in);

// Hex digest of a file's bytes; throws DataError if the file cannot be read.
std::string file_digest_hex(const std::string& path);

} // namespace csight
