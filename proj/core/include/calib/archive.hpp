#pragma once

#include <string>

#include "calib/inference.hpp"

namespace calib {

// Versioned JSON container for posterior archives, with the run manifest
// embedded. Serialization is deterministic: identical archives produce
// identical bytes.
std::string archiveToJson(const PosteriorArchive& archive);
PosteriorArchive archiveFromJson(const std::string& json);
void writeArchive(const std::string& path, const PosteriorArchive& archive);
PosteriorArchive readArchive(const std::string& path);

// FNV-1a 64-bit content hashes used by run manifests.
std::string fnv1a64Hex(const std::string& bytes);
std::string hashFile(const std::string& path);

}  // namespace calib
