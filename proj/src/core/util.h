// Copyright 2026 The ataralab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef ATARALAB_CORE_UTIL_H_
#define ATARALAB_CORE_UTIL_H_

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace atl {

// Error taxonomy mirrored by the C API status codes.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ContractViolation : std::logic_error {
  using std::logic_error::logic_error;
};

// SHA-256 of a byte string, lowercase hex.
std::string Sha256Hex(const std::string& bytes);

std::string ReadFileBytes(const std::filesystem::path& path);
void WriteFileBytes(const std::filesystem::path& path, const std::string& bytes);
void EnsureDir(const std::filesystem::path& dir);

// Little-endian float32 blob io (raw, no header).
void WriteFloats(const std::filesystem::path& path, const std::vector<float>& data);
std::vector<float> ReadFloats(const std::filesystem::path& path);

// Scratch directory for intermediate render caches. Honors ATARA_LAB_CACHE.
std::filesystem::path ScratchDir();

std::string FormatIndex(const char* fmt, int64_t index);

}  // namespace atl

#endif  // ATARALAB_CORE_UTIL_H_
