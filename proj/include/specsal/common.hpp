// include/specsal/common.hpp
//
// Copyright 2026  The Specsal Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <iostream>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <string>

namespace specsal {

inline constexpr const char* kVersion = "0.1.0";

// Bad or inconsistent input data: corpus files, manifests, shape mismatches.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Command-line or configuration misuse.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// The external recognizer command failed or produced unusable output.
struct ExternalToolError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace logging {

inline std::mutex& mutex() {
  static std::mutex m;
  return m;
}

inline void warn(const std::string& msg) {
  std::lock_guard<std::mutex> lock(mutex());
  std::cerr << "specsal WARNING: " << msg << std::endl;
}

inline void info(const std::string& msg) {
  std::lock_guard<std::mutex> lock(mutex());
  std::cerr << "specsal: " << msg << std::endl;
}

}  // namespace logging

// FNV-1a, used for config hashing and seed derivation from string ids.
inline std::uint64_t fnv1a64(const void* data, std::size_t len,
                             std::uint64_t h = 0xcbf29ce484222325ull) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::uint64_t fnv1a64(const std::string& s,
                             std::uint64_t h = 0xcbf29ce484222325ull) {
  return fnv1a64(s.data(), s.size(), h);
}

inline std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

}  // namespace specsal
