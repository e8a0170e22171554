// Copyright 2026 The srinit Authors. All Rights Reserved.
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

#ifndef SRINIT_CHECKPOINT_HPP_
#define SRINIT_CHECKPOINT_HPP_

#include <cstdint>
#include <filesystem>

#include "srinit/model.hpp"

namespace srinit {

// Checkpoint container, version 1 (all integers little-endian):
//   char[8]  magic "SRINITCK"
//   u32      format version
//   u64      header length, then UTF-8 JSON header
//            {"spec": NetworkSpec, "units": [surviving unit ids], "mode": "train"|"eval"}
//   u64      tensor count, then per tensor:
//            u32 name length, name bytes, u32 rank, i64 dims[rank], f32 values[numel]
//   u64      FNV-1a 64 checksum of every preceding byte
// See docs/checkpoint_format.md.
inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const ModelState& model, const std::filesystem::path& path);

// Throws FormatError for truncated, corrupt or version-mismatched files and
// IoError when the file cannot be opened.
ModelState load_checkpoint(const std::filesystem::path& path);

std::uint64_t fnv1a64(const void* data, std::size_t size, std::uint64_t hash = 0xcbf29ce484222325ULL);

}  // namespace srinit

#endif  // SRINIT_CHECKPOINT_HPP_
