// Copyright 2026 The lmtag Authors.
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

#ifndef LMTAG_PERSIST_H_
#define LMTAG_PERSIST_H_

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "lmtag/tensor.h"

namespace lmtag {

// Binary model container, all integers little-endian:
//
//   "LMTAGPC\0"                 8-byte magic
//   u32 version
//   u64 n, n bytes              config blob
//   u32 count                   tensor directory
//     u32 n, n bytes            name
//     u32 rank, u64 x rank      extents
//     f32 x numel               payload
//   u32 crc32                   over every preceding byte
//
// Values are stored as 32-bit floats; loading widens them back to double.
struct Container {
  std::string config;
  std::vector<std::pair<std::string, Tensor>> tensors;

  const Tensor& tensor(std::string_view name) const;
};

inline constexpr std::uint32_t kContainerVersion = 1;

std::string encode_container(const Container& container);
// Throws DataError on bad magic, version mismatch, truncation or checksum
// failure.
Container decode_container(std::string_view bytes);

void save_container(const std::string& path, const Container& container);
Container load_container(const std::string& path);

// Rounds every entry to float32 precision, as a save/load round-trip would.
Tensor to_stored_precision(const Tensor& t);

std::uint32_t crc32_of(std::string_view bytes);
// The checksum stored in the encoded container.
std::uint32_t container_checksum(const Container& container);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view bytes);

}  // namespace lmtag

#endif  // LMTAG_PERSIST_H_
