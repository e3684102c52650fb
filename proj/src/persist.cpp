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

#include "lmtag/persist.h"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include <zlib.h>

#include "lmtag/errors.h"

namespace lmtag {
namespace {

constexpr char kMagic[8] = {'L', 'M', 'T', 'A', 'G', 'P', 'C', '\0'};

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  std::string_view take(std::size_t n) {
    if (bytes_.size() - pos_ < n) throw DataError("container truncated");
    std::string_view s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::uint64_t uint(int width) {
    std::string_view s = take(width);
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(s[i])) << (8 * i);
    }
    return v;
  }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

const Tensor& Container::tensor(std::string_view name) const {
  for (const auto& [n, t] : tensors) {
    if (n == name) return t;
  }
  throw DataError("container has no tensor '" + std::string(name) + "'");
}

std::uint32_t crc32_of(std::string_view bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed large inputs in chunks.
  std::size_t pos = 0;
  while (pos < bytes.size()) {
    const std::size_t n = std::min<std::size_t>(bytes.size() - pos, 1u << 30);
    crc = crc32(crc, reinterpret_cast<const Bytef*>(bytes.data() + pos), static_cast<uInt>(n));
    pos += n;
  }
  return static_cast<std::uint32_t>(crc);
}

std::string encode_container(const Container& c) {
  std::string out(kMagic, sizeof(kMagic));
  put_u32(out, kContainerVersion);
  put_u64(out, c.config.size());
  out += c.config;
  put_u32(out, static_cast<std::uint32_t>(c.tensors.size()));
  for (const auto& [name, t] : c.tensors) {
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    put_u32(out, static_cast<std::uint32_t>(t.shape().rank()));
    for (std::size_t i = 0; i < t.shape().rank(); ++i) put_u64(out, t.shape()[i]);
    for (double v : t.data()) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  }
  put_u32(out, crc32_of(out));
  return out;
}

std::uint32_t container_checksum(const Container& container) {
  const std::string bytes = encode_container(container);
  return crc32_of(std::string_view(bytes).substr(0, bytes.size() - 4));
}

Container decode_container(std::string_view bytes) {
  if (bytes.size() < sizeof(kMagic) + 8 ||
      std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw DataError("not a model container (bad magic)");
  }
  const std::string_view body = bytes.substr(0, bytes.size() - 4);
  Reader tail(bytes.substr(bytes.size() - 4));
  if (tail.uint(4) != crc32_of(body)) throw DataError("container checksum mismatch");

  Reader r(body);
  r.take(sizeof(kMagic));
  const auto version = r.uint(4);
  if (version != kContainerVersion) {
    throw DataError("unsupported container version " + std::to_string(version));
  }
  Container c;
  c.config = std::string(r.take(r.uint(8)));
  const auto count = r.uint(4);
  for (std::uint64_t k = 0; k < count; ++k) {
    std::string name(r.take(r.uint(4)));
    const auto rank = r.uint(4);
    if (rank < 1 || rank > Shape::kMaxRank) throw DataError("bad rank for tensor '" + name + "'");
    std::vector<std::size_t> dims(rank);
    std::uint64_t numel = 1;
    for (auto& d : dims) {
      d = r.uint(8);
      numel *= d;
    }
    if (numel * 4 > r.remaining()) throw DataError("container truncated in '" + name + "'");
    std::vector<double> data(numel);
    for (auto& v : data) v = std::bit_cast<float>(static_cast<std::uint32_t>(r.uint(4)));
    c.tensors.emplace_back(std::move(name), Tensor(Shape(std::span<const std::size_t>(dims)),
                                                   std::move(data)));
  }
  if (r.remaining() != 0) throw DataError("trailing bytes in container");
  return c;
}

Tensor to_stored_precision(const Tensor& t) {
  Tensor out = t;
  for (double& v : out.data()) v = static_cast<float>(v);
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write '" + path + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("write failed for '" + path + "'");
}

void save_container(const std::string& path, const Container& container) {
  write_file(path, encode_container(container));
}

Container load_container(const std::string& path) { return decode_container(read_file(path)); }

}  // namespace lmtag
