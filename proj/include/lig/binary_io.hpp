// Copyright 2026 The Authors.
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

#pragma once

// Little-endian binary codec shared by the index file and the embedding
// bundle. A file is an envelope:
//
//   magic (4 bytes) | version (u32) | payload ... | crc32 (u32)
//
// where the CRC covers every byte before it.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace lig {

using Bytes = std::vector<std::uint8_t>;

std::uint32_t Crc32(std::span<const std::uint8_t> data);

class ByteWriter {
 public:
  void U8(std::uint8_t v) { buf_.push_back(v); }
  void U32(std::uint32_t v);
  void U64(std::uint64_t v);
  void I64(std::int64_t v) { U64(static_cast<std::uint64_t>(v)); }
  void F32(float v);
  void F32s(std::span<const float> values);
  // u32 length prefix followed by raw bytes.
  void String(std::string_view s);
  void Raw(std::span<const std::uint8_t> data) { buf_.insert(buf_.end(), data.begin(), data.end()); }

  const Bytes& bytes() const { return buf_; }
  Bytes Take() { return std::move(buf_); }

 private:
  Bytes buf_;
};

// Reads from a borrowed buffer. Running past the end throws kChecksumMismatch:
// a payload that passed the CRC but is short means the writer and reader
// disagree about the layout, which is treated as corruption.
class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> data) : data_(data) {}

  std::uint8_t U8();
  std::uint32_t U32();
  std::uint64_t U64();
  std::int64_t I64() { return static_cast<std::int64_t>(U64()); }
  float F32();
  void F32s(std::span<float> out);
  std::string String();

  std::size_t remaining() const { return data_.size() - pos_; }
  bool done() const { return pos_ == data_.size(); }

 private:
  void Need(std::size_t n) const;

  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
};

Bytes SealEnvelope(std::string_view magic, std::uint32_t version, std::span<const std::uint8_t> payload);

// Validates magic, version and CRC; returns a view of the payload.
// Wrong magic or version -> kFormatVersionMismatch; short file or bad CRC ->
// kChecksumMismatch.
std::span<const std::uint8_t> OpenEnvelope(std::span<const std::uint8_t> file, std::string_view magic,
                                           std::uint32_t version);

Bytes ReadFileBytes(const std::filesystem::path& path);
void WriteFileBytes(const std::filesystem::path& path, std::span<const std::uint8_t> data);
std::string ReadFileText(const std::filesystem::path& path);
void WriteFileText(const std::filesystem::path& path, std::string_view text);

}  // namespace lig
