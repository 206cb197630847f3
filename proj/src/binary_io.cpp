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

#include "lig/binary_io.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "lig/error.hpp"

namespace lig {

std::uint32_t Crc32(std::span<const std::uint8_t> data) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes a uInt length; feed in chunks to stay portable for large files.
  constexpr std::size_t kChunk = 1u << 30;
  for (std::size_t off = 0; off < data.size(); off += kChunk) {
    const std::size_t n = std::min(kChunk, data.size() - off);
    crc = crc32(crc, data.data() + off, static_cast<uInt>(n));
  }
  return static_cast<std::uint32_t>(crc);
}

void ByteWriter::U32(std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void ByteWriter::U64(std::uint64_t v) {
  for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void ByteWriter::F32(float v) { U32(std::bit_cast<std::uint32_t>(v)); }

void ByteWriter::F32s(std::span<const float> values) {
  if constexpr (std::endian::native == std::endian::little) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(values.data());
    buf_.insert(buf_.end(), p, p + values.size_bytes());
  } else {
    for (float v : values) F32(v);
  }
}

void ByteWriter::String(std::string_view s) {
  U32(static_cast<std::uint32_t>(s.size()));
  buf_.insert(buf_.end(), s.begin(), s.end());
}

void ByteReader::Need(std::size_t n) const {
  if (data_.size() - pos_ < n) {
    throw Error(ErrorCode::kChecksumMismatch, "payload ends early");
  }
}

std::uint8_t ByteReader::U8() {
  Need(1);
  return data_[pos_++];
}

std::uint32_t ByteReader::U32() {
  Need(4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(data_[pos_ + i]) << (8 * i);
  pos_ += 4;
  return v;
}

std::uint64_t ByteReader::U64() {
  Need(8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(data_[pos_ + i]) << (8 * i);
  pos_ += 8;
  return v;
}

float ByteReader::F32() { return std::bit_cast<float>(U32()); }

void ByteReader::F32s(std::span<float> out) {
  Need(out.size_bytes());
  if constexpr (std::endian::native == std::endian::little) {
    std::memcpy(out.data(), data_.data() + pos_, out.size_bytes());
    pos_ += out.size_bytes();
  } else {
    for (float& v : out) v = F32();
  }
}

std::string ByteReader::String() {
  const std::uint32_t n = U32();
  Need(n);
  std::string s(reinterpret_cast<const char*>(data_.data() + pos_), n);
  pos_ += n;
  return s;
}

Bytes SealEnvelope(std::string_view magic, std::uint32_t version,
                   std::span<const std::uint8_t> payload) {
  ByteWriter w;
  w.Raw({reinterpret_cast<const std::uint8_t*>(magic.data()), magic.size()});
  w.U32(version);
  w.Raw(payload);
  const std::uint32_t crc = Crc32(w.bytes());
  w.U32(crc);
  return w.Take();
}

std::span<const std::uint8_t> OpenEnvelope(std::span<const std::uint8_t> file, std::string_view magic,
                                           std::uint32_t version) {
  const std::size_t header = magic.size() + 4;
  if (file.size() < magic.size()) {
    throw Error(ErrorCode::kChecksumMismatch, "file too short");
  }
  if (std::memcmp(file.data(), magic.data(), magic.size()) != 0) {
    throw Error(ErrorCode::kFormatVersionMismatch, "bad magic bytes");
  }
  if (file.size() < header + 4) {
    throw Error(ErrorCode::kChecksumMismatch, "file too short");
  }
  ByteReader r(file.subspan(magic.size(), 4));
  const std::uint32_t found = r.U32();
  if (found != version) {
    throw Error(ErrorCode::kFormatVersionMismatch,
                "version " + std::to_string(found) + ", expected " + std::to_string(version));
  }
  const auto body = file.first(file.size() - 4);
  ByteReader tail(file.last(4));
  if (Crc32(body) != tail.U32()) {
    throw Error(ErrorCode::kChecksumMismatch, "CRC32 does not match contents");
  }
  return body.subspan(header);
}

Bytes ReadFileBytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  Bytes data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(ErrorCode::kIoError, "read failed: " + path.string());
  return data;
}

void WriteFileBytes(const std::filesystem::path& path, std::span<const std::uint8_t> data) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot create " + path.string());
  out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
  if (!out) throw Error(ErrorCode::kIoError, "write failed: " + path.string());
}

std::string ReadFileText(const std::filesystem::path& path) {
  const Bytes b = ReadFileBytes(path);
  return std::string(b.begin(), b.end());
}

void WriteFileText(const std::filesystem::path& path, std::string_view text) {
  WriteFileBytes(path, {reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
}

}  // namespace lig
