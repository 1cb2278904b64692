// Copyright 2026 The repkd Authors.
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

#include "repkd/binio.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "repkd/tensor.hpp"

namespace repkd {

std::string shape_string(const std::vector<std::size_t>& dims) {
  std::string s = "[";
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(dims[i]);
  }
  return s + "]";
}

namespace binio {

static_assert(std::endian::native == std::endian::little,
              "binary formats assume a little-endian host");

namespace {
template <typename T>
void put(std::vector<std::uint8_t>& buf, T v) {
  std::uint8_t raw[sizeof(T)];
  std::memcpy(raw, &v, sizeof(T));
  buf.insert(buf.end(), raw, raw + sizeof(T));
}
}  // namespace

void Writer::magic(std::string_view m) { buf_.insert(buf_.end(), m.begin(), m.end()); }
void Writer::u8(std::uint8_t v) { buf_.push_back(v); }
void Writer::u16(std::uint16_t v) { put(buf_, v); }
void Writer::u32(std::uint32_t v) { put(buf_, v); }
void Writer::u64(std::uint64_t v) { put(buf_, v); }
void Writer::f32(float v) { put(buf_, v); }

void Writer::f32s(std::span<const float> v) {
  const auto* p = reinterpret_cast<const std::uint8_t*>(v.data());
  buf_.insert(buf_.end(), p, p + v.size_bytes());
}

void Writer::short_string(std::string_view s) {
  if (s.size() > 0xFFFF) throw InvalidInput("string longer than 65535 bytes: " + std::string(s.substr(0, 32)));
  u16(static_cast<std::uint16_t>(s.size()));
  buf_.insert(buf_.end(), s.begin(), s.end());
}

void Writer::save(const std::filesystem::path& path) const { write_file(path, buf_); }

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw MissingArtifact("cannot open for writing: " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("write failed: " + path.string());
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingArtifact("cannot open: " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string peek_magic(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingArtifact("cannot open: " + path.string());
  char buf[4] = {};
  in.read(buf, 4);
  return std::string(buf, static_cast<std::size_t>(in.gcount()));
}

Reader::Reader(std::vector<std::uint8_t> bytes, std::string what)
    : bytes_(std::move(bytes)), what_(std::move(what)) {}

Reader Reader::open(const std::filesystem::path& path) {
  return Reader(read_file(path), path.string());
}

const std::uint8_t* Reader::take(std::size_t n) {
  if (n > remaining()) {
    throw FormatError(what_ + ": truncated (need " + std::to_string(n) +
                      " bytes at offset " + std::to_string(pos_) + ", have " +
                      std::to_string(remaining()) + ")");
  }
  const std::uint8_t* p = bytes_.data() + pos_;
  pos_ += n;
  return p;
}

std::string Reader::take_magic() {
  const auto* p = take(4);
  return std::string(reinterpret_cast<const char*>(p), 4);
}

void Reader::expect_magic(std::string_view m) {
  if (remaining() < m.size()) throw FormatError(what_ + ": too short for magic");
  const std::string got = take_magic();
  if (got != m) {
    throw FormatError(what_ + ": bad magic (expected " + std::string(m) + ")");
  }
}

namespace {
template <typename T>
T get(const std::uint8_t* p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  return v;
}
}  // namespace

std::uint8_t Reader::u8() { return *take(1); }
std::uint16_t Reader::u16() { return get<std::uint16_t>(take(2)); }
std::uint32_t Reader::u32() { return get<std::uint32_t>(take(4)); }
std::uint64_t Reader::u64() { return get<std::uint64_t>(take(8)); }
float Reader::f32() { return get<float>(take(4)); }

void Reader::f32s(std::span<float> out) {
  if (out.size() > remaining() / sizeof(float)) {
    take(out.size_bytes());  // throws with a uniform message
  }
  std::memcpy(out.data(), take(out.size_bytes()), out.size_bytes());
}

std::string Reader::short_string() {
  const std::uint16_t n = u16();
  const auto* p = take(n);
  return std::string(reinterpret_cast<const char*>(p), n);
}

}  // namespace binio
}  // namespace repkd
