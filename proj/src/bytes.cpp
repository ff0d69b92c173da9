// Copyright 2026 The sacdesk Authors.
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

#include "sacd/bytes.hpp"

#include <bit>
#include <cstring>

static_assert(std::endian::native == std::endian::little,
              "byte I/O assumes a little-endian host");

namespace sacd {

void ByteWriter::u32(std::uint32_t v) {
  std::uint8_t b[4];
  std::memcpy(b, &v, 4);
  buf_.insert(buf_.end(), b, b + 4);
}

void ByteWriter::u64(std::uint64_t v) {
  std::uint8_t b[8];
  std::memcpy(b, &v, 8);
  buf_.insert(buf_.end(), b, b + 8);
}

void ByteWriter::f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

void ByteWriter::f64_vector(std::span<const double> v) {
  u32(static_cast<std::uint32_t>(v.size()));
  f64_array(v);
}

void ByteWriter::f64_array(std::span<const double> v) {
  const auto* p = reinterpret_cast<const std::uint8_t*>(v.data());
  buf_.insert(buf_.end(), p, p + v.size() * sizeof(double));
}

void ByteReader::need(std::size_t n, const char* what) {
  if (remaining() < n) {
    throw DecodeError(std::string("truncated ") + what + " (need " + std::to_string(n) +
                          " bytes, have " + std::to_string(remaining()) + ")",
                      stream_offset());
  }
}

std::uint8_t ByteReader::u8() {
  need(1, "u8");
  return data_[pos_++];
}

std::uint32_t ByteReader::u32() {
  need(4, "u32");
  std::uint32_t v;
  std::memcpy(&v, data_.data() + pos_, 4);
  pos_ += 4;
  return v;
}

std::uint64_t ByteReader::u64() {
  need(8, "u64");
  std::uint64_t v;
  std::memcpy(&v, data_.data() + pos_, 8);
  pos_ += 8;
  return v;
}

double ByteReader::f64() { return std::bit_cast<double>(u64()); }

std::vector<double> ByteReader::f64_vector() {
  const std::uint32_t n = u32();
  need(static_cast<std::size_t>(n) * 8, "f64 vector");
  std::vector<double> out(n);
  f64_array(out);
  return out;
}

void ByteReader::f64_array(std::span<double> out) {
  need(out.size() * 8, "f64 array");
  std::memcpy(out.data(), data_.data() + pos_, out.size() * 8);
  pos_ += out.size() * 8;
}

std::span<const std::uint8_t> ByteReader::bytes(std::size_t n) {
  need(n, "byte run");
  auto s = data_.subspan(pos_, n);
  pos_ += n;
  return s;
}

std::uint64_t fnv1a(std::span<const std::uint8_t> data, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (std::uint8_t b : data) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t fnv1a(const std::string& text) {
  return fnv1a({reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
}

}  // namespace sacd
