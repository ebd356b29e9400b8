// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstring>
#include <fstream>
#include <numeric>
#include <vector>

#include "semsplat/common.hpp"

namespace semsplat {

// Dense row-major tensor, f32 or u32 payload. Rank up to 8; rank 0 is a
// scalar. On-disk format (".sgtn", little endian):
//   magic "SGTN" | u32 version=1 | u8 dtype | u8 rank | 6 zero bytes |
//   rank x u64 dims | payload (row major)
enum class DType : uint8_t { F32 = 0, U32 = 1 };

struct Tensor {
  DType dtype = DType::F32;
  std::vector<uint64_t> dims;
  std::vector<float> f32;
  std::vector<uint32_t> u32;

  static Tensor zeros_f32(std::vector<uint64_t> d) {
    Tensor t;
    t.dtype = DType::F32;
    t.dims = std::move(d);
    t.f32.assign(t.numel(), 0.0f);
    return t;
  }

  static Tensor zeros_u32(std::vector<uint64_t> d) {
    Tensor t;
    t.dtype = DType::U32;
    t.dims = std::move(d);
    t.u32.assign(t.numel(), 0u);
    return t;
  }

  size_t numel() const {
    size_t n = 1;
    for (uint64_t d : dims) n *= static_cast<size_t>(d);
    return n;
  }

  size_t rank() const { return dims.size(); }

  // Flat offset helpers for the common ranks.
  float& at2(size_t y, size_t x) { return f32[y * dims[1] + x]; }
  float at2(size_t y, size_t x) const { return f32[y * dims[1] + x]; }
  float& at3(size_t y, size_t x, size_t c) {
    return f32[(y * dims[1] + x) * dims[2] + c];
  }
  float at3(size_t y, size_t x, size_t c) const {
    return f32[(y * dims[1] + x) * dims[2] + c];
  }
  uint32_t& u_at2(size_t y, size_t x) { return u32[y * dims[1] + x]; }
  uint32_t u_at2(size_t y, size_t x) const { return u32[y * dims[1] + x]; }

  bool same_shape(const Tensor& o) const { return dims == o.dims; }
};

namespace detail {

inline void write_bytes(std::ofstream& out, const void* p, size_t n) {
  out.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(n));
}

inline void read_bytes(std::ifstream& in, void* p, size_t n,
                       const std::string& truncated_msg) {
  in.read(reinterpret_cast<char*>(p), static_cast<std::streamsize>(n));
  if (static_cast<size_t>(in.gcount()) != n) fail(truncated_msg);
}

}  // namespace detail

inline void write_tensor(const std::string& path, const Tensor& t) {
  static_assert(sizeof(float) == 4);
  std::ofstream out(path, std::ios::binary);
  require(out.good(), "cannot open for write: " + path);
  const char magic[4] = {'S', 'G', 'T', 'N'};
  detail::write_bytes(out, magic, 4);
  uint32_t version = 1;
  detail::write_bytes(out, &version, 4);
  uint8_t dtype = static_cast<uint8_t>(t.dtype);
  uint8_t rank = static_cast<uint8_t>(t.dims.size());
  detail::write_bytes(out, &dtype, 1);
  detail::write_bytes(out, &rank, 1);
  const char pad[6] = {0, 0, 0, 0, 0, 0};
  detail::write_bytes(out, pad, 6);
  for (uint64_t d : t.dims) detail::write_bytes(out, &d, 8);
  size_t n = t.numel();
  if (t.dtype == DType::F32) {
    require(t.f32.size() == n, "tensor payload size mismatch");
    detail::write_bytes(out, t.f32.data(), n * 4);
  } else {
    require(t.u32.size() == n, "tensor payload size mismatch");
    detail::write_bytes(out, t.u32.data(), n * 4);
  }
  require(out.good(), "write failed: " + path);
}

inline Tensor read_tensor(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "cannot open: " + path);
  char magic[4];
  detail::read_bytes(in, magic, 4, "truncated tensor file: " + path);
  if (std::memcmp(magic, "SGTN", 4) != 0) fail("not a tensor file: " + path);
  uint32_t version = 0;
  detail::read_bytes(in, &version, 4, "truncated tensor file: " + path);
  if (version != 1) fail("unsupported tensor version: " + path);
  uint8_t dtype = 0, rank = 0;
  detail::read_bytes(in, &dtype, 1, "truncated tensor file: " + path);
  detail::read_bytes(in, &rank, 1, "truncated tensor file: " + path);
  char pad[6];
  detail::read_bytes(in, pad, 6, "truncated tensor file: " + path);
  if (dtype > 1) fail("unknown tensor dtype: " + path);
  if (rank > 8) fail("bad tensor rank: " + path);
  Tensor t;
  t.dtype = static_cast<DType>(dtype);
  t.dims.resize(rank);
  uint64_t n = 1;
  for (int i = 0; i < rank; ++i) {
    detail::read_bytes(in, &t.dims[i], 8, "truncated tensor file: " + path);
    if (t.dims[i] != 0 && n > (uint64_t(1) << 36) / t.dims[i])
      fail("tensor dims overflow: " + path);
    n *= t.dims[i];
  }
  if (t.dtype == DType::F32) {
    t.f32.resize(n);
    detail::read_bytes(in, t.f32.data(), n * 4, "truncated tensor file: " + path);
  } else {
    t.u32.resize(n);
    detail::read_bytes(in, t.u32.data(), n * 4, "truncated tensor file: " + path);
  }
  return t;
}

}  // namespace semsplat
