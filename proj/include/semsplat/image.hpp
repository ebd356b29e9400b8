// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <fstream>

#include "semsplat/tensor.hpp"

namespace semsplat {

// Binary PPM (P6) / PGM (P5) with maxval 255. Float channels in [0, 1]
// quantize by round(clamp(v) * 255).
inline uint8_t quantize_channel(float v) {
  float c = clamp(v, 0.0f, 1.0f);
  return static_cast<uint8_t>(std::lround(c * 255.0f));
}

inline void write_ppm(const std::string& path, const Tensor& img) {
  require(img.dtype == DType::F32 && img.rank() == 3 && img.dims[2] == 3,
          "ppm writer needs H x W x 3 f32");
  std::ofstream out(path, std::ios::binary);
  require(out.good(), "cannot open for write: " + path);
  out << "P6\n" << img.dims[1] << " " << img.dims[0] << "\n255\n";
  std::vector<uint8_t> row(img.dims[1] * 3);
  for (size_t y = 0; y < img.dims[0]; ++y) {
    for (size_t x = 0; x < img.dims[1]; ++x)
      for (size_t c = 0; c < 3; ++c)
        row[x * 3 + c] = quantize_channel(img.at3(y, x, c));
    out.write(reinterpret_cast<const char*>(row.data()),
              static_cast<std::streamsize>(row.size()));
  }
  require(out.good(), "write failed: " + path);
}

inline void write_pgm(const std::string& path, const Tensor& img) {
  require(img.dtype == DType::F32 && img.rank() == 2,
          "pgm writer needs H x W f32");
  std::ofstream out(path, std::ios::binary);
  require(out.good(), "cannot open for write: " + path);
  out << "P5\n" << img.dims[1] << " " << img.dims[0] << "\n255\n";
  std::vector<uint8_t> row(img.dims[1]);
  for (size_t y = 0; y < img.dims[0]; ++y) {
    for (size_t x = 0; x < img.dims[1]; ++x)
      row[x] = quantize_channel(img.at2(y, x));
    out.write(reinterpret_cast<const char*>(row.data()),
              static_cast<std::streamsize>(row.size()));
  }
  require(out.good(), "write failed: " + path);
}

namespace detail {

inline int read_pnm_int(std::ifstream& in, const std::string& path) {
  // Whitespace and '#'-comment aware token scan.
  int c = in.get();
  while (c != EOF) {
    if (c == '#') {
      while (c != EOF && c != '\n') c = in.get();
    } else if (!std::isspace(c)) {
      break;
    } else {
      c = in.get();
    }
  }
  require(c != EOF && std::isdigit(c), "invalid image header: " + path);
  int v = 0;
  while (c != EOF && std::isdigit(c)) {
    v = v * 10 + (c - '0');
    c = in.get();
  }
  return v;
}

}  // namespace detail

inline Tensor read_ppm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "cannot open: " + path);
  char m0 = static_cast<char>(in.get()), m1 = static_cast<char>(in.get());
  require(m0 == 'P' && m1 == '6', "not a P6 ppm: " + path);
  int w = detail::read_pnm_int(in, path);
  int h = detail::read_pnm_int(in, path);
  int maxval = detail::read_pnm_int(in, path);
  require(maxval == 255, "unsupported ppm maxval: " + path);
  require(w > 0 && h > 0, "invalid image size: " + path);
  std::vector<uint8_t> data(size_t(w) * h * 3);
  in.read(reinterpret_cast<char*>(data.data()),
          static_cast<std::streamsize>(data.size()));
  require(static_cast<size_t>(in.gcount()) == data.size(),
          "truncated image file: " + path);
  Tensor t = Tensor::zeros_f32({uint64_t(h), uint64_t(w), 3});
  for (size_t i = 0; i < data.size(); ++i) t.f32[i] = data[i] / 255.0f;
  return t;
}

// RGB image from either a raw float tensor (preferred, lossless) or a ppm.
inline Tensor load_image(const std::string& path) {
  if (path.size() >= 4 && path.compare(path.size() - 4, 4, ".ppm") == 0)
    return read_ppm(path);
  Tensor t = read_tensor(path);
  require(t.dtype == DType::F32 && t.rank() == 3 && t.dims[2] == 3,
          "image tensor must be H x W x 3 f32: " + path);
  return t;
}

}  // namespace semsplat
