// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace semsplat {

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

[[noreturn]] inline void fail(const std::string& msg) { throw Error(msg); }

inline void require(bool cond, const std::string& msg) {
  if (!cond) fail(msg);
}

// Deterministic engine; every stochastic code path takes one of these
// explicitly so a fixed seed reproduces byte-identical results.
using Rng = std::mt19937;

template <typename S>
inline S sigmoid(S x) {
  if (x >= S(0)) return S(1) / (S(1) + std::exp(-x));
  S e = std::exp(x);
  return e / (S(1) + e);
}

template <typename S>
inline S logit(S p) {
  require(p > S(0) && p < S(1), "logit argument outside (0, 1)");
  return std::log(p / (S(1) - p));
}

template <typename S>
inline S clamp(S x, S lo, S hi) {
  return x < lo ? lo : (x > hi ? hi : x);
}

}  // namespace semsplat
