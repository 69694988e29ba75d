#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "lexichain/error.hpp"

namespace lexichain {

/// A dense vector of finite values with a fixed, positive dimension.
class EmbeddingVector {
 public:
  EmbeddingVector() = default;
  explicit EmbeddingVector(std::vector<double> values) : values_(std::move(values)) {
    if (values_.empty()) fail(ErrorKind::invalid_input, "embedding vector has dimension 0");
    for (double v : values_) {
      if (!std::isfinite(v)) fail(ErrorKind::invalid_input, "embedding vector contains a non-finite value");
    }
  }

  size_t dim() const { return values_.size(); }
  std::span<const double> values() const { return values_; }
  double operator[](size_t i) const { return values_[i]; }

  double norm() const {
    double sum = 0.0;
    for (double v : values_) sum += v * v;
    return std::sqrt(sum);
  }

  /// Copy scaled to unit L2 norm. A zero vector cannot be normalized.
  EmbeddingVector normalized() const {
    const double n = norm();
    if (n == 0.0) fail(ErrorKind::invalid_input, "cannot normalize a zero vector");
    std::vector<double> out(values_);
    for (double& v : out) v /= n;
    return EmbeddingVector(std::move(out));
  }

  bool operator==(const EmbeddingVector&) const = default;

 private:
  std::vector<double> values_;
};

inline double dot(std::span<const double> a, std::span<const double> b) {
  double sum = 0.0;
  for (size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
  return sum;
}

/// dot(a,b) / (|a| |b|), clamped into [-1, 1] against rounding.
inline double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.dim() != b.dim()) {
    fail(ErrorKind::invalid_input,
         "dimension mismatch: " + std::to_string(a.dim()) + " vs " + std::to_string(b.dim()));
  }
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) fail(ErrorKind::invalid_input, "cosine similarity of a zero vector");
  const double sim = dot(a.values(), b.values()) / (na * nb);
  return std::clamp(sim, -1.0, 1.0);
}

/// Cosine distance, 1 - similarity.
inline double cosine_distance(const EmbeddingVector& a, const EmbeddingVector& b) {
  return 1.0 - cosine_similarity(a, b);
}

}  // namespace lexichain
