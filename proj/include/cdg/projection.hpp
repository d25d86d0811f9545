#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <random>

#include "cdg/errors.hpp"
#include "cdg/imaging.hpp"

namespace cdg {

/// Dense M x N matrix of i.i.d. +1/-1 entries, reproducible from (m, n, seed).
///
/// Entries are drawn from std::mt19937_64 seeded with `seed`, whose output
/// sequence is fixed by the C++ standard. Each 64-bit draw supplies 64 signs,
/// least significant bit first, filling the matrix in row-major order; a set
/// bit maps to +1 and a clear bit to -1. The matrix is stored unnormalized.
template <typename Scalar = double>
class ProjectionMatrix {
 public:
  ProjectionMatrix(Index m, Index n, std::uint64_t seed) : seed_(seed) {
    if (m < 1 || n < 1) throw StructuralError("buildProjection: m and n must be >= 1");
    entries_.resize(m, n);
    std::mt19937_64 gen(seed);
    std::uint64_t bits = 0;
    int left = 0;
    Scalar* p = entries_.data();
    for (Index k = 0; k < m * n; ++k) {
      if (left == 0) {
        bits = gen();
        left = 64;
      }
      p[k] = (bits & 1u) ? Scalar(1) : Scalar(-1);
      bits >>= 1;
      --left;
    }
  }

  Index rows() const { return entries_.rows(); }
  Index cols() const { return entries_.cols(); }
  std::uint64_t seed() const { return seed_; }
  const MatrixRM<Scalar>& entries() const { return entries_; }

 private:
  MatrixRM<Scalar> entries_;
  std::uint64_t seed_;
};

template <typename Scalar = double>
ProjectionMatrix<Scalar> buildProjection(Index m, Index n, std::uint64_t seed) {
  return ProjectionMatrix<Scalar>(m, n, seed);
}

template <typename Scalar = double>
struct CompressedVector {
  VectorX<Scalar> values;
  std::uint64_t sourceSeed = 0;

  Index size() const { return values.size(); }
};

template <typename Scalar, typename Derived>
CompressedVector<Scalar> project(const ProjectionMatrix<Scalar>& phi,
                                 const Eigen::MatrixBase<Derived>& y) {
  if (y.size() != phi.cols()) throw StructuralError("project: vector length != phi.n");
  CompressedVector<Scalar> out;
  out.values.noalias() = phi.entries() * y;
  out.sourceSeed = phi.seed();
  return out;
}

template <typename Scalar>
CompressedVector<Scalar> project(const ProjectionMatrix<Scalar>& phi, const BlockImage<Scalar>& y) {
  return project(phi, y.vector());
}

/// Theta = Phi * Psi applied matrix-free: block average, then project.
template <typename Scalar = double>
class CombinedOperator {
 public:
  CombinedOperator(std::shared_ptr<const ProjectionMatrix<Scalar>> phi, Index block, Index width,
                   Index height)
      : phi_(std::move(phi)), block_(block), width_(width), height_(height) {
    if (!phi_) throw StructuralError("combinedOperator: null projection");
    if (block < 1 || width % block != 0 || height % block != 0)
      throw StructuralError("combinedOperator: W and H must be divisible by B");
    if (phi_->cols() != (width / block) * (height / block))
      throw StructuralError("combinedOperator: phi.n != (W/B)*(H/B)");
  }

  Index rows() const { return phi_->rows(); }
  Index cols() const { return width_ * height_; }

  // Y is the row-major vectorized full-resolution difference image.
  template <typename Derived>
  CompressedVector<Scalar> apply(const Eigen::MatrixBase<Derived>& Y) const {
    if (Y.size() != cols()) throw StructuralError("combinedOperator: input length != W*H");
    const VectorX<Scalar> flat = Y;
    Eigen::Map<const PixelGrid<Scalar>> image(flat.data(), height_, width_);
    return project(*phi_, blockAverage(image, block_));
  }

  CompressedVector<Scalar> apply(const DifferenceImage<Scalar>& d) const {
    if (d.width() != width_ || d.height() != height_)
      throw StructuralError("combinedOperator: image size mismatch");
    return project(*phi_, blockAverage(d, block_));
  }

  const ProjectionMatrix<Scalar>& phi() const { return *phi_; }
  Index block() const { return block_; }

 private:
  std::shared_ptr<const ProjectionMatrix<Scalar>> phi_;
  Index block_, width_, height_;
};

template <typename Scalar>
CombinedOperator<Scalar> combinedOperator(std::shared_ptr<const ProjectionMatrix<Scalar>> phi,
                                          Index block, Index width, Index height) {
  return CombinedOperator<Scalar>(std::move(phi), block, width, height);
}

/// Per-layer and overall compression factors of the two-layer front end.
struct CompressionRatios {
  double blockLayer;       // W*H / N
  double projectionLayer;  // N / M
  double overall;          // W*H / M
};

inline CompressionRatios compressionRatios(Index width, Index height, Index block, Index m) {
  if (block < 1 || m < 1 || width % block != 0 || height % block != 0)
    throw StructuralError("compressionRatios: invalid shape");
  const double pixels = static_cast<double>(width * height);
  const double n = static_cast<double>((width / block) * (height / block));
  return {pixels / n, n / static_cast<double>(m), pixels / static_cast<double>(m)};
}

}  // namespace cdg
