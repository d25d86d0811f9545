#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cdg/errors.hpp"

namespace cdg {

using Index = Eigen::Index;

// Row-major pixel grid, rows == height. Row-major order is also the
// vectorization order used everywhere (y, Phi columns, templates).
template <typename T>
using PixelGrid = Eigen::Array<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using MatrixRM = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// 8-bit grayscale frame at native sensor resolution.
struct Frame {
  PixelGrid<std::uint8_t> pixels;

  Frame() = default;
  Frame(Index width, Index height, std::uint8_t fill = 0)
      : pixels(PixelGrid<std::uint8_t>::Constant(height, width, fill)) {}
  explicit Frame(PixelGrid<std::uint8_t> p) : pixels(std::move(p)) {}

  Index width() const { return pixels.cols(); }
  Index height() const { return pixels.rows(); }

  bool operator==(const Frame& other) const {
    return width() == other.width() && height() == other.height() &&
           (pixels == other.pixels).all();
  }
};

/// Absolute difference of two consecutive frames. Values are >= 0.
template <typename Scalar = double>
struct DifferenceImage {
  PixelGrid<Scalar> pixels;

  Index width() const { return pixels.cols(); }
  Index height() const { return pixels.rows(); }
};

/// Low-resolution image of block means, gridHeight x gridWidth.
template <typename Scalar = double>
struct BlockImage {
  MatrixRM<Scalar> values;

  Index gridWidth() const { return values.cols(); }
  Index gridHeight() const { return values.rows(); }
  Index size() const { return values.size(); }

  // Row-major vector view y of length N.
  Eigen::Map<const VectorX<Scalar>> vector() const {
    return {values.data(), values.size()};
  }
  Eigen::Map<VectorX<Scalar>> vector() { return {values.data(), values.size()}; }

  static BlockImage fromVector(const VectorX<Scalar>& y, Index gridWidth, Index gridHeight) {
    if (y.size() != gridWidth * gridHeight)
      throw StructuralError("BlockImage: vector length does not match grid");
    BlockImage out;
    out.values = Eigen::Map<const MatrixRM<Scalar>>(y.data(), gridHeight, gridWidth);
    return out;
  }
};

enum class Downsampling { BlockAverage, Subsample };

template <typename Scalar = double>
DifferenceImage<Scalar> frameDifference(const Frame& a, const Frame& b) {
  if (a.width() != b.width() || a.height() != b.height())
    throw StructuralError("frameDifference: frame dimensions differ");
  DifferenceImage<Scalar> d;
  d.pixels = (b.pixels.template cast<Scalar>() - a.pixels.template cast<Scalar>()).abs();
  return d;
}

/// Block-averaging operator Psi applied to any dense 2-D expression.
template <typename Derived>
BlockImage<typename Derived::Scalar> blockAverage(const Eigen::DenseBase<Derived>& image,
                                                  Index block) {
  using Scalar = typename Derived::Scalar;
  if (block < 1 || image.cols() % block != 0 || image.rows() % block != 0)
    throw StructuralError("blockAverage: image dimensions not divisible by block size");
  const Index gh = image.rows() / block;
  const Index gw = image.cols() / block;
  const Scalar area = static_cast<Scalar>(block * block);
  BlockImage<Scalar> out;
  out.values.resize(gh, gw);
  for (Index r = 0; r < gh; ++r)
    for (Index c = 0; c < gw; ++c)
      out.values(r, c) = image.derived().block(r * block, c * block, block, block).sum() / area;
  return out;
}

template <typename Scalar>
BlockImage<Scalar> blockAverage(const DifferenceImage<Scalar>& d, Index block) {
  return blockAverage(d.pixels, block);
}

/// Keeps the top-left pixel of every block. Offered for comparison with
/// block averaging; not the default compression layer.
template <typename Scalar>
BlockImage<Scalar> subsample(const DifferenceImage<Scalar>& d, Index block) {
  if (block < 1 || d.width() % block != 0 || d.height() % block != 0)
    throw StructuralError("subsample: image dimensions not divisible by block size");
  BlockImage<Scalar> out;
  out.values.resize(d.height() / block, d.width() / block);
  for (Index r = 0; r < out.gridHeight(); ++r)
    for (Index c = 0; c < out.gridWidth(); ++c) out.values(r, c) = d.pixels(r * block, c * block);
  return out;
}

template <typename Scalar>
BlockImage<Scalar> downsample(const DifferenceImage<Scalar>& d, Index block, Downsampling mode) {
  return mode == Downsampling::BlockAverage ? blockAverage(d, block) : subsample(d, block);
}

/// L2 norm of the vectorized block image; used to gate idle frames.
template <typename Scalar>
Scalar motionEnergy(const BlockImage<Scalar>& y) {
  return y.vector().norm();
}

/// Largest possible block-image norm for 8-bit input: 255 * sqrt(N).
inline double maxBlockImageNorm(Index n) { return 255.0 * std::sqrt(static_cast<double>(n)); }

// ---------------------------------------------------------------------------
// Raw clip files: <stem>.raw holds frameCount * width * height unsigned bytes,
// row-major, frame after frame. <stem>.hdr is a text sidecar:
//   width <W>
//   height <H>
//   frames <count>
//   fps <fps>
// ---------------------------------------------------------------------------

struct ClipHeader {
  Index width = 0;
  Index height = 0;
  Index frames = 0;
  double fps = 0.0;
};

struct Clip {
  std::vector<Frame> frames;
  double fps = 0.0;
};

// `stem` is the path without extension; both files are written.
void writeClip(const std::filesystem::path& stem, const std::vector<Frame>& frames, double fps);
Clip readClip(const std::filesystem::path& stem);
ClipHeader readClipHeader(const std::filesystem::path& hdrPath);

}  // namespace cdg
