#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <vector>

#include "cdg/errors.hpp"
#include "cdg/imaging.hpp"
#include "cdg/projection.hpp"

namespace cdg {

struct RectSize {
  Index w = 10;
  Index h = 10;
  bool operator==(const RectSize&) const = default;
};

/// Rectangle template X(alpha, r): alpha is the top-left grid cell.
struct TemplateSpec {
  Index x = 0;
  Index y = 0;
  RectSize size;

  double centerX() const { return static_cast<double>(x) + static_cast<double>(size.w) / 2.0; }
  double centerY() const { return static_cast<double>(y) + static_cast<double>(size.h) / 2.0; }
};

struct MotionCenter {
  double x = 0.0;
  double y = 0.0;
  double score = 0.0;
  Index frameIndex = 0;
};

/// Unit-norm rectangle templates over every admissible position, with their
/// projections through one Phi precomputed at construction.
template <typename Scalar = double>
class TemplateBank {
 public:
  Index gridWidth() const { return gridW_; }
  Index gridHeight() const { return gridH_; }
  Index size() const { return static_cast<Index>(specs_.size()); }
  const std::vector<TemplateSpec>& specs() const { return specs_; }
  const MatrixRM<Scalar>& uncompressed() const { return uncompressed_; }  // K x N
  const MatrixRM<Scalar>& compressed() const { return compressed_; }      // K x M
  bool hasCompressed() const { return phiSeed_.has_value(); }
  std::optional<std::uint64_t> phiSeed() const { return phiSeed_; }

  // Uncompressed-only bank (training path and reference extraction).
  static TemplateBank build(Index gridW, Index gridH, const std::vector<RectSize>& sizes) {
    if (sizes.empty()) throw StructuralError("buildTemplateBank: no template sizes");
    TemplateBank bank;
    bank.gridW_ = gridW;
    bank.gridH_ = gridH;
    for (const RectSize& r : sizes) {
      if (r.w < 1 || r.h < 1 || r.w > gridW || r.h > gridH)
        throw StructuralError("buildTemplateBank: rectangle larger than grid");
      for (Index ay = 0; ay + r.h <= gridH; ++ay)
        for (Index ax = 0; ax + r.w <= gridW; ++ax) bank.specs_.push_back({ax, ay, r});
    }
    const Index n = gridW * gridH;
    bank.uncompressed_.setZero(bank.size(), n);
    bank.levels_.resize(bank.size());
    bank.selfNorm_.resize(bank.size());
    for (Index k = 0; k < bank.size(); ++k) {
      const TemplateSpec& s = bank.specs_[k];
      const Scalar level = Scalar(1) / std::sqrt(static_cast<Scalar>(s.size.w * s.size.h));
      Scalar sq = 0;
      for (Index r = 0; r < s.size.h; ++r)
        for (Index c = 0; c < s.size.w; ++c) {
          bank.uncompressed_(k, (s.y + r) * gridW + s.x + c) = level;
          sq += level * level;
        }
      bank.levels_[k] = level;
      bank.selfNorm_[k] = sq;
    }
    return bank;
  }

  static TemplateBank build(Index gridW, Index gridH, const std::vector<RectSize>& sizes,
                            const ProjectionMatrix<Scalar>& phi) {
    if (phi.cols() != gridW * gridH)
      throw StructuralError("buildTemplateBank: phi.n != gridW*gridH");
    TemplateBank bank = build(gridW, gridH, sizes);
    bank.compressed_.resize(bank.size(), phi.rows());
    for (Index k = 0; k < bank.size(); ++k)
      bank.compressed_.row(k) = project(phi, bank.uncompressed_.row(k).transpose()).values.transpose();
    bank.phiSeed_ = phi.seed();
    return bank;
  }

  // <y, X_k> summed over the rectangle in row-major order. Templates with the
  // same size see the same summation order, so equal supports give equal sums.
  Scalar correlation(const VectorX<Scalar>& y, Index k) const {
    const TemplateSpec& s = specs_[k];
    Scalar sum = 0;
    for (Index r = 0; r < s.size.h; ++r)
      for (Index c = 0; c < s.size.w; ++c) sum += y[(s.y + r) * gridW_ + s.x + c];
    return sum * levels_[k];
  }

  // ||y - X_k||^2 expanded as ||y||^2 - 2<y, X_k> + ||X_k||^2.
  Scalar squaredDistance(const VectorX<Scalar>& y, Scalar ySquaredNorm, Index k) const {
    return ySquaredNorm - Scalar(2) * correlation(y, k) + selfNorm_[k];
  }

 private:
  Index gridW_ = 0, gridH_ = 0;
  std::vector<TemplateSpec> specs_;
  std::vector<Scalar> levels_;
  std::vector<Scalar> selfNorm_;
  MatrixRM<Scalar> uncompressed_;
  MatrixRM<Scalar> compressed_;
  std::optional<std::uint64_t> phiSeed_;
};

template <typename Scalar>
TemplateBank<Scalar> buildTemplateBank(Index gridW, Index gridH, RectSize r,
                                       const ProjectionMatrix<Scalar>& phi) {
  return TemplateBank<Scalar>::build(gridW, gridH, {r}, phi);
}

namespace detail {

template <typename Scalar>
MotionCenter centerOf(const TemplateSpec& s, Scalar score, Index frameIndex) {
  return {s.centerX(), s.centerY(), static_cast<double>(score), frameIndex};
}

}  // namespace detail

/// Motion center by min_alpha ||y - X(alpha, r)||_2 over the bank.
template <typename Scalar>
MotionCenter extractCenterUncompressed(const BlockImage<Scalar>& y, const TemplateBank<Scalar>& bank,
                                       Index frameIndex = 0) {
  if (y.gridWidth() != bank.gridWidth() || y.gridHeight() != bank.gridHeight())
    throw StructuralError("extractCenterUncompressed: block image does not match bank grid");
  const VectorX<Scalar> v = y.vector();
  const Scalar yy = v.squaredNorm();
  Index best = 0;
  Scalar bestDist = std::numeric_limits<Scalar>::infinity();
  for (Index k = 0; k < bank.size(); ++k) {
    const Scalar d = bank.squaredDistance(v, yy, k);
    if (d < bestDist) {
      bestDist = d;
      best = k;
    }
  }
  return detail::centerOf(bank.specs()[best], bank.correlation(v, best), frameIndex);
}

/// Compressed-domain smashed filter: argmax_alpha yHat^T (Phi X(alpha, r)).
template <typename Scalar>
MotionCenter extractCenterCompressed(const CompressedVector<Scalar>& yHat,
                                     const TemplateBank<Scalar>& bank, Index frameIndex = 0) {
  if (!bank.hasCompressed() || *bank.phiSeed() != yHat.sourceSeed)
    throw ConfigError("extractCenterCompressed: measurement and template bank use different Phi");
  if (bank.compressed().cols() != yHat.size())
    throw ConfigError("extractCenterCompressed: measurement count differs from template bank");
  const VectorX<Scalar> scores = bank.compressed() * yHat.values;
  Index best = 0;
  for (Index k = 1; k < scores.size(); ++k)
    if (scores[k] > scores[best]) best = k;
  return detail::centerOf(bank.specs()[best], scores[best], frameIndex);
}

/// Mean Euclidean distance (grid cells) between aligned center paths.
inline double centerError(const std::vector<MotionCenter>& a, const std::vector<MotionCenter>& b) {
  if (a.size() != b.size()) throw StructuralError("centerError: path lengths differ");
  if (a.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].frameIndex != b[i].frameIndex)
      throw StructuralError("centerError: frame indices are not aligned");
    total += std::hypot(a[i].x - b[i].x, a[i].y - b[i].y);
  }
  return total / static_cast<double>(a.size());
}

/// CSV with header `frameIndex,x,y,score`.
void writeCentersCsv(std::ostream& out, const std::vector<MotionCenter>& centers);

}  // namespace cdg
