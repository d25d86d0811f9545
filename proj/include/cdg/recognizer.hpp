#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cdg/errors.hpp"
#include "cdg/pipeline.hpp"

namespace cdg {

using Point = Eigen::Vector2d;
using PointSeq = std::vector<Point>;

/// Fixed-capacity FIFO of motion centers; the oldest point is evicted first.
class MotionTrace {
 public:
  explicit MotionTrace(std::size_t capacity = 50) : capacity_(capacity) {
    if (capacity == 0) throw StructuralError("MotionTrace: capacity must be >= 1");
  }

  void push(const Point& p) {
    if (points_.size() == capacity_) points_.erase(points_.begin());
    points_.push_back(p);
  }
  void clear() { points_.clear(); }

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }
  const PointSeq& points() const { return points_; }

 private:
  std::size_t capacity_;
  PointSeq points_;
};

struct Alignment {
  double cost = 0.0;
  std::size_t pathLength = 0;
};

/// Classic DTW, Euclidean step cost, steps (1,0), (0,1), (1,1), both
/// endpoints matched. Among minimum-cost paths the longest is reported.
Alignment dtwAlign(std::span<const Point> a, std::span<const Point> b);
double dtwDistance(std::span<const Point> a, std::span<const Point> b);

/// Open-beginning, closed-end match of `training` against the tail of
/// `buffer`: min over start offsets s of cost/pathLength of
/// dtwAlign(buffer[s..], training).
double subsequenceMatch(std::span<const Point> buffer, std::span<const Point> training);

struct GestureClass {
  std::string label;
  std::vector<PointSeq> trainingTraces;
};

struct Verdict {
  std::optional<std::string> label;  // empty means NONE
  double distance = std::numeric_limits<double>::infinity();
  double runnerUp = std::numeric_limits<double>::infinity();
  std::optional<std::size_t> classIndex;  // owner of the nearest trace, even when rejected
};

struct MatchOptions {
  bool meanCenter = false;  // subtract each sequence's mean before matching
};

/// Nearest neighbour over all training traces; accepted when distance < tau.
Verdict classify(std::span<const Point> buffer, const std::vector<GestureClass>& classes, double tau,
                 const MatchOptions& options = {});

/// Percentile (linear interpolation) of within-class pairwise subsequence
/// distances between training traces.
double calibrateTau(const std::vector<GestureClass>& classes, double percentile = 0.95,
                    const MatchOptions& options = {});

/// Difference, block-average, and uncompressed extraction per frame pair,
/// gated by motion energy.
MotionTrace trainFromFrames(std::span<const Frame> frames, const FrontEnd& frontEnd);

/// Trained classifier bundle, stored as a versioned text file.
struct GestureModel {
  static constexpr int kFormatVersion = 1;

  PipelineConfig pipeline;
  std::vector<GestureClass> classes;
  double tau = 0.0;
  MatchOptions match;
  std::string configHash;

  Verdict classify(std::span<const Point> buffer) const {
    return cdg::classify(buffer, classes, tau, match);
  }
};

void saveModel(std::ostream& out, const GestureModel& model);
void saveModel(const std::filesystem::path& path, const GestureModel& model);
GestureModel loadModel(std::istream& in);
GestureModel loadModel(const std::filesystem::path& path);

}  // namespace cdg
