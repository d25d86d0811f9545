#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cdg/imaging.hpp"
#include "cdg/projection.hpp"
#include "cdg/smashed_filter.hpp"

namespace cdg {

struct PipelineConfig {
  Index width = 640;
  Index height = 480;
  Index block = 16;
  Index measurements = 400;
  std::uint64_t seed = 20160808;
  std::vector<RectSize> templates{{10, 10}};
  // Motion gate as a fraction of the largest possible block-image norm.
  double motionThreshold = 0.02;
  Index bufferLength = 50;
  Downsampling downsampling = Downsampling::BlockAverage;

  Index gridWidth() const { return width / block; }
  Index gridHeight() const { return height / block; }
  Index n() const { return gridWidth() * gridHeight(); }

  // Throws StructuralError on shapes the pipeline cannot run.
  void validate() const;
};

enum class Domain { Uncompressed, Compressed };

/// Block images of the frame pairs that passed the motion gate.
struct MotionImages {
  std::vector<BlockImage<double>> images;
  std::vector<Index> frameIndex;  // index of the earlier frame of each pair
};

/// The per-frame front end: difference, downsample, gate, and center
/// extraction in either domain. Immutable after construction.
class FrontEnd {
 public:
  explicit FrontEnd(PipelineConfig cfg, bool withProjection = true);

  const PipelineConfig& config() const { return cfg_; }
  const TemplateBank<double>& bank() const { return bank_; }
  bool hasProjection() const { return phi_ != nullptr; }
  const ProjectionMatrix<double>& phi() const;
  double motionThreshold() const { return threshold_; }
  CompressionRatios ratios() const;

  // Empty when the pair's motion energy is below the gate.
  std::optional<BlockImage<double>> motionImage(const Frame& prev, const Frame& next) const;
  MotionImages motionImages(std::span<const Frame> frames) const;

  MotionCenter center(const BlockImage<double>& y, Domain domain, Index frameIndex = 0) const;
  std::vector<MotionCenter> centers(const MotionImages& images, Domain domain) const;
  std::vector<MotionCenter> centers(std::span<const Frame> frames, Domain domain) const {
    return centers(motionImages(frames), domain);
  }

 private:
  PipelineConfig cfg_;
  std::shared_ptr<const ProjectionMatrix<double>> phi_;
  TemplateBank<double> bank_;
  double threshold_;
};

std::string formatTemplates(const std::vector<RectSize>& sizes);
std::vector<RectSize> parseTemplates(const std::string& text);

}  // namespace cdg
