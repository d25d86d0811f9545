#include "cdg/pipeline.hpp"

#include <sstream>

#include "cdg/errors.hpp"

namespace cdg {

void PipelineConfig::validate() const {
  if (width < 1 || height < 1 || block < 1)
    throw StructuralError("pipeline: width, height and block must be positive");
  if (width % block != 0 || height % block != 0)
    throw StructuralError("pipeline: width and height must be divisible by the block size");
  if (measurements < 1 || measurements > n())
    throw ConfigError("pipeline: measurements must lie in [1, N]");
  if (templates.empty()) throw ConfigError("pipeline: at least one template size is required");
  if (bufferLength < 1) throw ConfigError("pipeline: buffer length must be >= 1");
  if (motionThreshold < 0.0) throw ConfigError("pipeline: motion threshold must be >= 0");
}

FrontEnd::FrontEnd(PipelineConfig cfg, bool withProjection) : cfg_(std::move(cfg)) {
  cfg_.validate();
  if (withProjection) {
    phi_ = std::make_shared<const ProjectionMatrix<double>>(cfg_.measurements, cfg_.n(), cfg_.seed);
    bank_ = TemplateBank<double>::build(cfg_.gridWidth(), cfg_.gridHeight(), cfg_.templates, *phi_);
  } else {
    bank_ = TemplateBank<double>::build(cfg_.gridWidth(), cfg_.gridHeight(), cfg_.templates);
  }
  threshold_ = cfg_.motionThreshold * maxBlockImageNorm(cfg_.n());
}

const ProjectionMatrix<double>& FrontEnd::phi() const {
  if (!phi_) throw ConfigError("front end was built without a projection");
  return *phi_;
}

CompressionRatios FrontEnd::ratios() const {
  return compressionRatios(cfg_.width, cfg_.height, cfg_.block, cfg_.measurements);
}

std::optional<BlockImage<double>> FrontEnd::motionImage(const Frame& prev, const Frame& next) const {
  if (prev.width() != cfg_.width || prev.height() != cfg_.height)
    throw StructuralError("front end: frame size does not match pipeline");
  BlockImage<double> y = downsample(frameDifference<double>(prev, next), cfg_.block, cfg_.downsampling);
  if (motionEnergy(y) < threshold_) return std::nullopt;
  return y;
}

MotionImages FrontEnd::motionImages(std::span<const Frame> frames) const {
  if (frames.size() < 2) throw StructuralError("front end: at least two frames are required");
  MotionImages out;
  for (std::size_t i = 0; i + 1 < frames.size(); ++i) {
    if (auto y = motionImage(frames[i], frames[i + 1])) {
      out.images.push_back(std::move(*y));
      out.frameIndex.push_back(static_cast<Index>(i));
    }
  }
  return out;
}

MotionCenter FrontEnd::center(const BlockImage<double>& y, Domain domain, Index frameIndex) const {
  if (domain == Domain::Uncompressed) return extractCenterUncompressed(y, bank_, frameIndex);
  return extractCenterCompressed(project(phi(), y), bank_, frameIndex);
}

std::vector<MotionCenter> FrontEnd::centers(const MotionImages& images, Domain domain) const {
  std::vector<MotionCenter> out;
  out.reserve(images.images.size());
  for (std::size_t i = 0; i < images.images.size(); ++i)
    out.push_back(center(images.images[i], domain, images.frameIndex[i]));
  return out;
}

std::string formatTemplates(const std::vector<RectSize>& sizes) {
  std::ostringstream os;
  for (std::size_t i = 0; i < sizes.size(); ++i)
    os << (i ? "," : "") << sizes[i].w << "x" << sizes[i].h;
  return os.str();
}

std::vector<RectSize> parseTemplates(const std::string& text) {
  std::vector<RectSize> out;
  std::istringstream is(text);
  std::string item;
  while (std::getline(is, item, ',')) {
    const auto x = item.find('x');
    if (x == std::string::npos) throw ConfigError("template size '" + item + "' is not WxH");
    try {
      out.push_back({std::stol(item.substr(0, x)), std::stol(item.substr(x + 1))});
    } catch (const std::exception&) {
      throw ConfigError("template size '" + item + "' is not WxH");
    }
  }
  if (out.empty()) throw ConfigError("empty template size list");
  return out;
}

}  // namespace cdg
