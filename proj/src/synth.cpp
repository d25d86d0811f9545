#include "cdg/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <random>

#include <Eigen/Geometry>

#include "cdg/errors.hpp"
#include "cdg/hash.hpp"

namespace cdg {
namespace {

// Uniform double in [0, 1) from the top 53 bits of one draw.
double uniform01(std::mt19937_64& gen) { return static_cast<double>(gen() >> 11) * 0x1.0p-53; }

double uniform(std::mt19937_64& gen, double lo, double hi) { return lo + (hi - lo) * uniform01(gen); }

// Box-Muller; used for the handful of per-clip perturbations.
double gaussian(std::mt19937_64& gen) {
  const double u1 = 1.0 - uniform01(gen);
  const double u2 = uniform01(gen);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

// Standard normal quantiles at the midpoints of 4096 equal-probability bins.
// Pixel noise draws 12 bits per sample, five samples per 64-bit draw.
class NoiseTable {
 public:
  static const NoiseTable& instance() {
    static const NoiseTable table;
    return table;
  }
  float operator[](std::uint64_t i) const { return q_[i]; }

 private:
  NoiseTable() {
    for (std::size_t i = 0; i < q_.size(); ++i) {
      const double p = (static_cast<double>(i) + 0.5) / static_cast<double>(q_.size());
      // Phi(x) = erfc(-x / sqrt 2) / 2 is increasing; bisect for Phi(x) = p.
      double lo = -10.0, hi = 10.0;
      for (int it = 0; it < 80; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (0.5 * std::erfc(-mid / std::sqrt(2.0)) < p) lo = mid;
        else hi = mid;
      }
      q_[i] = static_cast<float>(0.5 * (lo + hi));
    }
  }
  std::array<float, 4096> q_{};
};

// Linear edge ramp of a centred box: 1 well inside, 0 well outside.
float edgeProfile(double offset, double half, double soft) {
  if (soft <= 0.0) return std::abs(offset) <= half ? 1.0f : 0.0f;
  const double v = (half - std::abs(offset)) / soft + 0.5;
  return static_cast<float>(std::clamp(v, 0.0, 1.0));
}

struct Texture {
  Index cells = 0;
  double cell = 1.0;
  std::vector<float> values;  // cells x cells, row-major

  // Texture cell index for a blob-local coordinate (origin at the blob centre).
  Index cellIndex(double local) const {
    const double half = 0.5 * static_cast<double>(cells) * cell;
    return std::clamp<Index>(static_cast<Index>(std::floor((local + half) / cell)), 0, cells - 1);
  }
};

struct Distractor {
  Eigen::Vector2d center;  // pixels
  double size = 0.0;
  double intensity = 0.0;
};

Frame drawFrame(const SynthConfig& cfg, const GestureScript& script, const Eigen::Vector2d& centerPx,
                const Texture& texture, float brightness, const std::optional<Distractor>& distractor,
                std::mt19937_64& gen) {
  const Index w = cfg.width, h = cfg.height;
  const double half = 0.5 * script.blobSize;
  const double soft = cfg.edgeSoftness;
  const bool textured = !texture.values.empty();
  std::vector<float> mx(static_cast<std::size_t>(w)), my(static_cast<std::size_t>(h));
  std::vector<Index> tx(static_cast<std::size_t>(w), 0), ty(static_cast<std::size_t>(h), 0);
  for (Index x = 0; x < w; ++x) {
    const double lx = static_cast<double>(x) + 0.5 - centerPx.x();
    mx[x] = edgeProfile(lx, half, soft);
    if (textured) tx[x] = texture.cellIndex(lx);
  }
  for (Index y = 0; y < h; ++y) {
    const double ly = static_cast<double>(y) + 0.5 - centerPx.y();
    my[y] = edgeProfile(ly, half, soft);
    if (textured) ty[y] = texture.cellIndex(ly) * texture.cells;
  }

  const NoiseTable& noise = NoiseTable::instance();
  const float sigma = static_cast<float>(cfg.noiseSigma);
  const float bg = static_cast<float>(cfg.background) + brightness;
  std::vector<float> dx, dy;
  if (distractor) {
    dx.resize(static_cast<std::size_t>(w));
    dy.resize(static_cast<std::size_t>(h));
    for (Index x = 0; x < w; ++x)
      dx[x] = edgeProfile(static_cast<double>(x) + 0.5 - distractor->center.x(), 0.5 * distractor->size, soft);
    for (Index y = 0; y < h; ++y)
      dy[y] = edgeProfile(static_cast<double>(y) + 0.5 - distractor->center.y(), 0.5 * distractor->size, soft);
  }
  const float distractorLevel = distractor ? static_cast<float>(distractor->intensity) : 0.0f;
  const float level = static_cast<float>(script.intensity);
  std::uint64_t bits = 0;
  int left = 0;

  Frame f(w, h);
  std::uint8_t* out = f.pixels.data();
  for (Index y = 0; y < h; ++y) {
    for (Index x = 0; x < w; ++x) {
      float v = bg;
      const float m = mx[x] * my[y];
      if (m > 0.0f) v += m * (level + (textured ? texture.values[ty[y] + tx[x]] : 0.0f));
      if (distractor) v += distractorLevel * dx[x] * dy[y];
      if (sigma > 0.0f) {
        if (left == 0) {
          bits = gen();
          left = 5;
        }
        v += sigma * noise[bits & 0xfffu];
        bits >>= 12;
        --left;
      }
      // Round half up; v is clamped non-negative first.
      *out++ = static_cast<std::uint8_t>(std::clamp(v, 0.0f, 255.0f) + 0.5f);
    }
  }
  return f;
}

const std::vector<Eigen::Vector2d>& shapeOf(const std::string& label) {
  // Unit-box corners, y pointing down the image.
  static const std::vector<Eigen::Vector2d> z{{-1, -1}, {1, -1}, {-1, 1}, {1, 1}};
  static const std::vector<Eigen::Vector2d> x{{-1, -1}, {1, 1}, {1, -1}, {-1, 1}};
  static const std::vector<Eigen::Vector2d> plus{{-1, 0}, {1, 0}, {0, -1}, {0, 1}};
  if (label == "Z") return z;
  if (label == "X") return x;
  if (label == "+") return plus;
  throw ConfigError("no standard gesture script for label '" + label + "'");
}

// Frames per segment proportional to segment length in pixels.
std::vector<Index> timeSegments(const std::vector<Eigen::Vector2d>& wp, const SynthConfig& cfg,
                                double durationFactor) {
  std::vector<double> len;
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < wp.size(); ++i) {
    const Eigen::Vector2d d = (wp[i + 1] - wp[i]).cwiseProduct(
        Eigen::Vector2d(static_cast<double>(cfg.width), static_cast<double>(cfg.height)));
    len.push_back(d.norm());
    total += len.back();
  }
  const double frames = cfg.gestureSeconds * cfg.fps * durationFactor;
  std::vector<Index> out;
  for (double l : len)
    out.push_back(std::max<Index>(1, static_cast<Index>(std::lround(frames * l / std::max(total, 1e-12)))));
  return out;
}

constexpr double kBoxHalfX = 0.2;
constexpr double kBoxHalfY = 0.22;

}  // namespace

void SynthConfig::validate() const {
  if (width < 1 || height < 1 || block < 1) throw ConfigError("synth: invalid frame size");
  if (fps <= 0.0 || fps > 10.0) throw ConfigError("synth: fps must lie in (0, 10]");
  if (blobSize <= 0.0 || blobSize >= static_cast<double>(std::min(width, height)))
    throw ConfigError("synth: blob size must be positive and smaller than the frame");
  if (noiseSigma < 0.0 || jitterSigma < 0.0 || placementRange < 0.0 || speedVariation < 0.0 ||
      speedVariation >= 1.0 || scaleVariation < 0.0 || scaleVariation >= 1.0)
    throw ConfigError("synth: variation parameters out of range");
  if (textureCell <= 0.0) throw ConfigError("synth: texture cell must be positive");
  for (const auto& [label, j] : classJitter)
    if (j < 0.0) throw ConfigError("synth: jitter for '" + label + "' must be non-negative");
  if (rotationSigma < 0.0 || shearSigma < 0.0 || flickerSigma < 0.0 || distractorRate < 0.0 || distractorRate > 1.0 || distractorSize <= 0.0)
    throw ConfigError("synth: nuisance parameters out of range");
}

GestureScript standardScript(const std::string& label, const SynthConfig& cfg) {
  GestureScript s;
  s.label = label;
  for (const auto& c : shapeOf(label))
    s.waypoints.emplace_back(0.5 + kBoxHalfX * c.x(), 0.5 + kBoxHalfY * c.y());
  s.framesPerSegment = timeSegments(s.waypoints, cfg, 1.0);
  s.blobSize = cfg.blobSize;
  s.intensity = cfg.intensity;
  return s;
}

RenderedClip renderGesture(const GestureScript& script, const SynthConfig& cfg, std::uint64_t seed,
                           Index leadIn) {
  cfg.validate();
  if (script.waypoints.size() < 2) throw ConfigError("renderGesture: need at least two waypoints");
  if (script.framesPerSegment.size() + 1 != script.waypoints.size())
    throw ConfigError("renderGesture: one frame count per segment is required");

  std::mt19937_64 gen(seed);
  std::vector<Eigen::Vector2d> wp = script.waypoints;
  if (const double jitter = cfg.jitterFor(script.label); jitter > 0.0)
    for (auto& p : wp) p += jitter * Eigen::Vector2d(gaussian(gen), gaussian(gen));
  if (cfg.rotationSigma > 0.0 || cfg.shearSigma > 0.0) {
    // Whole-gesture tilt and slant about the waypoint centroid, in pixel space.
    const double angle = cfg.rotationSigma > 0.0 ? cfg.rotationSigma * std::numbers::pi / 180.0 * gaussian(gen) : 0.0;
    const double shear = cfg.shearSigma > 0.0 ? cfg.shearSigma * gaussian(gen) : 0.0;
    Eigen::Matrix2d a = Eigen::Rotation2Dd(angle).toRotationMatrix() * Eigen::Matrix2d{{1.0, shear}, {0.0, 1.0}};
    const Eigen::Vector2d px(static_cast<double>(cfg.width), static_cast<double>(cfg.height));
    Eigen::Vector2d c = Eigen::Vector2d::Zero();
    for (const auto& p : wp) c += p;
    c /= static_cast<double>(wp.size());
    for (auto& p : wp) p = c + (a * (p - c).cwiseProduct(px)).cwiseQuotient(px);
  }

  Texture texture;
  if (cfg.textureAmplitude > 0.0) {
    texture.cell = cfg.textureCell;
    texture.cells = static_cast<Index>(std::ceil(script.blobSize / cfg.textureCell)) + 2;
    texture.values.resize(static_cast<std::size_t>(texture.cells * texture.cells));
    for (auto& v : texture.values)
      v = static_cast<float>(uniform(gen, -cfg.textureAmplitude, cfg.textureAmplitude));
  }

  const Eigen::Vector2d scale(static_cast<double>(cfg.width), static_cast<double>(cfg.height));
  std::vector<Eigen::Vector2d> path;  // pixel centres, one per frame
  for (Index i = 0; i < leadIn; ++i) path.push_back(wp.front().cwiseProduct(scale));
  path.push_back(wp.front().cwiseProduct(scale));
  for (std::size_t s = 0; s + 1 < wp.size(); ++s) {
    const Index n = std::max<Index>(1, script.framesPerSegment[s]);
    for (Index k = 1; k <= n; ++k) {
      const double t = static_cast<double>(k) / static_cast<double>(n);
      path.push_back(((1.0 - t) * wp[s] + t * wp[s + 1]).cwiseProduct(scale));
    }
  }
  for (Index i = 0; i < cfg.tailFrames; ++i) path.push_back(wp.back().cwiseProduct(scale));

  // A distractor crosses the frame on a straight line during part of the clip.
  const Index frames = static_cast<Index>(path.size());
  bool hasDistractor = false;
  Eigen::Vector2d from = Eigen::Vector2d::Zero(), to = Eigen::Vector2d::Zero();
  Index first = 0, last = -1;
  if (cfg.distractorRate > 0.0 && uniform01(gen) < cfg.distractorRate) {
    hasDistractor = true;
    const double dw = static_cast<double>(cfg.width), dh = static_cast<double>(cfg.height);
    from = {uniform(gen, 0.0, dw), uniform(gen, 0.0, dh)};
    to = {uniform(gen, 0.0, dw), uniform(gen, 0.0, dh)};
    const Index span = std::max<Index>(2, frames / 3);
    first = static_cast<Index>(gen() % static_cast<std::uint64_t>(std::max<Index>(1, frames - span)));
    last = first + span;
  }

  RenderedClip clip;
  clip.label = script.label;
  clip.fps = cfg.fps;
  clip.frames.reserve(path.size());
  for (Index i = 0; i < frames; ++i) {
    const float brightness =
        cfg.flickerSigma > 0.0 ? static_cast<float>(cfg.flickerSigma * gaussian(gen)) : 0.0f;
    std::optional<Distractor> d;
    if (hasDistractor && i >= first && i <= last) {
      const double t = static_cast<double>(i - first) / static_cast<double>(last - first);
      d = Distractor{(1.0 - t) * from + t * to, cfg.distractorSize, cfg.distractorIntensity};
    }
    clip.frames.push_back(drawFrame(cfg, script, path[i], texture, brightness, d, gen));
    clip.groundTruth.push_back(path[i] / static_cast<double>(cfg.block));
  }
  return clip;
}

std::vector<Eigen::Vector2d> groundTruthMotionPath(const RenderedClip& clip,
                                                   const std::vector<Index>& pairIndices) {
  std::vector<Eigen::Vector2d> out;
  out.reserve(pairIndices.size());
  for (Index i : pairIndices) {
    if (i < 0 || i + 1 >= static_cast<Index>(clip.groundTruth.size()))
      throw StructuralError("groundTruthMotionPath: frame index out of range");
    out.push_back(0.5 * (clip.groundTruth[i] + clip.groundTruth[i + 1]));
  }
  return out;
}

std::uint64_t mixSeed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a + 0x9e3779b97f4a7c15ull * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

std::vector<ClipSpec> makeDataset(const std::vector<std::string>& classes, Index perClass,
                                  const SynthConfig& cfg, std::uint64_t seed, Split split) {
  if (perClass < 1) throw ConfigError("makeDataset: perClass must be >= 1");
  cfg.validate();
  const std::uint64_t splitSeed = mixSeed(seed, split == Split::Train ? 0x7261696eull : 0x74657374ull);
  std::vector<ClipSpec> out;
  for (std::size_t c = 0; c < classes.size(); ++c) {
    const GestureScript base = standardScript(classes[c], cfg);
    for (Index i = 0; i < perClass; ++i) {
      ClipSpec spec;
      spec.label = classes[c];
      spec.split = split;
      spec.index = i;
      const std::uint64_t clipSeed = mixSeed(mixSeed(splitSeed, c), static_cast<std::uint64_t>(i));
      std::mt19937_64 gen(clipSeed);
      const Eigen::Vector2d offset(uniform(gen, -cfg.placementRange, cfg.placementRange),
                                   uniform(gen, -cfg.placementRange, cfg.placementRange));
      const double size = uniform(gen, 1.0 - cfg.scaleVariation, 1.0 + cfg.scaleVariation);
      const double duration = uniform(gen, 1.0 - cfg.speedVariation, 1.0 + cfg.speedVariation);
      spec.leadIn = static_cast<Index>(gen() % static_cast<std::uint64_t>(cfg.leadInFrames + 1));
      spec.seed = gen();
      spec.script = base;
      const Eigen::Vector2d mid(0.5, 0.5);
      for (auto& p : spec.script.waypoints) p = mid + offset + size * (p - mid);
      spec.script.framesPerSegment = timeSegments(spec.script.waypoints, cfg, duration);
      out.push_back(std::move(spec));
    }
  }
  return out;
}

RenderedClip render(const ClipSpec& spec, const SynthConfig& cfg) {
  return renderGesture(spec.script, cfg, spec.seed, spec.leadIn);
}

std::uint64_t contentHash(const RenderedClip& clip) {
  Fnv1a h;
  h.update(clip.label);
  for (const auto& f : clip.frames) {
    const std::int64_t dims[2] = {f.width(), f.height()};
    h.update(dims, sizeof dims);
    h.update(f.pixels.data(), static_cast<std::size_t>(f.pixels.size()));
  }
  for (const auto& g : clip.groundTruth) h.update(g.data(), 2 * sizeof(double));
  return h.digest();
}

}  // namespace cdg
