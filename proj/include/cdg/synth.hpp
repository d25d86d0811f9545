#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "cdg/imaging.hpp"

namespace cdg {

/// A gesture as a polyline the hand blob follows.
struct GestureScript {
  std::string label;
  std::vector<Eigen::Vector2d> waypoints;  // normalized [0,1]^2 image coordinates
  std::vector<Index> framesPerSegment;     // speed profile, one entry per segment
  double blobSize = 144.0;                 // pixels
  double intensity = 150.0;                // brightness above background
};

struct SynthConfig {
  Index width = 640;
  Index height = 480;
  Index block = 16;  // only used to report ground truth in grid cells
  double fps = 10.0;
  double gestureSeconds = 3.6;  // nominal stroke duration at speed factor 1
  Index leadInFrames = 4;       // upper bound on idle frames before the gesture
  Index tailFrames = 2;         // idle frames after the gesture

  double noiseSigma = 2.0;  // additive Gaussian pixel noise
  double background = 40.0;
  double jitterSigma = 0.015;     // per-waypoint perturbation, normalized units
  // Per-label override of jitterSigma: some gestures are performed less consistently.
  std::map<std::string, double> classJitter;
  double placementRange = 0.08;   // uniform gesture offset in [-range, range]
  double speedVariation = 0.25;   // duration factor uniform in [1-v, 1+v]
  double scaleVariation = 0.15;   // gesture size factor uniform in [1-v, 1+v]

  double blobSize = 144.0;
  double intensity = 150.0;
  double edgeSoftness = 8.0;      // width of the blob's linear edge ramp, pixels
  double textureAmplitude = 40.0; // +/- brightness of the blob's surface texture
  double textureCell = 20.0;      // texture cell size, pixels

  // Scene nuisances.
  double rotationSigma = 0.0;       // per-clip tilt of the whole gesture, degrees
  double shearSigma = 0.0;          // per-clip horizontal shear (slant)
  double flickerSigma = 10.0;       // per-frame global brightness offset, Gaussian
  double distractorRate = 0.0;      // probability a clip contains a passing distractor
  double distractorSize = 96.0;     // pixels
  double distractorIntensity = 90.0;

  double jitterFor(const std::string& label) const {
    const auto it = classJitter.find(label);
    return it == classJitter.end() ? jitterSigma : it->second;
  }

  // Throws ConfigError when the config cannot be rendered.
  void validate() const;
};

struct RenderedClip {
  std::string label;
  std::vector<Frame> frames;
  std::vector<Eigen::Vector2d> groundTruth;  // blob center per frame, grid cells
  double fps = 0.0;
};

/// Canonical "X", "+", "Z" scripts centred in the image, timed from cfg.
GestureScript standardScript(const std::string& label, const SynthConfig& cfg);

/// Deterministic for a fixed seed. Idle frames hold the blob at the first and
/// last waypoints; `leadIn` idle frames precede the motion.
RenderedClip renderGesture(const GestureScript& script, const SynthConfig& cfg, std::uint64_t seed,
                           Index leadIn = 0);

/// Ground-truth motion center of the pair (i, i+1): midpoint of the two blob
/// centers. One entry per requested frame index.
std::vector<Eigen::Vector2d> groundTruthMotionPath(const RenderedClip& clip,
                                                   const std::vector<Index>& pairIndices);

enum class Split { Train, Test };

/// One dataset entry; rendering is deferred so large sets stay cheap.
struct ClipSpec {
  std::string label;
  Split split = Split::Train;
  Index index = 0;  // position within its class
  std::uint64_t seed = 0;
  GestureScript script;  // placement, scale and speed already applied
  Index leadIn = 0;
};

std::vector<ClipSpec> makeDataset(const std::vector<std::string>& classes, Index perClass,
                                  const SynthConfig& cfg, std::uint64_t seed, Split split);

RenderedClip render(const ClipSpec& spec, const SynthConfig& cfg);

/// FNV-1a 64 over the frames' bytes and the ground truth.
std::uint64_t contentHash(const RenderedClip& clip);

/// SplitMix64 finalizer; derives independent stream seeds.
std::uint64_t mixSeed(std::uint64_t a, std::uint64_t b);

}  // namespace cdg
