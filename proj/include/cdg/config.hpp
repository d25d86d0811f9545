#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cdg/energy.hpp"
#include "cdg/pipeline.hpp"
#include "cdg/recognizer.hpp"
#include "cdg/synth.hpp"

namespace cdg {

struct DatasetConfig {
  std::vector<std::string> classes{"X", "+", "Z"};
  Index trainPerClass = 40;
  Index testPerClass = 20;
  std::uint64_t seed = 1464353;
  SynthConfig synth = defaultSynth();

  // Performers are least consistent with "Z" and most with "+".
  static SynthConfig defaultSynth() {
    SynthConfig s;
    s.classJitter = {{"+", 0.04}, {"X", 0.07}, {"Z", 0.17}};
    return s;
  }
};

struct EnergyConfig {
  std::string scenario;  // CSV of t,G rows; empty means none
  energy::HarvesterParams harvester;
  energy::GovernorParams governor;
  energy::LoadModel load;
  energy::PVCellParams pv = energy::PVCellParams::calibrated();
  int cellsParallel = 6;
  double initialVStore = 4.5;
  bool useGovernor = true;
  double dt = 0.01;
  double recordEvery = 0.1;
};

struct SweepConfig {
  std::vector<Index> m{50, 100, 150, 200, 250, 300, 400, 600};
  std::vector<int> fps{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  std::vector<double> irradiance{100, 200, 300, 400, 500, 600, 700, 800, 900, 1000};
};

/// Every tunable of an experiment run. Serialized as `key = value` lines; the
/// canonical form (all keys, sorted) is what the config hash covers.
struct ExperimentConfig {
  PipelineConfig pipeline;
  std::optional<double> tau;  // nullopt: calibrate from training traces
  double tauPercentile = 0.95;
  MatchOptions match;
  DatasetConfig dataset;
  EnergyConfig energy;
  SweepConfig sweep;
  std::string outputDir = "out";

  /// Applies one `key = value` assignment. Throws ConfigError on unknown keys
  /// or unparsable values.
  void set(const std::string& key, const std::string& value);
  std::string get(const std::string& key) const;
  static std::vector<std::string> keys();

  static ExperimentConfig parse(std::istream& in);
  static ExperimentConfig load(const std::filesystem::path& path);

  std::string canonical() const;
  std::string hash() const;  // 16 hex digits

  // Synthetic-video settings with the frame geometry taken from the pipeline.
  SynthConfig synth() const {
    SynthConfig s = dataset.synth;
    s.width = pipeline.width;
    s.height = pipeline.height;
    s.block = pipeline.block;
    return s;
  }

  // Cross-field checks; throws ConfigError.
  void validate() const;
};

}  // namespace cdg
