#pragma once

#include <iosfwd>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "cdg/config.hpp"
#include "cdg/pipeline.hpp"
#include "cdg/recognizer.hpp"
#include "cdg/synth.hpp"

namespace cdg {

/// A rendered clip reduced to what the sweeps need: gated block images and
/// the uncompressed reference centers. Frames are dropped after preparation.
struct PreparedClip {
  std::string label;
  std::size_t classIndex = 0;
  MotionImages images;
  std::vector<MotionCenter> reference;
};

using PreparedSet = std::vector<PreparedClip>;

PreparedSet prepareClips(const std::vector<ClipSpec>& specs, const SynthConfig& synth,
                         const FrontEnd& frontEnd, const std::vector<std::string>& classes);

/// Builds a model from prepared training clips, extracting centers in
/// `domain` (the reference protocol trains uncompressed).
GestureModel trainModel(const ExperimentConfig& cfg, const PreparedSet& train, const FrontEnd& frontEnd,
                        Domain domain = Domain::Uncompressed);
GestureModel trainModel(const ExperimentConfig& cfg);

struct ClassAccuracy {
  std::string label;
  Index correct = 0;
  Index total = 0;
  double accuracy() const { return total ? static_cast<double>(correct) / static_cast<double>(total) : 0.0; }
};

struct AccuracyReport {
  std::vector<ClassAccuracy> classes;
  std::vector<Verdict> verdicts;  // one per clip, in test-set order
  double mean() const;            // correct over total
  const ClassAccuracy& of(const std::string& label) const;
};

/// Streams each clip's compressed-domain centers through a FIFO buffer of the
/// model's length and classifies the buffer once the clip ends.
AccuracyReport evaluate(const GestureModel& model, const FrontEnd& frontEnd, const PreparedSet& test,
                        Domain domain = Domain::Compressed);

/// Mean compressed-vs-uncompressed center distance over every gated frame.
double meanCenterError(const FrontEnd& frontEnd, const PreparedSet& clips);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

/// First line `# config_hash=<hex>`, then the header and rows.
void writeCsv(std::ostream& out, const CsvTable& table, const std::string& configHash);

/// Owns the trained model and caches prepared test sets per frame rate so
/// several sweeps can share one rendering pass.
class Experiment {
 public:
  Experiment(ExperimentConfig cfg, GestureModel model);

  const ExperimentConfig& config() const { return cfg_; }
  const GestureModel& model() const { return model_; }

  const PreparedSet& testSet(double fps);
  FrontEnd frontEnd(Index measurements) const;

  CsvTable runMSweep();
  CsvTable runFpsSweep();
  CsvTable runIrradianceSweep();
  CsvTable runAccuracyTable();

  // Accuracy at `fps` with the model's M; cached.
  double accuracyAtFps(int fps);

 private:
  ExperimentConfig cfg_;
  GestureModel model_;
  std::unique_ptr<FrontEnd> reference_;
  std::map<double, PreparedSet> tests_;
  std::map<int, double> fpsAccuracy_;
};

/// Text manifest: version, seeds, config hash, and the canonical config.
void writeManifest(std::ostream& out, const ExperimentConfig& cfg, const std::string& command);

std::string formatFixed(double v, int digits);

}  // namespace cdg
