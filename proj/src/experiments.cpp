#include "cdg/experiments.hpp"

#include <cstdio>
#include <ostream>

#include "cdg/energy.hpp"
#include "cdg/version.hpp"

namespace cdg {
namespace {

std::size_t classIndexOf(const std::vector<std::string>& classes, const std::string& label) {
  for (std::size_t i = 0; i < classes.size(); ++i)
    if (classes[i] == label) return i;
  throw ConfigError("unknown class label '" + label + "'");
}

PipelineConfig withMeasurements(PipelineConfig p, Index m) {
  p.measurements = m;
  return p;
}

energy::ArrayConfig arrayOf(const ExperimentConfig& cfg) {
  energy::ArrayConfig a;
  a.cellsParallel = cfg.energy.cellsParallel;
  a.params = cfg.energy.pv;
  return a;
}

}  // namespace

std::string formatFixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

PreparedSet prepareClips(const std::vector<ClipSpec>& specs, const SynthConfig& synth,
                         const FrontEnd& frontEnd, const std::vector<std::string>& classes) {
  PreparedSet out;
  out.reserve(specs.size());
  for (const auto& spec : specs) {
    const RenderedClip clip = render(spec, synth);
    PreparedClip p;
    p.label = spec.label;
    p.classIndex = classIndexOf(classes, spec.label);
    p.images = frontEnd.motionImages(clip.frames);
    p.reference = frontEnd.centers(p.images, Domain::Uncompressed);
    out.push_back(std::move(p));
  }
  return out;
}

GestureModel trainModel(const ExperimentConfig& cfg, const PreparedSet& train, const FrontEnd& frontEnd,
                        Domain domain) {
  GestureModel model;
  model.pipeline = cfg.pipeline;
  model.match = cfg.match;
  model.configHash = cfg.hash();
  for (const auto& label : cfg.dataset.classes) model.classes.push_back({label, {}});
  for (const auto& clip : train) {
    MotionTrace trace(static_cast<std::size_t>(cfg.pipeline.bufferLength));
    const auto centers =
        domain == Domain::Uncompressed ? clip.reference : frontEnd.centers(clip.images, domain);
    for (const auto& c : centers) trace.push({c.x, c.y});
    if (!trace.empty()) model.classes[clip.classIndex].trainingTraces.push_back(trace.points());
  }
  for (const auto& cls : model.classes)
    if (cls.trainingTraces.empty())
      throw ConfigError("training produced no motion for class '" + cls.label + "'");
  model.tau = cfg.tau ? *cfg.tau : calibrateTau(model.classes, cfg.tauPercentile, cfg.match);
  return model;
}

GestureModel trainModel(const ExperimentConfig& cfg) {
  cfg.validate();
  const FrontEnd reference(cfg.pipeline, false);
  const auto specs = makeDataset(cfg.dataset.classes, cfg.dataset.trainPerClass, cfg.synth(),
                                 cfg.dataset.seed, Split::Train);
  return trainModel(cfg, prepareClips(specs, cfg.synth(), reference, cfg.dataset.classes), reference);
}

double AccuracyReport::mean() const {
  Index correct = 0, total = 0;
  for (const auto& c : classes) {
    correct += c.correct;
    total += c.total;
  }
  return total ? static_cast<double>(correct) / static_cast<double>(total) : 0.0;
}

const ClassAccuracy& AccuracyReport::of(const std::string& label) const {
  for (const auto& c : classes)
    if (c.label == label) return c;
  throw ConfigError("no accuracy entry for class '" + label + "'");
}

AccuracyReport evaluate(const GestureModel& model, const FrontEnd& frontEnd, const PreparedSet& test,
                        Domain domain) {
  AccuracyReport report;
  for (const auto& cls : model.classes) report.classes.push_back({cls.label, 0, 0});
  for (const auto& clip : test) {
    MotionTrace buffer(static_cast<std::size_t>(model.pipeline.bufferLength));
    const auto centers = domain == Domain::Uncompressed ? clip.reference : frontEnd.centers(clip.images, domain);
    for (const auto& c : centers) buffer.push({c.x, c.y});
    Verdict v = model.classify(buffer.points());
    auto& entry = report.classes.at(clip.classIndex);
    ++entry.total;
    if (v.label && *v.label == clip.label) ++entry.correct;
    report.verdicts.push_back(std::move(v));
  }
  return report;
}

double meanCenterError(const FrontEnd& frontEnd, const PreparedSet& clips) {
  double total = 0.0;
  std::size_t count = 0;
  for (const auto& clip : clips) {
    const auto compressed = frontEnd.centers(clip.images, Domain::Compressed);
    total += centerError(compressed, clip.reference) * static_cast<double>(compressed.size());
    count += compressed.size();
  }
  return count ? total / static_cast<double>(count) : 0.0;
}

void writeCsv(std::ostream& out, const CsvTable& table, const std::string& configHash) {
  out << "# config_hash=" << configHash << '\n';
  for (std::size_t i = 0; i < table.header.size(); ++i) out << (i ? "," : "") << table.header[i];
  out << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
    out << '\n';
  }
}

Experiment::Experiment(ExperimentConfig cfg, GestureModel model)
    : cfg_(std::move(cfg)), model_(std::move(model)) {
  cfg_.validate();
  reference_ = std::make_unique<FrontEnd>(withMeasurements(model_.pipeline, model_.pipeline.measurements), false);
}

const PreparedSet& Experiment::testSet(double fps) {
  auto it = tests_.find(fps);
  if (it != tests_.end()) return it->second;
  SynthConfig synth = cfg_.synth();
  synth.fps = fps;
  const auto specs = makeDataset(cfg_.dataset.classes, cfg_.dataset.testPerClass, synth,
                                 cfg_.dataset.seed, Split::Test);
  return tests_.emplace(fps, prepareClips(specs, synth, *reference_, cfg_.dataset.classes)).first->second;
}

FrontEnd Experiment::frontEnd(Index measurements) const {
  return FrontEnd(withMeasurements(model_.pipeline, measurements), true);
}

double Experiment::accuracyAtFps(int fps) {
  auto it = fpsAccuracy_.find(fps);
  if (it != fpsAccuracy_.end()) return it->second;
  const FrontEnd fe = frontEnd(model_.pipeline.measurements);
  const double acc = evaluate(model_, fe, testSet(fps)).mean();
  fpsAccuracy_[fps] = acc;
  return acc;
}

CsvTable Experiment::runMSweep() {
  CsvTable t{{"M", "meanCenterError", "accuracy", "EframeModel"}, {}};
  const auto& test = testSet(cfg_.dataset.synth.fps);
  for (Index m : cfg_.sweep.m) {
    if (m < 1 || m > model_.pipeline.n()) throw ConfigError("sweep-m: M outside [1, N]");
    const FrontEnd fe = frontEnd(m);
    const double err = meanCenterError(fe, test);
    const double acc = evaluate(model_, fe, test).mean();
    t.rows.push_back({std::to_string(m), formatFixed(err, 6), formatFixed(acc, 6),
                      formatFixed(cfg_.energy.load.energyPerFrame(m), 6)});
  }
  return t;
}

CsvTable Experiment::runFpsSweep() {
  CsvTable t{{"fps", "accuracy", "avgPower"}, {}};
  const double eframe = cfg_.energy.load.energyPerFrame(model_.pipeline.measurements);
  for (int fps : cfg_.sweep.fps) {
    if (fps < 1 || fps > 10) throw ConfigError("sweep-fps: fps outside [1, 10]");
    t.rows.push_back({std::to_string(fps), formatFixed(accuracyAtFps(fps), 6), formatFixed(fps * eframe, 6)});
  }
  return t;
}

CsvTable Experiment::runIrradianceSweep() {
  CsvTable t{{"G", "sustainableFps", "avgPower", "accuracyAtThatFps"}, {}};
  const auto array = arrayOf(cfg_);
  const long m = static_cast<long>(model_.pipeline.measurements);
  const double eframe = cfg_.energy.load.energyPerFrame(m);
  for (double g : cfg_.sweep.irradiance) {
    const int fps = energy::sustainableFps(array, cfg_.energy.load, m, g, cfg_.energy.harvester);
    t.rows.push_back({formatFixed(g, 1), std::to_string(fps), formatFixed(fps * eframe, 6),
                      fps > 0 ? formatFixed(accuracyAtFps(fps), 6) : std::string("NONE")});
  }
  return t;
}

CsvTable Experiment::runAccuracyTable() {
  CsvTable t{{"class", "correct", "total", "accuracy"}, {}};
  const FrontEnd fe = frontEnd(model_.pipeline.measurements);
  const AccuracyReport r = evaluate(model_, fe, testSet(cfg_.dataset.synth.fps));
  Index correct = 0, total = 0;
  for (const auto& c : r.classes) {
    t.rows.push_back({c.label, std::to_string(c.correct), std::to_string(c.total), formatFixed(c.accuracy(), 6)});
    correct += c.correct;
    total += c.total;
  }
  t.rows.push_back({"mean", std::to_string(correct), std::to_string(total), formatFixed(r.mean(), 6)});
  return t;
}

void writeManifest(std::ostream& out, const ExperimentConfig& cfg, const std::string& command) {
  out << "cdgesture run manifest\n";
  out << "version " << kVersion << '\n';
  out << "command " << command << '\n';
  out << "config_hash " << cfg.hash() << '\n';
  out << "phi_seed " << cfg.pipeline.seed << '\n';
  out << "dataset_seed " << cfg.dataset.seed << '\n';
  out << "rng mt19937_64\n";
  out << "[config]\n" << cfg.canonical();
}

}  // namespace cdg
