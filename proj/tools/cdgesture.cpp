// Command-line front end: synthetic data, training, classification, the
// accuracy/energy sweeps, and the harvester simulation.
//
// Exit codes: 0 success, 2 configuration or usage error, 3 numerical failure.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "cdg/config.hpp"
#include "cdg/energy.hpp"
#include "cdg/errors.hpp"
#include "cdg/experiments.hpp"
#include "cdg/hash.hpp"
#include "cdg/recognizer.hpp"
#include "cdg/synth.hpp"

namespace fs = std::filesystem;
using namespace cdg;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

struct CommonOptions {
  std::string configPath;
  std::vector<std::string> overrides;
  std::string outDir;
};

ExperimentConfig loadConfig(const CommonOptions& o) {
  ExperimentConfig cfg = o.configPath.empty() ? ExperimentConfig{} : ExperimentConfig::load(o.configPath);
  for (const auto& kv : o.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (!o.outDir.empty()) cfg.outputDir = o.outDir;
  cfg.validate();
  return cfg;
}

// Writes through a temporary file so readers never see a partial output.
template <typename Fn>
void writeAtomically(const fs::path& path, Fn&& body) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + tmp.string());
    body(out);
  }
  fs::rename(tmp, path);
}

std::string fileLabel(const std::string& label) {
  std::string s;
  for (char c : label) {
    if (std::isalnum(static_cast<unsigned char>(c))) s += c;
    else if (c == '+') s += "plus";
    else s += '_';
  }
  return s;
}

void writeManifestFile(const ExperimentConfig& cfg, const std::string& command) {
  writeAtomically(fs::path(cfg.outputDir) / ("run_manifest_" + command + ".txt"),
                  [&](std::ostream& out) { writeManifest(out, cfg, command); });
}

int cmdSynth(const CommonOptions& o, const std::string& split, Index perClass) {
  const ExperimentConfig cfg = loadConfig(o);
  const Split s = split == "train" ? Split::Train : Split::Test;
  const Index n = perClass > 0 ? perClass : (s == Split::Train ? cfg.dataset.trainPerClass : cfg.dataset.testPerClass);
  const auto specs = makeDataset(cfg.dataset.classes, n, cfg.synth(), cfg.dataset.seed, s);
  const fs::path dir = fs::path(cfg.outputDir) / "clips";
  fs::create_directories(dir);
  std::ostringstream manifest;
  manifest << "# config_hash=" << cfg.hash() << "\nclip,label,split,index,seed,frames,content_hash\n";
  for (const auto& spec : specs) {
    const RenderedClip clip = render(spec, cfg.synth());
    const std::string stem = fileLabel(spec.label) + "_" + split + "_" + std::to_string(spec.index);
    writeClip(dir / stem, clip.frames, clip.fps);
    writeAtomically(dir / (stem + "_gt.csv"), [&](std::ostream& out) {
      out << "frameIndex,x,y\n";
      for (std::size_t i = 0; i < clip.groundTruth.size(); ++i)
        out << i << ',' << formatFixed(clip.groundTruth[i].x(), 6) << ',' << formatFixed(clip.groundTruth[i].y(), 6) << '\n';
    });
    manifest << "clips/" << stem << ',' << spec.label << ',' << split << ',' << spec.index << ',' << spec.seed
             << ',' << clip.frames.size() << ',' << hexDigest(contentHash(clip)) << '\n';
  }
  writeAtomically(fs::path(cfg.outputDir) / ("dataset_" + split + ".csv"),
                  [&](std::ostream& out) { out << manifest.str(); });
  writeManifestFile(cfg, "synth");
  std::cout << "wrote " << specs.size() << " clips to " << dir.string() << '\n';
  return 0;
}

// Trains from a dataset manifest written by `synth`.
GestureModel trainFromManifest(const ExperimentConfig& cfg, const fs::path& manifestPath) {
  std::ifstream in(manifestPath);
  if (!in) throw ConfigError("cannot open clip manifest " + manifestPath.string());
  const FrontEnd reference(cfg.pipeline, false);
  PreparedSet train;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || line.rfind("clip,", 0) == 0) continue;
    std::istringstream ls(line);
    std::string stem, label;
    std::getline(ls, stem, ',');
    std::getline(ls, label, ',');
    const Clip clip = readClip(manifestPath.parent_path() / stem);
    PreparedClip p;
    p.label = label;
    auto it = std::find(cfg.dataset.classes.begin(), cfg.dataset.classes.end(), label);
    if (it == cfg.dataset.classes.end()) throw ConfigError("manifest label '" + label + "' not in dataset.classes");
    p.classIndex = static_cast<std::size_t>(it - cfg.dataset.classes.begin());
    p.images = reference.motionImages(clip.frames);
    p.reference = reference.centers(p.images, Domain::Uncompressed);
    train.push_back(std::move(p));
  }
  return trainModel(cfg, train, reference);
}

int cmdTrain(const CommonOptions& o, const std::string& clips, const std::string& modelPath) {
  const ExperimentConfig cfg = loadConfig(o);
  const GestureModel model = clips.empty() ? trainModel(cfg) : trainFromManifest(cfg, clips);
  const fs::path path = modelPath.empty() ? fs::path(cfg.outputDir) / "model.txt" : fs::path(modelPath);
  writeAtomically(path, [&](std::ostream& out) { saveModel(out, model); });
  writeManifestFile(cfg, "train");
  std::size_t traces = 0;
  for (const auto& c : model.classes) traces += c.trainingTraces.size();
  std::cout << "trained " << model.classes.size() << " classes, " << traces << " traces, tau="
            << model.tau << " -> " << path.string() << '\n';
  return 0;
}

int cmdClassify(const std::string& modelPath, const std::string& clipPath, const std::string& centersOut) {
  if (modelPath.empty()) throw ConfigError("classify requires --model");
  const GestureModel model = loadModel(fs::path(modelPath));
  const Clip clip = readClip(clipPath);
  const FrontEnd fe(model.pipeline, true);
  const auto centers = fe.centers(clip.frames, Domain::Compressed);
  MotionTrace buffer(static_cast<std::size_t>(model.pipeline.bufferLength));
  for (const auto& c : centers) buffer.push({c.x, c.y});
  const Verdict v = model.classify(buffer.points());
  if (!centersOut.empty())
    writeAtomically(centersOut, [&](std::ostream& out) { writeCentersCsv(out, centers); });
  std::cout << "label=" << (v.label ? *v.label : std::string("NONE")) << " distance=" << v.distance
            << " runner_up=" << v.runnerUp << " centers=" << centers.size() << '\n';
  return 0;
}

GestureModel modelFor(const ExperimentConfig& cfg, const std::string& modelPath, bool required) {
  if (!modelPath.empty()) {
    GestureModel m = loadModel(fs::path(modelPath));
    return m;
  }
  if (required) throw ConfigError("this command requires a trained model (--model)");
  return trainModel(cfg);
}

int cmdSweep(const CommonOptions& o, const std::string& which, const std::string& modelPath) {
  const ExperimentConfig cfg = loadConfig(o);
  Experiment exp(cfg, modelFor(cfg, modelPath, which == "table"));
  CsvTable table;
  std::string name;
  if (which == "sweep-m") { table = exp.runMSweep(); name = "sweep_m.csv"; }
  else if (which == "sweep-fps") { table = exp.runFpsSweep(); name = "sweep_fps.csv"; }
  else if (which == "sweep-irradiance") { table = exp.runIrradianceSweep(); name = "sweep_irradiance.csv"; }
  else { table = exp.runAccuracyTable(); name = "accuracy_table.csv"; }
  const fs::path path = fs::path(cfg.outputDir) / name;
  writeAtomically(path, [&](std::ostream& out) { writeCsv(out, table, cfg.hash()); });
  writeManifestFile(cfg, which);
  writeCsv(std::cout, table, cfg.hash());
  return 0;
}

int cmdHarvest(const CommonOptions& o, std::string scenarioPath) {
  const ExperimentConfig cfg = loadConfig(o);
  if (scenarioPath.empty()) scenarioPath = cfg.energy.scenario;
  if (scenarioPath.empty()) throw ConfigError("harvest-sim requires --scenario or energy.scenario");
  const auto scenario = energy::IrradianceScenario::readCsv(fs::path(scenarioPath));
  energy::ArrayConfig array;
  array.cellsParallel = cfg.energy.cellsParallel;
  array.params = cfg.energy.pv;
  energy::SimulationOptions opts;
  opts.dt = cfg.energy.dt;
  opts.measurements = static_cast<long>(cfg.pipeline.measurements);
  opts.useGovernor = cfg.energy.useGovernor;
  opts.recordEvery = cfg.energy.recordEvery;
  energy::HarvesterState initial;
  initial.vStore = cfg.energy.initialVStore;
  const int startFps = static_cast<int>(cfg.energy.load.fps);
  const auto result = energy::simulate(scenario, cfg.energy.harvester, array, cfg.energy.load,
                                       energy::FpsGovernor(cfg.energy.governor, startFps), opts, initial);
  const fs::path path = fs::path(cfg.outputDir) / "telemetry.csv";
  writeAtomically(path, [&](std::ostream& out) {
    out << "# config_hash=" << cfg.hash() << '\n';
    energy::writeTelemetryCsv(out, result.telemetry);
  });
  writeManifestFile(cfg, "harvest-sim");
  const auto& f = result.final;
  std::cout << "simulated " << f.time << " s: Vstore " << result.initial.vStore << " -> " << f.vStore
            << " V, harvested " << f.harvested << " J, delivered " << f.delivered << " J, spilled "
            << f.spilled << " J -> " << path.string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Compressed-domain gesture recognition with a solar harvesting model"};
  app.require_subcommand(1);
  CommonOptions common;
  auto addCommon = [&](CLI::App* sub) {
    sub->add_option("-c,--config", common.configPath, "Experiment config file (key = value lines)");
    sub->add_option("-s,--set", common.overrides, "Override one config field: key=value");
    sub->add_option("-o,--out", common.outDir, "Output directory (overrides output.dir)");
  };

  std::string split = "test", clips, modelPath, clipPath, centersOut, scenario;
  Index perClass = 0;

  auto* synth = app.add_subcommand("synth", "Render a synthetic gesture dataset to raw clip files");
  addCommon(synth);
  synth->add_option("--split", split, "train or test")->check(CLI::IsMember({"train", "test"}));
  synth->add_option("--per-class", perClass, "Clips per class (defaults to the config)");

  auto* train = app.add_subcommand("train", "Train a model from uncompressed motion centers");
  addCommon(train);
  train->add_option("--clips", clips, "Dataset manifest from `synth`; default renders in-process");
  train->add_option("--model", modelPath, "Model output path (default <out>/model.txt)");

  auto* classify = app.add_subcommand("classify", "Classify one raw clip in the compressed domain");
  classify->add_option("--model", modelPath, "Trained model file")->required();
  classify->add_option("--clip", clipPath, "Clip stem or .hdr path")->required();
  classify->add_option("--centers", centersOut, "Write extracted centers as CSV");

  std::vector<std::pair<std::string, CLI::App*>> sweeps;
  for (const char* name : {"sweep-m", "sweep-fps", "sweep-irradiance", "table"}) {
    auto* sub = app.add_subcommand(name, std::string(name) == "table" ? "Per-class accuracy at the configured M"
                                                                       : "Run an experiment sweep");
    addCommon(sub);
    sub->add_option("--model", modelPath, "Trained model file");
    sweeps.emplace_back(name, sub);
  }

  auto* harvest = app.add_subcommand("harvest-sim", "Simulate the harvester over an irradiance scenario");
  addCommon(harvest);
  harvest->add_option("--scenario", scenario, "CSV of t,G rows");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    if (synth->parsed()) return cmdSynth(common, split, perClass);
    if (train->parsed()) return cmdTrain(common, clips, modelPath);
    if (classify->parsed()) return cmdClassify(modelPath, clipPath, centersOut);
    if (harvest->parsed()) return cmdHarvest(common, scenario);
    for (const auto& [name, sub] : sweeps)
      if (sub->parsed()) return cmdSweep(common, name, modelPath);
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const StructuralError& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
