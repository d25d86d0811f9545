#include "cdg/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "cdg/hash.hpp"

namespace cdg {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string fmt(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

template <typename T>
T parseNumber(const std::string& key, const std::string& text) {
  T v{};
  const auto t = trim(text);
  auto r = std::from_chars(t.data(), t.data() + t.size(), v);
  if (r.ec != std::errc() || r.ptr != t.data() + t.size() || std::isnan(static_cast<double>(v)))
    throw ConfigError("config: '" + key + "' expects a number, got '" + text + "'");
  return v;
}

bool parseBool(const std::string& key, const std::string& text) {
  const auto t = trim(text);
  if (t == "1" || t == "true" || t == "on" || t == "yes") return true;
  if (t == "0" || t == "false" || t == "off" || t == "no") return false;
  throw ConfigError("config: '" + key + "' expects a boolean, got '" + text + "'");
}

std::vector<std::string> splitList(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream is(text);
  std::string item;
  while (std::getline(is, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <typename T>
std::vector<T> parseList(const std::string& key, const std::string& text) {
  std::vector<T> out;
  for (const auto& item : splitList(text)) out.push_back(parseNumber<T>(key, item));
  return out;
}

template <typename T>
std::string joinList(const std::vector<T>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    if constexpr (std::is_floating_point_v<T>) s += fmt(v[i]);
    else if constexpr (std::is_same_v<T, std::string>) s += v[i];
    else s += std::to_string(v[i]);
  }
  return s;
}

struct Field {
  std::function<std::string(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, const std::string&, const std::string&)> set;
};

// Accessor helpers keep the registry below one line per key.
template <typename Get>
Field num(Get access) {
  return {[access](const ExperimentConfig& c) {
            const auto v = access(const_cast<ExperimentConfig&>(c));
            if constexpr (std::is_floating_point_v<std::remove_reference_t<decltype(v)>>) return fmt(v);
            else return std::to_string(v);
          },
          [access](ExperimentConfig& c, const std::string& k, const std::string& v) {
            auto& ref = access(c);
            ref = parseNumber<std::remove_reference_t<decltype(ref)>>(k, v);
          }};
}

template <typename Get>
Field flag(Get access) {
  return {[access](const ExperimentConfig& c) {
            return std::string(access(const_cast<ExperimentConfig&>(c)) ? "true" : "false");
          },
          [access](ExperimentConfig& c, const std::string& k, const std::string& v) {
            access(c) = parseBool(k, v);
          }};
}

const std::map<std::string, Field>& registry() {
  static const std::map<std::string, Field> fields = [] {
    std::map<std::string, Field> f;
    using C = ExperimentConfig;
    f["pipeline.width"] = num([](C& c) -> auto& { return c.pipeline.width; });
    f["pipeline.height"] = num([](C& c) -> auto& { return c.pipeline.height; });
    f["pipeline.block"] = num([](C& c) -> auto& { return c.pipeline.block; });
    f["pipeline.measurements"] = num([](C& c) -> auto& { return c.pipeline.measurements; });
    f["pipeline.seed"] = num([](C& c) -> auto& { return c.pipeline.seed; });
    f["pipeline.motion_threshold"] = num([](C& c) -> auto& { return c.pipeline.motionThreshold; });
    f["pipeline.buffer"] = num([](C& c) -> auto& { return c.pipeline.bufferLength; });
    f["pipeline.templates"] = {
        [](const C& c) { return formatTemplates(c.pipeline.templates); },
        [](C& c, const std::string&, const std::string& v) { c.pipeline.templates = parseTemplates(trim(v)); }};
    f["pipeline.downsampling"] = {
        [](const C& c) {
          return std::string(c.pipeline.downsampling == Downsampling::BlockAverage ? "block_average"
                                                                                   : "subsample");
        },
        [](C& c, const std::string& k, const std::string& v) {
          const auto t = trim(v);
          if (t == "block_average") c.pipeline.downsampling = Downsampling::BlockAverage;
          else if (t == "subsample") c.pipeline.downsampling = Downsampling::Subsample;
          else throw ConfigError("config: '" + k + "' must be block_average or subsample");
        }};

    f["model.tau"] = {[](const C& c) { return c.tau ? fmt(*c.tau) : std::string("auto"); },
                      [](C& c, const std::string& k, const std::string& v) {
                        if (trim(v) == "auto") c.tau.reset();
                        else c.tau = parseNumber<double>(k, v);
                      }};
    f["model.tau_percentile"] = num([](C& c) -> auto& { return c.tauPercentile; });
    f["model.mean_center"] = flag([](C& c) -> auto& { return c.match.meanCenter; });

    f["dataset.classes"] = {[](const C& c) { return joinList(c.dataset.classes); },
                            [](C& c, const std::string&, const std::string& v) {
                              c.dataset.classes = splitList(v);
                            }};
    f["dataset.train_per_class"] = num([](C& c) -> auto& { return c.dataset.trainPerClass; });
    f["dataset.test_per_class"] = num([](C& c) -> auto& { return c.dataset.testPerClass; });
    f["dataset.seed"] = num([](C& c) -> auto& { return c.dataset.seed; });
    f["dataset.fps"] = num([](C& c) -> auto& { return c.dataset.synth.fps; });
    f["dataset.gesture_seconds"] = num([](C& c) -> auto& { return c.dataset.synth.gestureSeconds; });
    f["dataset.lead_in_frames"] = num([](C& c) -> auto& { return c.dataset.synth.leadInFrames; });
    f["dataset.tail_frames"] = num([](C& c) -> auto& { return c.dataset.synth.tailFrames; });
    f["dataset.noise_sigma"] = num([](C& c) -> auto& { return c.dataset.synth.noiseSigma; });
    f["dataset.background"] = num([](C& c) -> auto& { return c.dataset.synth.background; });
    f["dataset.jitter_sigma"] = num([](C& c) -> auto& { return c.dataset.synth.jitterSigma; });
    f["dataset.class_jitter"] = {
        [](const C& c) {
          std::string s;
          for (const auto& [label, j] : c.dataset.synth.classJitter)
            s += (s.empty() ? "" : ",") + label + ":" + fmt(j);
          return s;
        },
        [](C& c, const std::string& k, const std::string& v) {
          std::map<std::string, double> m;
          for (const auto& item : splitList(v)) {
            const auto colon = item.rfind(':');
            if (colon == std::string::npos || colon == 0)
              throw ConfigError("config: '" + k + "' expects label:sigma pairs, got '" + item + "'");
            m[trim(item.substr(0, colon))] = parseNumber<double>(k, item.substr(colon + 1));
          }
          c.dataset.synth.classJitter = std::move(m);
        }};
    f["dataset.placement_range"] = num([](C& c) -> auto& { return c.dataset.synth.placementRange; });
    f["dataset.speed_variation"] = num([](C& c) -> auto& { return c.dataset.synth.speedVariation; });
    f["dataset.scale_variation"] = num([](C& c) -> auto& { return c.dataset.synth.scaleVariation; });
    f["dataset.blob_size"] = num([](C& c) -> auto& { return c.dataset.synth.blobSize; });
    f["dataset.intensity"] = num([](C& c) -> auto& { return c.dataset.synth.intensity; });
    f["dataset.edge_softness"] = num([](C& c) -> auto& { return c.dataset.synth.edgeSoftness; });
    f["dataset.texture_amplitude"] = num([](C& c) -> auto& { return c.dataset.synth.textureAmplitude; });
    f["dataset.rotation_sigma"] = num([](C& c) -> auto& { return c.dataset.synth.rotationSigma; });
    f["dataset.shear_sigma"] = num([](C& c) -> auto& { return c.dataset.synth.shearSigma; });
    f["dataset.flicker_sigma"] = num([](C& c) -> auto& { return c.dataset.synth.flickerSigma; });
    f["dataset.distractor_rate"] = num([](C& c) -> auto& { return c.dataset.synth.distractorRate; });
    f["dataset.distractor_size"] = num([](C& c) -> auto& { return c.dataset.synth.distractorSize; });
    f["dataset.distractor_intensity"] = num([](C& c) -> auto& { return c.dataset.synth.distractorIntensity; });
    f["dataset.texture_cell"] = num([](C& c) -> auto& { return c.dataset.synth.textureCell; });

    f["energy.scenario"] = {[](const C& c) { return c.energy.scenario; },
                            [](C& c, const std::string&, const std::string& v) { c.energy.scenario = trim(v); }};
    f["energy.pv.ipv_ref"] = num([](C& c) -> auto& { return c.energy.pv.ipvRef; });
    f["energy.pv.g_ref"] = num([](C& c) -> auto& { return c.energy.pv.gRef; });
    f["energy.pv.i0"] = num([](C& c) -> auto& { return c.energy.pv.i0; });
    f["energy.pv.rs"] = num([](C& c) -> auto& { return c.energy.pv.rs; });
    f["energy.pv.rsh"] = num([](C& c) -> auto& { return c.energy.pv.rsh; });
    f["energy.pv.ideality"] = num([](C& c) -> auto& { return c.energy.pv.a; });
    f["energy.pv.ns"] = num([](C& c) -> auto& { return c.energy.pv.ns; });
    f["energy.pv.vt"] = num([](C& c) -> auto& { return c.energy.pv.vt; });
    f["energy.cells_parallel"] = num([](C& c) -> auto& { return c.energy.cellsParallel; });
    f["energy.capacitance"] = num([](C& c) -> auto& { return c.energy.harvester.capacitance; });
    f["energy.vstore_max"] = num([](C& c) -> auto& { return c.energy.harvester.vStoreMax; });
    f["energy.vstore_initial"] = num([](C& c) -> auto& { return c.energy.initialVStore; });
    f["energy.brown_out"] = num([](C& c) -> auto& { return c.energy.harvester.brownOut; });
    f["energy.restart"] = num([](C& c) -> auto& { return c.energy.harvester.restart; });
    f["energy.eta_boost"] = num([](C& c) -> auto& { return c.energy.harvester.etaBoost; });
    f["energy.eta_buck"] = num([](C& c) -> auto& { return c.energy.harvester.etaBuck; });
    f["energy.sample_period"] = num([](C& c) -> auto& { return c.energy.harvester.samplePeriod; });
    f["energy.sample_window"] = num([](C& c) -> auto& { return c.energy.harvester.sampleWindow; });
    f["energy.mppt_fraction"] = num([](C& c) -> auto& { return c.energy.harvester.mpptFraction; });
    f["energy.frame_energy"] = num([](C& c) -> auto& { return c.energy.load.referenceEnergy; });
    f["energy.energy_per_measurement"] = num([](C& c) -> auto& { return c.energy.load.perMeasurement; });
    f["energy.fps"] = num([](C& c) -> auto& { return c.energy.load.fps; });
    f["energy.governor"] = flag([](C& c) -> auto& { return c.energy.useGovernor; });
    f["energy.governor_v_low"] = num([](C& c) -> auto& { return c.energy.governor.vLow; });
    f["energy.governor_v_high"] = num([](C& c) -> auto& { return c.energy.governor.vHigh; });
    f["energy.governor_interval"] = num([](C& c) -> auto& { return c.energy.governor.interval; });
    f["energy.dt"] = num([](C& c) -> auto& { return c.energy.dt; });
    f["energy.record_every"] = num([](C& c) -> auto& { return c.energy.recordEvery; });

    f["sweep.m"] = {[](const C& c) { return joinList(c.sweep.m); },
                    [](C& c, const std::string& k, const std::string& v) { c.sweep.m = parseList<Index>(k, v); }};
    f["sweep.fps"] = {[](const C& c) { return joinList(c.sweep.fps); },
                      [](C& c, const std::string& k, const std::string& v) { c.sweep.fps = parseList<int>(k, v); }};
    f["sweep.irradiance"] = {
        [](const C& c) { return joinList(c.sweep.irradiance); },
        [](C& c, const std::string& k, const std::string& v) { c.sweep.irradiance = parseList<double>(k, v); }};

    f["output.dir"] = {[](const C& c) { return c.outputDir; },
                       [](C& c, const std::string&, const std::string& v) { c.outputDir = trim(v); }};
    return f;
  }();
  return fields;
}

}  // namespace

void ExperimentConfig::set(const std::string& key, const std::string& value) {
  const auto it = registry().find(trim(key));
  if (it == registry().end()) throw ConfigError("config: unknown key '" + key + "'");
  it->second.set(*this, it->first, value);
}

std::string ExperimentConfig::get(const std::string& key) const {
  const auto it = registry().find(key);
  if (it == registry().end()) throw ConfigError("config: unknown key '" + key + "'");
  return it->second.get(*this);
}

std::vector<std::string> ExperimentConfig::keys() {
  std::vector<std::string> out;
  for (const auto& [k, _] : registry()) out.push_back(k);
  return out;
}

ExperimentConfig ExperimentConfig::parse(std::istream& in) {
  ExperimentConfig c;
  std::string line;
  int lineNo = 0;
  while (std::getline(in, line)) {
    ++lineNo;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineNo) + ": expected 'key = value'");
    c.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  return parse(in);
}

std::string ExperimentConfig::canonical() const {
  std::string out;
  for (const auto& [k, f] : registry()) {
    if (k == "output.dir") continue;  // where results go does not change them
    out += k + " = " + f.get(*this) + "\n";
  }
  return out;
}

std::string ExperimentConfig::hash() const {
  Fnv1a h;
  h.update(canonical());
  return hexDigest(h.digest());
}

void ExperimentConfig::validate() const {
  pipeline.validate();
  synth().validate();
  if (dataset.classes.empty()) throw ConfigError("config: dataset.classes is empty");
  if (dataset.trainPerClass < 1 || dataset.testPerClass < 1)
    throw ConfigError("config: per-class counts must be >= 1");
  if (tauPercentile < 0.0 || tauPercentile > 1.0) throw ConfigError("config: model.tau_percentile outside [0,1]");
  for (Index m : sweep.m)
    if (m < 1 || m > pipeline.n()) throw ConfigError("config: sweep.m values must lie in [1, N]");
  for (int f : sweep.fps)
    if (f < 1 || f > 10) throw ConfigError("config: sweep.fps values must lie in [1, 10]");
  for (double g : sweep.irradiance)
    if (g < 0.0) throw ConfigError("config: sweep.irradiance values must be >= 0");
  energy.pv.validate();
  energy.harvester.validate();
  energy.governor.validate();
  energy.load.validate();
  if (energy.cellsParallel < 1) throw ConfigError("config: energy.cells_parallel must be >= 1");
  if (!(energy.dt > 0.0) || energy.dt > energy.harvester.maxStep)
    throw ConfigError("config: energy.dt must lie in (0, 0.1]");
}

}  // namespace cdg
