#include "cdg/recognizer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace cdg {
namespace {

struct Cell {
  double cost;
  std::size_t len;
};

// Lexicographic (cost, -length): cheaper wins, equal cost prefers the longer path.
bool better(const Cell& a, const Cell& b) {
  return a.cost < b.cost || (a.cost == b.cost && a.len > b.len);
}

// Fills the accumulated-cost table for a (rows) against b (cols).
std::vector<Cell> dtwTable(std::span<const Point> a, std::span<const Point> b) {
  const std::size_t n = a.size(), m = b.size();
  std::vector<Cell> t(n * m);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const double c = (a[i] - b[j]).norm();
      if (i == 0 && j == 0) {
        t[0] = {c, 1};
        continue;
      }
      Cell best{std::numeric_limits<double>::infinity(), 0};
      if (i > 0 && j > 0 && better(t[(i - 1) * m + j - 1], best)) best = t[(i - 1) * m + j - 1];
      if (i > 0 && better(t[(i - 1) * m + j], best)) best = t[(i - 1) * m + j];
      if (j > 0 && better(t[i * m + j - 1], best)) best = t[i * m + j - 1];
      t[i * m + j] = {best.cost + c, best.len + 1};
    }
  }
  return t;
}

PointSeq centered(std::span<const Point> s) {
  PointSeq out(s.begin(), s.end());
  if (out.empty()) return out;
  Point mean = Point::Zero();
  for (const auto& p : out) mean += p;
  mean /= static_cast<double>(out.size());
  for (auto& p : out) p -= mean;
  return out;
}

double match(std::span<const Point> buffer, std::span<const Point> training,
             const MatchOptions& options) {
  if (!options.meanCenter) return subsequenceMatch(buffer, training);
  const PointSeq b = centered(buffer), t = centered(training);
  return subsequenceMatch(b, t);
}

}  // namespace

Alignment dtwAlign(std::span<const Point> a, std::span<const Point> b) {
  if (a.empty() || b.empty()) throw StructuralError("dtw: empty sequence");
  const auto t = dtwTable(a, b);
  return {t.back().cost, t.back().len};
}

double dtwDistance(std::span<const Point> a, std::span<const Point> b) {
  return dtwAlign(a, b).cost;
}

double subsequenceMatch(std::span<const Point> buffer, std::span<const Point> training) {
  if (buffer.empty() || training.empty()) throw StructuralError("subsequenceMatch: empty sequence");
  // Reversing both sequences turns the free start in the buffer into a free
  // end, so one table yields the closed-end alignment for every start offset.
  const PointSeq rb(buffer.rbegin(), buffer.rend());
  const PointSeq rt(training.rbegin(), training.rend());
  const auto t = dtwTable(rb, rt);
  const std::size_t m = rt.size();
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < rb.size(); ++i) {
    const Cell& c = t[i * m + m - 1];
    best = std::min(best, c.cost / static_cast<double>(c.len));
  }
  return best;
}

Verdict classify(std::span<const Point> buffer, const std::vector<GestureClass>& classes, double tau,
                 const MatchOptions& options) {
  if (classes.empty()) throw StructuralError("classify: no gesture classes");
  Verdict v;
  if (buffer.empty()) return v;
  for (std::size_t c = 0; c < classes.size(); ++c) {
    for (const auto& trace : classes[c].trainingTraces) {
      const double d = match(buffer, trace, options);
      if (d < v.distance) {
        v.runnerUp = v.distance;
        v.distance = d;
        v.classIndex = c;
      } else if (d < v.runnerUp) {
        v.runnerUp = d;
      }
    }
  }
  if (v.classIndex && v.distance < tau) v.label = classes[*v.classIndex].label;
  return v;
}

double calibrateTau(const std::vector<GestureClass>& classes, double percentile,
                    const MatchOptions& options) {
  if (percentile < 0.0 || percentile > 1.0) throw ConfigError("calibrateTau: percentile outside [0,1]");
  std::vector<double> d;
  for (const auto& cls : classes)
    for (std::size_t i = 0; i < cls.trainingTraces.size(); ++i)
      for (std::size_t j = 0; j < cls.trainingTraces.size(); ++j)
        if (i != j && !cls.trainingTraces[i].empty() && !cls.trainingTraces[j].empty())
          d.push_back(match(cls.trainingTraces[i], cls.trainingTraces[j], options));
  if (d.empty()) throw ConfigError("calibrateTau: need at least two non-empty traces in a class");
  std::sort(d.begin(), d.end());
  const double pos = percentile * static_cast<double>(d.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, d.size() - 1);
  return d[lo] + (pos - static_cast<double>(lo)) * (d[hi] - d[lo]);
}

MotionTrace trainFromFrames(std::span<const Frame> frames, const FrontEnd& frontEnd) {
  if (frames.size() < 2) throw StructuralError("trainFromFrames: at least two frames are required");
  MotionTrace trace(static_cast<std::size_t>(frontEnd.config().bufferLength));
  for (const auto& c : frontEnd.centers(frames, Domain::Uncompressed)) trace.push({c.x, c.y});
  return trace;
}

// ---------------------------------------------------------------------------
// Model file
// ---------------------------------------------------------------------------

void saveModel(std::ostream& out, const GestureModel& model) {
  const auto& p = model.pipeline;
  out << "cdgesture-model " << GestureModel::kFormatVersion << '\n';
  out << "config_hash " << (model.configHash.empty() ? "-" : model.configHash) << '\n';
  out << "pipeline width=" << p.width << " height=" << p.height << " block=" << p.block
      << " measurements=" << p.measurements << " seed=" << p.seed
      << " templates=" << formatTemplates(p.templates) << " motion_threshold=" << std::setprecision(17)
      << p.motionThreshold << " buffer=" << p.bufferLength << " downsampling="
      << (p.downsampling == Downsampling::BlockAverage ? "block_average" : "subsample") << '\n';
  out << "dtw cost=euclidean steps=1-0,0-1,1-1 match=open_begin_closed_end normalize=path_length"
      << " mean_center=" << (model.match.meanCenter ? 1 : 0) << '\n';
  out << "tau " << std::setprecision(17) << model.tau << '\n';
  for (const auto& cls : model.classes) {
    out << "class " << cls.label << ' ' << cls.trainingTraces.size() << '\n';
    for (const auto& t : cls.trainingTraces) {
      out << "trace " << t.size();
      for (const auto& pt : t) out << ' ' << pt.x() << ' ' << pt.y();
      out << '\n';
    }
  }
}

void saveModel(const std::filesystem::path& path, const GestureModel& model) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write model file " + path.string());
  saveModel(out, model);
}

namespace {

std::string valueOf(const std::string& token, const std::string& key) {
  if (token.rfind(key + "=", 0) != 0) throw ConfigError("model file: expected '" + key + "='");
  return token.substr(key.size() + 1);
}

}  // namespace

GestureModel loadModel(std::istream& in) {
  GestureModel m;
  std::string line, word;
  int version = 0;
  if (!(in >> word >> version) || word != "cdgesture-model")
    throw ConfigError("model file: missing 'cdgesture-model' header");
  if (version != GestureModel::kFormatVersion)
    throw ConfigError("model file: unsupported version " + std::to_string(version));
  std::getline(in, line);
  GestureClass* current = nullptr;
  std::size_t expected = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    ls >> word;
    try {
      if (word == "config_hash") {
        ls >> m.configHash;
        if (m.configHash == "-") m.configHash.clear();
      } else if (word == "pipeline") {
        std::string t;
        auto& p = m.pipeline;
        ls >> t; p.width = std::stol(valueOf(t, "width"));
        ls >> t; p.height = std::stol(valueOf(t, "height"));
        ls >> t; p.block = std::stol(valueOf(t, "block"));
        ls >> t; p.measurements = std::stol(valueOf(t, "measurements"));
        ls >> t; p.seed = std::stoull(valueOf(t, "seed"));
        ls >> t; p.templates = parseTemplates(valueOf(t, "templates"));
        ls >> t; p.motionThreshold = std::stod(valueOf(t, "motion_threshold"));
        ls >> t; p.bufferLength = std::stol(valueOf(t, "buffer"));
        ls >> t;
        const std::string ds = valueOf(t, "downsampling");
        if (ds == "block_average") p.downsampling = Downsampling::BlockAverage;
        else if (ds == "subsample") p.downsampling = Downsampling::Subsample;
        else throw ConfigError("model file: unknown downsampling '" + ds + "'");
      } else if (word == "dtw") {
        std::string t;
        while (ls >> t)
          if (t.rfind("mean_center=", 0) == 0) m.match.meanCenter = valueOf(t, "mean_center") == "1";
      } else if (word == "tau") {
        std::string t;
        ls >> t;
        m.tau = std::stod(t);
      } else if (word == "class") {
        if (current && current->trainingTraces.size() != expected)
          throw ConfigError("model file: class '" + current->label + "' has too few traces");
        GestureClass cls;
        ls >> cls.label >> expected;
        m.classes.push_back(std::move(cls));
        current = &m.classes.back();
      } else if (word == "trace") {
        if (!current) throw ConfigError("model file: trace before any class");
        std::size_t n = 0;
        ls >> n;
        PointSeq t(n);
        for (auto& p : t)
          if (!(ls >> p.x() >> p.y())) throw ConfigError("model file: truncated trace");
        current->trainingTraces.push_back(std::move(t));
      } else {
        throw ConfigError("model file: unknown record '" + word + "'");
      }
    } catch (const std::invalid_argument&) {
      throw ConfigError("model file: malformed line: " + line);
    } catch (const std::out_of_range&) {
      throw ConfigError("model file: value out of range: " + line);
    }
  }
  if (current && current->trainingTraces.size() != expected)
    throw ConfigError("model file: class '" + current->label + "' has too few traces");
  if (m.classes.empty()) throw ConfigError("model file: no classes");
  m.pipeline.validate();
  return m;
}

GestureModel loadModel(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open model file " + path.string());
  return loadModel(in);
}

}  // namespace cdg
