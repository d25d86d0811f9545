#include "cdg/energy.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

namespace cdg::energy {
namespace {

constexpr int kMaxIterations = 200;

double safeExp(double x) { return std::exp(std::min(x, 700.0)); }

double photocurrent(const PVCellParams& p, double g) { return p.ipvRef * g / p.gRef; }

double diodeScale(const PVCellParams& p) { return p.a * static_cast<double>(p.ns) * p.vt; }

}  // namespace

void PVCellParams::validate() const {
  if (!(rs > 0.0) || !(rsh > 0.0) || !(i0 > 0.0) || a < 1.0 || ns < 1 || !(vt > 0.0) ||
      !(gRef > 0.0) || ipvRef < 0.0)
    throw ConfigError("PV cell parameters out of range");
}

PVCellParams PVCellParams::calibrated() {
  return {
      .ipvRef = 0.0410927,
      .gRef = 1000.0,
      .i0 = 3.61876e-8,
      .rs = 3.94229,
      .rsh = 4607.44,
      .a = 1.81666,
      .ns = 10,
      .vt = 0.025693,
  };
}

double cellResidual(const PVCellParams& p, double v, double g, double i) {
  const double vd = v + i * p.rs;
  return photocurrent(p, g) - p.i0 * (safeExp(vd / diodeScale(p)) - 1.0) - vd / p.rsh - i;
}

CurrentSolution solveCellCurrent(const PVCellParams& p, double v, double g) {
  if (v < 0.0 || g < 0.0) throw StructuralError("cellCurrent: V and G must be >= 0");
  const double n = diodeScale(p);
  // f(I) is strictly decreasing: f(-V/Rs) = Ipv + V/Rs >= 0 and f(Ipv) <= 0.
  double lo = -v / p.rs;
  double hi = photocurrent(p, g);
  double x = hi;
  double lastStep = hi - lo;
  int it = 1;
  for (; it <= kMaxIterations; ++it) {
    const double f = cellResidual(p, v, g, x);
    if (std::abs(f) < 1e-13) return {x, f, it};
    if (f > 0.0) lo = x;
    else hi = x;
    const double df = -p.i0 * p.rs / n * safeExp((v + x * p.rs) / n) - p.rs / p.rsh - 1.0;
    double next = x - f / df;
    // Deep in the exponential a Newton step only moves ~n/Rs; bisect whenever
    // it would not at least halve the previous step.
    if (!(next > lo && next < hi) || std::abs(next - x) > 0.5 * lastStep) next = 0.5 * (lo + hi);
    if (next == x) break;
    lastStep = std::abs(next - x);
    x = next;
  }
  const double f = cellResidual(p, v, g, x);
  if (std::abs(f) < 1e-9) return {x, f, std::min(it, kMaxIterations)};
  std::ostringstream os;
  os << "cellCurrent did not converge: V=" << v << " G=" << g << " I=" << x << " residual=" << f;
  throw NumericalError(os.str());
}

double cellCurrent(const PVCellParams& p, double v, double g) { return solveCellCurrent(p, v, g).current; }

double cellPower(const PVCellParams& p, double v, double g) { return v * cellCurrent(p, v, g); }

double findVoc(const PVCellParams& p, double g) {
  const double ipv = photocurrent(p, g);
  if (!(ipv > 0.0)) return 0.0;
  const double n = diodeScale(p);
  // At I = 0 the equation is explicit in V and decreasing.
  auto h = [&](double v) { return ipv - p.i0 * (safeExp(v / n) - 1.0) - v / p.rsh; };
  double lo = 0.0, hi = n * std::log1p(ipv / p.i0);
  double v = hi;
  for (int it = 0; it < kMaxIterations; ++it) {
    const double f = h(v);
    if (std::abs(f) < 1e-15 || hi - lo < 1e-15) break;
    if (f > 0.0) lo = v;
    else hi = v;
    const double df = -p.i0 / n * safeExp(v / n) - 1.0 / p.rsh;
    double next = v - f / df;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (next == v) break;
    v = next;
  }
  return v;
}

MaxPowerPoint findMpp(const PVCellParams& p, double g) {
  const double voc = findVoc(p, g);
  if (!(voc > 0.0)) return {};
  const double invPhi = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = 0.0, b = voc;
  double c = b - invPhi * (b - a), d = a + invPhi * (b - a);
  double fc = cellPower(p, c, g), fd = cellPower(p, d, g);
  while (b - a > 1e-6) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - invPhi * (b - a);
      fc = cellPower(p, c, g);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + invPhi * (b - a);
      fd = cellPower(p, d, g);
    }
  }
  const double v = 0.5 * (a + b);
  return {v, cellPower(p, v, g)};
}

double arrayCurrent(const ArrayConfig& array, double v, double g) {
  return static_cast<double>(array.cellsParallel) * cellCurrent(array.params, v, g);
}

double arrayPower(const ArrayConfig& array, double v, double g) { return v * arrayCurrent(array, v, g); }

void LoadModel::validate() const {
  if (referenceEnergy < 0.0 || perMeasurement < 0.0 || fixedEnergy() < 0.0 || fps < 0.0)
    throw ConfigError("load model: energies and fps must be non-negative");
}

void HarvesterParams::validate() const {
  if (!(capacitance > 0.0) || !(vStoreMax > 0.0) || brownOut < 0.0 || restart < brownOut ||
      restart > vStoreMax || !(etaBoost > 0.0 && etaBoost <= 1.0) ||
      !(etaBuck > 0.0 && etaBuck <= 1.0) || !(samplePeriod > 0.0) || sampleWindow < 0.0 ||
      sampleWindow >= samplePeriod || !(mpptFraction > 0.0 && mpptFraction < 1.0))
    throw ConfigError("harvester parameters out of range");
}

StepResult stepHarvester(const HarvesterState& state, const HarvesterParams& params,
                         const ArrayConfig& array, const LoadModel& load, long measurements,
                         double g, double dt) {
  if (!(dt > 0.0) || dt > params.maxStep)
    throw StructuralError("stepHarvester: dt must lie in (0, maxStep]");
  StepResult r{state, {}};
  HarvesterState& s = r.state;
  unsigned events = kEventNone;

  if (s.tSinceSample >= params.samplePeriod) {
    s.vmppRef = params.mpptFraction * findVoc(array.params, g);
    s.tSinceSample = 0.0;
    events |= kEventVocSample;
  }
  // Fraction of this step spent inside the sampling blackout.
  const double blackout = std::clamp(params.sampleWindow - s.tSinceSample, 0.0, dt) / dt;
  const double cellP = s.vmppRef > 0.0 ? std::max(0.0, cellPower(array.params, s.vmppRef, g)) : 0.0;
  const double pIn = (1.0 - blackout) * cellP * array.cellsParallel * params.etaBoost;

  if (s.loadShed && s.vStore >= params.restart) s.loadShed = false;
  if (!s.loadShed && s.vStore <= params.brownOut) s.loadShed = true;
  const double demand = load.power(measurements);
  if (demand > params.powerCeiling) events |= kEventOverCeiling;
  const double pOut = s.loadShed ? 0.0 : demand / params.etaBuck;
  if (s.loadShed) events |= kEventLoadShed;

  const double e0 = s.storedEnergy(params.capacitance);
  const double eMax = 0.5 * params.capacitance * params.vStoreMax * params.vStoreMax;
  double e1 = e0 + (pIn - pOut) * dt;
  s.harvested += pIn * dt;
  s.delivered += pOut * dt;
  if (e1 > eMax) {
    s.spilled += e1 - eMax;
    e1 = eMax;
    events |= kEventSaturated;
  } else if (e1 < 0.0) {
    s.deficit += -e1;
    e1 = 0.0;
    events |= kEventDepleted;
  }
  s.vStore = std::sqrt(2.0 * e1 / params.capacitance);
  s.time += dt;
  s.tSinceSample += dt;

  r.telemetry = {s.time, s.vStore, s.vmppRef, pIn, pOut, s.loadShed ? 0.0 : load.fps, events};
  return r;
}

double averageHarvestPower(const ArrayConfig& array, const HarvesterParams& params, double g) {
  if (!(g > 0.0)) return 0.0;
  const double v = params.mpptFraction * findVoc(array.params, g);
  const double cellP = std::max(0.0, cellPower(array.params, v, g));
  const double duty = 1.0 - params.sampleWindow / params.samplePeriod;
  return duty * cellP * array.cellsParallel * params.etaBoost;
}

int sustainableFps(const ArrayConfig& array, const LoadModel& load, long measurements, double g,
                   const HarvesterParams& params, int maxFps) {
  if (g < 0.0) throw StructuralError("sustainableFps: irradiance must be >= 0");
  const double harvest = averageHarvestPower(array, params, g);
  const double perFps = load.energyPerFrame(measurements) / params.etaBuck;
  int best = 0;
  for (int f = 1; f <= maxFps; ++f)
    if (harvest >= f * perFps) best = f;
  return best;
}

std::optional<double> FpsAccuracyCurve::at(int fps) const {
  for (const auto& [f, acc] : points)
    if (f == fps) return acc;
  return std::nullopt;
}

void GovernorParams::validate() const {
  if (!(vHigh > vLow) || minFps < 1 || maxFps < minFps || !(interval > 0.0))
    throw ConfigError("governor parameters out of range");
}

FpsGovernor::FpsGovernor(GovernorParams params, int initialFps, FpsAccuracyCurve curve)
    : params_(params), curve_(std::move(curve)), fps_(initialFps) {
  params_.validate();
  fps_ = std::clamp(fps_, params_.minFps, params_.maxFps);
}

GovernorDecision FpsGovernor::update(const HarvesterState& state, double dt) {
  sinceDecision_ += dt;
  if (sinceDecision_ + 1e-12 >= params_.interval) {
    sinceDecision_ = 0.0;
    if (state.vStore < params_.vLow && fps_ > params_.minFps) --fps_;
    else if (state.vStore > params_.vHigh && fps_ < params_.maxFps) ++fps_;
  }
  return {fps_, curve_.at(fps_)};
}

double IrradianceScenario::at(double t) const {
  if (points.empty()) return 0.0;
  auto it = std::upper_bound(points.begin(), points.end(), t,
                             [](double v, const auto& p) { return v < p.first; });
  if (it == points.begin()) return points.front().second;
  return std::prev(it)->second;
}

IrradianceScenario IrradianceScenario::readCsv(std::istream& in) {
  IrradianceScenario s;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string a, b;
    if (!std::getline(ls, a, ',') || !std::getline(ls, b)) throw ConfigError("scenario: bad row '" + line + "'");
    double t = 0.0, g = 0.0;
    try {
      t = std::stod(a);
      g = std::stod(b);
    } catch (const std::exception&) {
      if (s.points.empty()) continue;  // header row
      throw ConfigError("scenario: bad row '" + line + "'");
    }
    if (g < 0.0) throw ConfigError("scenario: negative irradiance");
    if (!s.points.empty() && t <= s.points.back().first)
      throw ConfigError("scenario: timestamps must be strictly increasing");
    s.points.emplace_back(t, g);
  }
  if (s.points.empty()) throw ConfigError("scenario: no rows");
  return s;
}

IrradianceScenario IrradianceScenario::readCsv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario " + path.string());
  return readCsv(in);
}

SimulationResult simulate(const IrradianceScenario& scenario, const HarvesterParams& params,
                          const ArrayConfig& array, LoadModel load, FpsGovernor governor,
                          const SimulationOptions& options, HarvesterState initial) {
  params.validate();
  load.validate();
  const double duration = options.duration > 0.0 ? options.duration : scenario.duration();
  const auto steps = static_cast<long>(std::llround(duration / options.dt));
  const auto recordStride = std::max<long>(1, std::llround(options.recordEvery / options.dt));
  SimulationResult out;
  out.initial = initial;
  HarvesterState s = initial;
  if (options.useGovernor) load.fps = governor.fps();
  unsigned pending = kEventNone;
  for (long k = 0; k < steps; ++k) {
    const double g = scenario.at(s.time);
    StepResult r = stepHarvester(s, params, array, load, options.measurements, g, options.dt);
    s = r.state;
    pending |= r.telemetry.events;
    if ((k + 1) % recordStride == 0) {
      r.telemetry.events = pending;
      out.telemetry.push_back(r.telemetry);
      pending = kEventNone;
    }
    if (options.useGovernor) load.fps = governor.update(s, options.dt).fps;
  }
  out.final = s;
  return out;
}

std::string describeEvents(unsigned events) {
  static const std::pair<unsigned, const char*> names[] = {
      {kEventVocSample, "voc_sample"}, {kEventSaturated, "saturated"}, {kEventLoadShed, "load_shed"},
      {kEventOverCeiling, "over_ceiling"}, {kEventDepleted, "depleted"}};
  std::string s;
  for (const auto& [bit, name] : names)
    if (events & bit) s += (s.empty() ? "" : "|") + std::string(name);
  return s.empty() ? "-" : s;
}

void writeTelemetryCsv(std::ostream& out, const std::vector<Telemetry>& rows) {
  out << "t,Vstore,Vmpp_ref,Pin,Pout,fps,events\n";
  out << std::setprecision(9);
  for (const auto& r : rows)
    out << r.t << ',' << r.vStore << ',' << r.vmppRef << ',' << r.pIn << ',' << r.pOut << ','
        << r.fps << ',' << describeEvents(r.events) << '\n';
}

}  // namespace cdg::energy
