#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "cdg/errors.hpp"

namespace cdg::energy {

/// Single-diode PV cell constants. Photocurrent scales linearly with
/// irradiance: Ipv = ipvRef * G / gRef.
struct PVCellParams {
  double ipvRef;  // A at gRef
  double gRef;    // W/m^2
  double i0;      // dark saturation current, A
  double rs;      // series resistance, ohm
  double rsh;     // shunt resistance, ohm (infinity allowed)
  double a;       // diode ideality factor
  int ns;         // cells in series
  double vt;      // thermal voltage, V

  void validate() const;

  // Fitted once to the AM-5907 landmarks (Vmpp ~ 5 V and Pmax ~ 100 mW at
  // 600 W/m^2, Vmpp ~ 0.8 Voc); see tools/fit_pv_params.py.
  static PVCellParams calibrated();
};

struct ArrayConfig {
  int cellsParallel = 6;
  PVCellParams params = PVCellParams::calibrated();
};

struct CurrentSolution {
  double current;
  double residual;  // Eq. rhs - I at the returned current
  int iterations;
};

/// Right-hand side minus I of the implicit I-V equation.
double cellResidual(const PVCellParams& p, double volts, double irradiance, double current);

/// Solves the implicit I-V equation for I with a bracketed, safeguarded Newton
/// iteration on [-V/Rs, Ipv]. Throws NumericalError past the iteration cap.
CurrentSolution solveCellCurrent(const PVCellParams& p, double volts, double irradiance);
double cellCurrent(const PVCellParams& p, double volts, double irradiance);
double cellPower(const PVCellParams& p, double volts, double irradiance);

/// Open-circuit voltage; zero when there is no photocurrent.
double findVoc(const PVCellParams& p, double irradiance);

struct MaxPowerPoint {
  double voltage = 0.0;
  double power = 0.0;
};

/// Golden-section search of P(V) on [0, Voc]; voltage resolved well below 1 mV.
MaxPowerPoint findMpp(const PVCellParams& p, double irradiance);

double arrayCurrent(const ArrayConfig& array, double volts, double irradiance);
double arrayPower(const ArrayConfig& array, double volts, double irradiance);

/// Energy per frame, affine in the number of compressed measurements and
/// pinned to `referenceEnergy` at `referenceMeasurements`.
struct LoadModel {
  double referenceEnergy = 0.095;  // J per frame at the reference M
  long referenceMeasurements = 400;
  double perMeasurement = 25e-6;   // J per compressed measurement
  double fps = 10.0;

  double energyPerFrame(long m) const {
    return referenceEnergy + perMeasurement * static_cast<double>(m - referenceMeasurements);
  }
  double fixedEnergy() const {  // E0
    return referenceEnergy - perMeasurement * static_cast<double>(referenceMeasurements);
  }
  double power(long m) const { return fps * energyPerFrame(m); }
  void validate() const;
};

/// Converter, storage, and MPPT constants of the two-stage harvester.
struct HarvesterParams {
  double capacitance = 0.1;     // F
  double vStoreMax = 5.5;       // V
  double brownOut = 3.5;        // load shed at or below this V_STORE
  double restart = 3.6;         // load reconnects at or above this V_STORE
  double vOut = 3.3;            // regulated output, V
  double etaBoost = 0.93;
  double etaBuck = 0.93;
  double samplePeriod = 16.0;   // s between Voc samples
  double sampleWindow = 0.256;  // s of suspended harvest per sample
  double mpptFraction = 0.8;    // operating point as a fraction of Voc
  double powerCeiling = 0.170 * 3.3;  // W, flagged when exceeded
  double maxStep = 0.1;         // s, explicit-integration bound

  void validate() const;
};

enum Event : unsigned {
  kEventNone = 0,
  kEventVocSample = 1u << 0,
  kEventSaturated = 1u << 1,
  kEventLoadShed = 1u << 2,
  kEventOverCeiling = 1u << 3,
  kEventDepleted = 1u << 4,
};

struct HarvesterState {
  double time = 0.0;
  double vStore = 4.5;
  double vmppRef = 0.0;
  double tSinceSample = std::numeric_limits<double>::infinity();  // first step samples
  bool loadShed = false;
  // Energy ledger, joules.
  double harvested = 0.0;  // integral of Pin
  double delivered = 0.0;  // integral of Pout
  double spilled = 0.0;    // harvest discarded at vStoreMax
  double deficit = 0.0;    // load demand not covered by stored energy

  double storedEnergy(double capacitance) const { return 0.5 * capacitance * vStore * vStore; }
};

struct Telemetry {
  double t = 0.0;
  double vStore = 0.0;
  double vmppRef = 0.0;
  double pIn = 0.0;
  double pOut = 0.0;
  double fps = 0.0;
  unsigned events = kEventNone;
};

struct StepResult {
  HarvesterState state;
  Telemetry telemetry;
};

/// Advances the harvester by dt under irradiance G with the load running at
/// load.fps frames of `measurements` each. Stored energy is integrated
/// explicitly: E' = E + (Pin - Pout) dt, then clamped to [0, Emax].
StepResult stepHarvester(const HarvesterState& state, const HarvesterParams& params,
                         const ArrayConfig& array, const LoadModel& load, long measurements,
                         double irradiance, double dt);

/// Average harvested power delivered into storage at steady irradiance,
/// including the Voc-sampling blackout.
double averageHarvestPower(const ArrayConfig& array, const HarvesterParams& params, double irradiance);

/// Largest integer fps in [0, maxFps] whose load power is covered by the
/// average harvest.
int sustainableFps(const ArrayConfig& array, const LoadModel& load, long measurements,
                   double irradiance, const HarvesterParams& params = {}, int maxFps = 10);

/// Accuracy observed at each frame rate; used to annotate governor output.
struct FpsAccuracyCurve {
  std::vector<std::pair<int, double>> points;  // (fps, accuracy in [0,1])
  std::optional<double> at(int fps) const;
};

struct GovernorParams {
  double vLow = 3.9;
  double vHigh = 4.8;
  int minFps = 1;
  int maxFps = 10;
  double interval = 1.0;  // s between decisions

  void validate() const;
};

struct GovernorDecision {
  int fps = 0;
  std::optional<double> expectedAccuracy;
};

/// Hysteresis frame-rate controller: one step down below vLow, one step up
/// above vHigh, at most one change per interval.
class FpsGovernor {
 public:
  explicit FpsGovernor(GovernorParams params = {}, int initialFps = 10,
                       FpsAccuracyCurve curve = {});

  GovernorDecision update(const HarvesterState& state, double dt);
  int fps() const { return fps_; }
  const GovernorParams& params() const { return params_; }

 private:
  GovernorParams params_;
  FpsAccuracyCurve curve_;
  int fps_;
  double sinceDecision_ = 0.0;
};

/// Piecewise-constant irradiance over time, read from `t,G` CSV rows.
struct IrradianceScenario {
  std::vector<std::pair<double, double>> points;  // (t seconds, G W/m^2), t ascending

  double at(double t) const;
  double duration() const { return points.empty() ? 0.0 : points.back().first; }

  static IrradianceScenario readCsv(std::istream& in);
  static IrradianceScenario readCsv(const std::filesystem::path& path);
};

struct SimulationOptions {
  double dt = 0.01;
  double duration = 0.0;  // defaults to the scenario's last timestamp
  long measurements = 400;
  bool useGovernor = true;
  double recordEvery = 0.1;  // s between telemetry rows
};

struct SimulationResult {
  std::vector<Telemetry> telemetry;
  HarvesterState initial;
  HarvesterState final;
};

SimulationResult simulate(const IrradianceScenario& scenario, const HarvesterParams& params,
                          const ArrayConfig& array, LoadModel load, FpsGovernor governor,
                          const SimulationOptions& options, HarvesterState initial = {});

/// CSV header `t,Vstore,Vmpp_ref,Pin,Pout,fps,events`.
void writeTelemetryCsv(std::ostream& out, const std::vector<Telemetry>& rows);
std::string describeEvents(unsigned events);

}  // namespace cdg::energy
