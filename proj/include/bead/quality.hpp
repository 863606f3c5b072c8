#pragma once
// Measure-level quality evaluation: structural error flags, fine/perfect
// tiers, the composite score q, and the evaluate-fix backend for annotation
// workflows.

#include <optional>
#include <string>
#include <vector>

#include "bead/model.hpp"

namespace bead {

struct QualityFlags {
  bool beamBroken = false;
  bool tickOverlapped = false;
  bool voiceRugged = false;
  bool irregularTick = false;
  bool fractionalWarp = false;
  bool complexWarp = false;   // warp ratio at or below 1/2
  bool graceInVoice = false;
  bool surplus = false;       // written duration beyond the measure
  bool spaceNonzero = false;  // gaps inside voices
  bool twistFatal = false;    // tick twist >= 1
};

struct QualityDiagnostics {
  double tickTwist = 0.0;       // zeta
  double spaceTime = 0.0;       // mean unused voice time, whole-note units
  double surplusTime = 0.0;     // ticks beyond the measure, summed over voices
  double durationRate = 0.0;    // written duration sum / measure duration
  int irregularWarpCount = 0;   // warp groups with ratio != 2/3
  int nullEvents = 0;           // events without any assignment
  int fakeEvents = 0;
  int validEvents = 0;
  int totalEvents = 0;
};

struct QualityReport {
  bool error = false;
  bool fine = false;
  bool perfect = false;
  double q = 0.0;  // in [0,1]; 0 whenever error
  QualityFlags flags;
  QualityDiagnostics diagnostics;
};

// Appendix-style structural check of a regulated measure. For error-free
// measures q = (1-l_space)(1-l_dur)(1-l_warp)(1-zeta^2) with
// l_space = tanh(|dt_space|), l_dur = max(0, 1-r_dur)^2,
// l_warp = tanh(N_irregular); any structural error forces q = 0.
QualityReport evaluateMeasure(const RegulationSolution& solution,
                              const MeasureInstance& measure);

// One event override inside a fix record; absent fields keep their value.
struct PatchEvent {
  int id = 0;
  std::optional<int> tick;
  std::optional<int> division;
  std::optional<int> dots;
  std::optional<BeamState> beam;
  std::optional<bool> grace;
  // Distinguishes "set to null" from "leave untouched".
  bool timeWarpGiven = false;
  std::optional<TimeWarp> timeWarp;
};

struct Patch {
  int measureIndex = 0;
  std::vector<PatchEvent> events;
  std::optional<std::vector<std::vector<int>>> voices;
  std::optional<int> duration;
  std::optional<SolutionStatus> status;
};

enum class FixVerdict { Fixed, Improved, Worse, Unchanged };

const char* fixVerdictName(FixVerdict v);

struct FixEvaluation {
  QualityReport before;
  QualityReport after;
  RegulationSolution patched;
  FixVerdict verdict = FixVerdict::Unchanged;
};

RegulationSolution applyPatch(const RegulationSolution& solution,
                              const Patch& patch);

// Evaluates the solution before and after the patch; the verdict compares
// (error-free, fine, q) lexicographically, with Fixed reserved for crossing
// into fine.
FixEvaluation evaluateFix(const RegulationSolution& solution,
                          const MeasureInstance& measure, const Patch& patch);

// The BEFORE/AFTER textual block printed by the evaluate command.
std::string formatFixReport(const FixEvaluation& fix, int measureIndex);

}  // namespace bead
