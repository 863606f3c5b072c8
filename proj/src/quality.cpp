#include "bead/quality.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <set>

#include "bead/evaluator.hpp"
#include "bead/timebase.hpp"

namespace bead {

namespace {

double effectiveDuration(const EventAssignment& a) {
  double base = durationTicksReal(std::clamp(a.division, 0, 8),
                                  std::clamp(a.dots, 0, 2));
  if (a.timeWarp) base *= a.timeWarp->ratio();
  return base;
}

struct WarpGroup {
  TimeWarp warp;       // reduced
  double totalTicks = 0.0;
};

// Consecutive in-voice events sharing one reduced warp ratio form a group.
std::vector<WarpGroup> collectWarpGroups(
    const std::vector<int>& voice,
    const std::map<int, EventAssignment>& assignments) {
  std::vector<WarpGroup> groups;
  std::optional<TimeWarp> open;
  for (int id : voice) {
    auto it = assignments.find(id);
    if (it == assignments.end()) continue;
    const auto& a = it->second;
    if (a.timeWarp) {
      TimeWarp w = reduced(*a.timeWarp);
      if (!open || !(w == *open)) {
        groups.push_back({w, 0.0});
        open = w;
      }
      groups.back().totalTicks += effectiveDuration(a);
    } else {
      open.reset();
    }
  }
  return groups;
}

}  // namespace

QualityReport evaluateMeasure(const RegulationSolution& solution,
                              const MeasureInstance& measure) {
  QualityReport report;
  auto& flags = report.flags;
  auto& diag = report.diagnostics;

  bool corrupted = false;
  bool missingTimeContext = measure.duration <= 0;
  bool overRanged = false;

  std::set<int> measureIds;
  for (const auto& cluster : measure.clusters) {
    for (const auto& e : cluster.elements) {
      if (e.isReal()) measureIds.insert(e.id);
    }
  }
  diag.totalEvents = int(measureIds.size());

  // Voice membership; an id in two voices is rugged, an unknown id corrupt.
  std::set<int> inVoice;
  for (const auto& voice : solution.voices) {
    for (int id : voice) {
      if (!measureIds.count(id)) corrupted = true;
      if (!inVoice.insert(id).second) flags.voiceRugged = true;
      if (!solution.eventAssignments.count(id)) corrupted = true;
    }
  }

  for (int id : measureIds) {
    auto it = solution.eventAssignments.find(id);
    if (it == solution.eventAssignments.end()) {
      ++diag.nullEvents;
      continue;
    }
    const auto& a = it->second;
    if (a.fake) ++diag.fakeEvents;
    if (a.division < 0 || a.division > 8 || a.dots < 0 || a.dots > 2) {
      overRanged = true;
      continue;
    }
    if (a.timeWarp) {
      if (a.timeWarp->ratio() <= 0.5) flags.complexWarp = true;
      if (measure.duration > 0 &&
          effectiveDuration(a) > double(measure.duration)) {
        overRanged = true;
      }
    } else if (measure.duration > 0 &&
               effectiveDuration(a) > double(measure.duration)) {
      overRanged = true;
    }
  }
  diag.validEvents = diag.totalEvents - diag.nullEvents - diag.fakeEvents;

  int graceInVoiceCount = 0;
  double writtenSum = 0.0;
  double unusedSum = 0.0;
  double surplusSum = 0.0;
  int voiceEvents = 0;

  for (const auto& voice : solution.voices) {
    double durSum = 0.0;
    double cum = 0.0;
    double prevEnd = -1.0;
    for (int id : voice) {
      auto it = solution.eventAssignments.find(id);
      if (it == solution.eventAssignments.end()) continue;
      const auto& a = it->second;
      ++voiceEvents;
      if (a.grace) ++graceInVoiceCount;
      double dur = effectiveDuration(a);
      durSum += dur;
      // Within a voice the given tick can only push time forward.
      double start = std::max(cum, double(a.tick));
      if (prevEnd >= 0.0 && double(a.tick) < prevEnd - 1e-9) {
        flags.tickOverlapped = true;
      }
      prevEnd = double(a.tick) + dur;
      cum = start + dur;

      if (!a.timeWarp && a.tick % 5 != 0) flags.irregularTick = true;
    }
    writtenSum += durSum;
    if (measure.duration > 0) {
      unusedSum += std::max(0.0, double(measure.duration) - durSum);
      surplusSum += std::max(0.0, cum - double(measure.duration));
    }

    // Beam validity: the beamed subsequence must read (Open Continue* Close)*.
    bool open = false;
    for (int id : voice) {
      auto it = solution.eventAssignments.find(id);
      if (it == solution.eventAssignments.end()) continue;
      switch (it->second.beam) {
        case BeamState::None:
          break;
        case BeamState::Open:
          if (open) flags.beamBroken = true;
          open = true;
          break;
        case BeamState::Continue:
          if (!open) flags.beamBroken = true;
          break;
        case BeamState::Close:
          if (!open) flags.beamBroken = true;
          open = false;
          break;
      }
    }
    if (open) flags.beamBroken = true;

    for (const auto& group : collectWarpGroups(voice, solution.eventAssignments)) {
      long long total = std::llround(group.totalTicks);
      if (total % group.warp.denominator != 0) flags.fractionalWarp = true;
      if (group.warp.numerator * 3 != group.warp.denominator * 2) {
        ++diag.irregularWarpCount;
      }
    }
  }
  flags.graceInVoice = graceInVoiceCount > 0;
  flags.surplus = surplusSum > 1e-9;
  diag.surplusTime = surplusSum;
  if (!solution.voices.empty()) {
    diag.spaceTime = unusedSum / double(solution.voices.size()) /
                     double(kWholeTicks);
  }
  flags.spaceNonzero = diag.spaceTime > 1e-9;
  diag.durationRate =
      measure.duration > 0 ? writtenSum / double(measure.duration) : 0.0;

  // Tick twist over in-voice events, per cluster, worst cluster wins. Both
  // axes normalize by the point set's own span.
  double zeta = 0.0;
  for (const auto& cluster : measure.clusters) {
    std::vector<std::pair<double, double>> points;
    for (const auto& e : cluster.elements) {
      if (!e.isReal() || !inVoice.count(e.id)) continue;
      auto it = solution.eventAssignments.find(e.id);
      if (it == solution.eventAssignments.end()) continue;
      points.push_back({e.x, double(it->second.tick)});
    }
    std::sort(points.begin(), points.end());
    if (points.size() >= 2) {
      double xSpan = points.back().first - points.front().first;
      double minT = points.front().second, maxT = minT;
      for (const auto& p : points) {
        minT = std::min(minT, p.second);
        maxT = std::max(maxT, p.second);
      }
      double tSpan = maxT - minT;
      if (xSpan > 0.0 || tSpan > 0.0) {
        zeta = std::max(zeta, tickTwist(points, xSpan > 0.0 ? xSpan : 1.0,
                                        tSpan > 0.0 ? tSpan : 1.0));
      }
    }
  }
  diag.tickTwist = zeta;
  flags.twistFatal = zeta >= 1.0;

  // Negative staff tick rate: time sloping backwards across a staff.
  bool negativeStaffRate = false;
  {
    std::map<int, std::vector<std::pair<double, double>>> byStaff;
    for (const auto& cluster : measure.clusters) {
      for (const auto& e : cluster.elements) {
        if (!e.isReal() || !inVoice.count(e.id)) continue;
        auto it = solution.eventAssignments.find(e.id);
        if (it == solution.eventAssignments.end()) continue;
        byStaff[e.staff].push_back({e.x, double(it->second.tick)});
      }
    }
    for (auto& [staff, pts] : byStaff) {
      if (pts.size() < 2) continue;
      double mx = 0, mt = 0;
      for (auto& p : pts) {
        mx += p.first;
        mt += p.second;
      }
      mx /= double(pts.size());
      mt /= double(pts.size());
      double cov = 0, var = 0;
      for (auto& p : pts) {
        cov += (p.first - mx) * (p.second - mt);
        var += (p.first - mx) * (p.first - mx);
      }
      if (var > 1e-12 && cov / var < 0.0) negativeStaffRate = true;
    }
  }

  report.error = corrupted || flags.voiceRugged || flags.tickOverlapped ||
                 flags.twistFatal || flags.complexWarp || missingTimeContext ||
                 overRanged || negativeStaffRate || diag.nullEvents > 2;

  report.fine = !report.error && diag.tickTwist < 0.3 &&
                !flags.fractionalWarp && !flags.irregularTick &&
                !flags.surplus && !flags.beamBroken && !flags.graceInVoice;

  bool graceDominant = graceInVoiceCount > diag.validEvents - graceInVoiceCount;
  report.perfect = report.fine && diag.tickTwist < 0.2 &&
                   diag.spaceTime <= 1e-9 && diag.irregularWarpCount == 0 &&
                   !graceDominant;

  if (report.error) {
    report.q = 0.0;
  } else {
    double lSpace = std::tanh(std::abs(diag.spaceTime));
    double lDur = std::pow(std::max(0.0, 1.0 - diag.durationRate), 2);
    double lWarp = std::tanh(double(diag.irregularWarpCount));
    double zeta2 = diag.tickTwist * diag.tickTwist;
    report.q = (1.0 - lSpace) * (1.0 - lDur) * (1.0 - lWarp) * (1.0 - zeta2);
  }
  return report;
}

RegulationSolution applyPatch(const RegulationSolution& solution,
                              const Patch& patch) {
  RegulationSolution out = solution;
  if (patch.voices) out.voices = *patch.voices;
  if (patch.duration) out.duration = *patch.duration;
  if (patch.status) out.status = *patch.status;
  for (const auto& pe : patch.events) {
    auto& a = out.eventAssignments[pe.id];
    if (pe.tick) a.tick = *pe.tick;
    if (pe.division) a.division = *pe.division;
    if (pe.dots) a.dots = *pe.dots;
    if (pe.beam) a.beam = *pe.beam;
    if (pe.grace) a.grace = *pe.grace;
    if (pe.timeWarpGiven) a.timeWarp = pe.timeWarp;
  }
  out.buildAdjacency();
  return out;
}

const char* fixVerdictName(FixVerdict v) {
  switch (v) {
    case FixVerdict::Fixed: return "FIXED";
    case FixVerdict::Improved: return "IMPROVED";
    case FixVerdict::Worse: return "WORSE";
    case FixVerdict::Unchanged: return "UNCHANGED";
  }
  return "UNCHANGED";
}

FixEvaluation evaluateFix(const RegulationSolution& solution,
                          const MeasureInstance& measure, const Patch& patch) {
  FixEvaluation fix;
  fix.before = evaluateMeasure(solution, measure);
  fix.patched = applyPatch(solution, patch);
  fix.after = evaluateMeasure(fix.patched, measure);

  auto rank = [](const QualityReport& r) {
    return std::tuple<int, int, double>(r.error ? 0 : 1, r.fine ? 1 : 0, r.q);
  };
  auto b = rank(fix.before), a = rank(fix.after);
  if (a == b) {
    fix.verdict = FixVerdict::Unchanged;
  } else if (a > b) {
    fix.verdict = fix.after.fine && !fix.before.fine ? FixVerdict::Fixed
                                                     : FixVerdict::Improved;
  } else {
    fix.verdict = FixVerdict::Worse;
  }
  return fix;
}

namespace {

std::string formatReportBlock(const char* label, const QualityReport& r,
                              int measureIndex) {
  char buf[512];
  std::string out;
  std::snprintf(buf, sizeof(buf), "%s (m%d): fine=%s, error=%s, tickTwist=%.3f\n",
                label, measureIndex, r.fine ? "true" : "false",
                r.error ? "true" : "false", r.diagnostics.tickTwist);
  out += buf;
  std::snprintf(buf, sizeof(buf),
                "  qualityScore=%.3f, spaceTime=%.3f, surplusTime=%g, "
                "beamBroken=%s\n",
                r.q, r.diagnostics.spaceTime, r.diagnostics.surplusTime,
                r.flags.beamBroken ? "true" : "false");
  out += buf;
  std::snprintf(buf, sizeof(buf), "  Events: %d total, %d valid, %d fake, %d null\n",
                r.diagnostics.totalEvents, r.diagnostics.validEvents,
                r.diagnostics.fakeEvents, r.diagnostics.nullEvents);
  out += buf;
  if (r.flags.tickOverlapped) out += "  tickOverlapped=true\n";
  if (r.flags.voiceRugged) out += "  voiceRugged=true\n";
  if (r.flags.irregularTick) out += "  irregularTick=true\n";
  if (r.flags.fractionalWarp) out += "  fractionalWarp=true\n";
  if (r.flags.complexWarp) out += "  complexWarp=true\n";
  if (r.flags.graceInVoice) out += "  graceInVoice=true\n";
  return out;
}

}  // namespace

std::string formatFixReport(const FixEvaluation& fix, int measureIndex) {
  std::string out = formatReportBlock("BEFORE", fix.before, measureIndex);
  out += "\n";
  out += formatReportBlock("AFTER ", fix.after, measureIndex);
  out += "\n";
  char buf[160];
  double d = fix.after.diagnostics.tickTwist - fix.before.diagnostics.tickTwist;
  std::string verdict = fixVerdictName(fix.verdict);
  if (fix.verdict == FixVerdict::Fixed) {
    verdict += "!";
  } else if (fix.verdict == FixVerdict::Worse && fix.after.error &&
             !fix.before.error) {
    verdict += " (new error)";
  }
  std::snprintf(buf, sizeof(buf), "d(tickTwist)=%+.3f -> %s\n", d,
                verdict.c_str());
  out += buf;
  return out;
}

}  // namespace bead
