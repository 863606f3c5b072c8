#include "bead/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

namespace bead {

namespace {

bool warpsEqual(const std::optional<TimeWarp>& a,
                const std::optional<TimeWarp>& b) {
  if (a.has_value() != b.has_value()) return false;
  if (!a) return true;
  return reduced(*a) == reduced(*b);
}

}  // namespace

EventComparison compareEvents(const RegulationSolution& predicted,
                              const RegulationSolution& gold,
                              const CompareFields& fields) {
  EventComparison out;
  long tickErr = 0, divErr = 0, dotsErr = 0, beamErr = 0, warpErr = 0,
       anyErr = 0;
  double sq = 0.0;
  int matched = 0;

  for (const auto& [id, g] : gold.eventAssignments) {
    ++out.goldEvents;
    auto it = predicted.eventAssignments.find(id);
    if (it == predicted.eventAssignments.end()) {
      // Missing prediction: wrong on every field; stays out of the RMSE.
      ++out.missingEvents;
      ++tickErr;
      ++divErr;
      ++dotsErr;
      ++beamErr;
      ++warpErr;
      ++anyErr;
      continue;
    }
    const auto& p = it->second;
    bool tickBad = std::abs(p.tick - g.tick) > 1;  // +-1 tick tolerance
    bool divBad = p.division != g.division;
    bool dotsBad = p.dots != g.dots;
    bool beamBad = p.beam != g.beam;
    bool warpBad = !warpsEqual(p.timeWarp, g.timeWarp);
    tickErr += tickBad;
    divErr += divBad;
    dotsErr += dotsBad;
    beamErr += beamBad;
    warpErr += warpBad;
    bool any = (fields.tick && tickBad) || (fields.division && divBad) ||
               (fields.dots && dotsBad) || (fields.beam && beamBad) ||
               (fields.timeWarp && warpBad);
    anyErr += any;
    double d = double(p.tick - g.tick);
    sq += d * d;
    ++matched;
  }

  if (out.goldEvents > 0) {
    double n = double(out.goldEvents);
    out.tickError = tickErr / n;
    out.divisionError = divErr / n;
    out.dotsError = dotsErr / n;
    out.beamError = beamErr / n;
    out.timeWarpError = warpErr / n;
    out.anyFieldError = anyErr / n;
  }
  out.tickRmse = matched > 0 ? std::sqrt(sq / matched) : 0.0;
  return out;
}

namespace {

// Voices as an order-preserving multiset: each voice keeps its internal id
// sequence, the voices themselves are unordered.
std::vector<std::vector<int>> canonicalVoices(
    const std::vector<std::vector<int>>& voices) {
  auto out = voices;
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

MeasureComparison compareMeasure(const RegulationSolution& predicted,
                                 const RegulationSolution& gold,
                                 const CompareFields& fields) {
  MeasureComparison out;
  out.voiceMatch =
      canonicalVoices(predicted.voices) == canonicalVoices(gold.voices);
  if (!out.voiceMatch) return out;

  bool ticksExact = true;
  bool allFields = true;
  for (const auto& [id, g] : gold.eventAssignments) {
    auto it = predicted.eventAssignments.find(id);
    if (it == predicted.eventAssignments.end()) {
      ticksExact = false;
      allFields = false;
      break;
    }
    const auto& p = it->second;
    if (p.tick != g.tick) ticksExact = false;
    if (fields.division && p.division != g.division) allFields = false;
    if (fields.dots && p.dots != g.dots) allFields = false;
    if (fields.beam && p.beam != g.beam) allFields = false;
    if (fields.timeWarp && !warpsEqual(p.timeWarp, g.timeWarp)) {
      allFields = false;
    }
  }
  out.tickExact = ticksExact;
  out.perfect = ticksExact && allFields;
  return out;
}

CorpusComparison compareCorpus(const std::vector<RegulationSolution>& predicted,
                               const std::vector<RegulationSolution>& gold,
                               const CompareFields& fields) {
  CorpusComparison out;
  std::map<int, const RegulationSolution*> byIndex;
  for (const auto& p : predicted) byIndex[p.measureIndex] = &p;

  long tickErr = 0, divErr = 0, dotsErr = 0, beamErr = 0, warpErr = 0,
       anyErr = 0, goldTotal = 0, missing = 0;
  double sqSum = 0.0;
  long matched = 0;
  int perfects = 0, voiceMatches = 0, tickExacts = 0;

  static const RegulationSolution kEmpty{};
  for (const auto& g : gold) {
    auto it = byIndex.find(g.measureIndex);
    const RegulationSolution& p = it != byIndex.end() ? *it->second : kEmpty;
    auto ev = compareEvents(p, g, fields);
    goldTotal += ev.goldEvents;
    missing += ev.missingEvents;
    tickErr += std::lround(ev.tickError * ev.goldEvents);
    divErr += std::lround(ev.divisionError * ev.goldEvents);
    dotsErr += std::lround(ev.dotsError * ev.goldEvents);
    beamErr += std::lround(ev.beamError * ev.goldEvents);
    warpErr += std::lround(ev.timeWarpError * ev.goldEvents);
    anyErr += std::lround(ev.anyFieldError * ev.goldEvents);
    long m = ev.goldEvents - ev.missingEvents;
    sqSum += ev.tickRmse * ev.tickRmse * m;
    matched += m;

    auto mc = compareMeasure(p, g, fields);
    perfects += mc.perfect;
    voiceMatches += mc.voiceMatch;
    tickExacts += mc.tickExact;
    ++out.measures;
  }

  if (goldTotal > 0) {
    double n = double(goldTotal);
    out.events.tickError = tickErr / n;
    out.events.divisionError = divErr / n;
    out.events.dotsError = dotsErr / n;
    out.events.beamError = beamErr / n;
    out.events.timeWarpError = warpErr / n;
    out.events.anyFieldError = anyErr / n;
    out.events.goldEvents = int(goldTotal);
    out.events.missingEvents = int(missing);
    out.events.tickRmse = matched > 0 ? std::sqrt(sqSum / matched) : 0.0;
  }
  if (out.measures > 0) {
    out.perfectRate = double(perfects) / out.measures;
    out.voiceMatchRate = double(voiceMatches) / out.measures;
    out.tickExactRate = double(tickExacts) / out.measures;
  }
  return out;
}

std::string formatComparison(const CorpusComparison& c) {
  char buf[96];
  std::string out;
  auto row = [&](const char* label, double value, bool percent) {
    if (percent) {
      std::snprintf(buf, sizeof(buf), "%-22s %8.2f\n", label, value * 100.0);
    } else {
      std::snprintf(buf, sizeof(buf), "%-22s %8.2f\n", label, value);
    }
    out += buf;
  };
  row("Any-field error (%)", c.events.anyFieldError, true);
  row("Tick RMSE", c.events.tickRmse, false);
  row("Tick error (%)", c.events.tickError, true);
  row("Division error (%)", c.events.divisionError, true);
  row("Dots error (%)", c.events.dotsError, true);
  row("Beam error (%)", c.events.beamError, true);
  row("Time-warp error (%)", c.events.timeWarpError, true);
  row("Perfect (%)", c.perfectRate, true);
  row("Voice match (%)", c.voiceMatchRate, true);
  row("Tick exact (%)", c.tickExactRate, true);
  std::snprintf(buf, sizeof(buf), "%-22s %8d\n", "Measures", c.measures);
  out += buf;
  std::snprintf(buf, sizeof(buf), "%-22s %8d\n", "Scored events",
                c.events.goldEvents);
  out += buf;
  return out;
}

}  // namespace bead
