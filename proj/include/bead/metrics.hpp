#pragma once
// Golden comparison: event-level field error rates, tick RMSE, and the
// measure-level perfect / voice-match / tick-exact tiers.

#include <string>
#include <vector>

#include "bead/model.hpp"

namespace bead {

// Which fields count toward the any-field error rate.
struct CompareFields {
  bool tick = true;
  bool division = true;
  bool dots = true;
  bool beam = true;
  bool timeWarp = true;
};

struct EventComparison {
  // Error rates over the gold denominator; the tick rate uses a +-1 tick
  // tolerance while RMSE keeps the raw difference.
  double tickError = 0.0;
  double divisionError = 0.0;
  double dotsError = 0.0;
  double beamError = 0.0;
  double timeWarpError = 0.0;
  double anyFieldError = 0.0;
  double tickRmse = 0.0;
  int goldEvents = 0;
  int missingEvents = 0;  // gold events with no prediction: every field wrong
};

EventComparison compareEvents(const RegulationSolution& predicted,
                              const RegulationSolution& gold,
                              const CompareFields& fields = {});

struct MeasureComparison {
  bool voiceMatch = false;  // voice multisets agree, intra-voice order kept
  bool tickExact = false;   // voice match plus exact ticks
  bool perfect = false;     // tick exact plus all core fields
};

MeasureComparison compareMeasure(const RegulationSolution& predicted,
                                 const RegulationSolution& gold,
                                 const CompareFields& fields = {});

struct CorpusComparison {
  EventComparison events;
  double perfectRate = 0.0;
  double voiceMatchRate = 0.0;
  double tickExactRate = 0.0;
  int measures = 0;
};

CorpusComparison compareCorpus(const std::vector<RegulationSolution>& predicted,
                               const std::vector<RegulationSolution>& gold,
                               const CompareFields& fields = {});

// Table with the usual row labels (Any-field error, Tick RMSE, tiers).
std::string formatComparison(const CorpusComparison& c);

}  // namespace bead
