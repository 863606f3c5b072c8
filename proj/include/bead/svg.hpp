#pragma once
// Per-voice timeline SVG: one colored lane per voice, one block per event
// spanning [tick, tick + effective duration].

#include <string>

#include "bead/model.hpp"

namespace bead {

// Deterministic for fixed input; fake and grace events render hollow.
std::string emitTimelineSvg(const RegulationSolution& solution,
                            const MeasureInstance& measure);

}  // namespace bead
