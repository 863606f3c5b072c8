#pragma once
// Greedy rule-only regulation baseline: x-aligned column grouping, a
// left-to-right sweep advancing to the earliest unfinished end time, and
// forward chaining into voices.

#include "bead/model.hpp"

namespace bead {

// Deterministic, never fails, cannot backtrack. Durations come from the
// predisposition argmax; grace / whole-measure / duplicate suspects stay out
// of the chains.
void greedyRegulateCluster(EventCluster& cluster);

// Runs the column sweep per cluster and assembles a measure solution with
// the same post-processing as the search path.
RegulationSolution greedyRegulate(MeasureInstance& measure);

}  // namespace bead
