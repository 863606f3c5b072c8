#pragma once
// BeadSolver: probability-guided tree search over Pass/Division/Dots
// decisions with quota budgeting, pretentiousness pruning, in-place state
// with rollback, multipass, voice extraction, and post-regulation.

#include <map>
#include <memory>
#include <optional>
#include <vector>

#include "bead/evaluator.hpp"
#include "bead/model.hpp"
#include "bead/picker.hpp"

namespace bead {

struct SolverConfig {
  double quotaFactor = 40.0;
  double ptFactor = 1.0;  // pruning tolerance multiplier, 1.0..1.6
  double stopLoss = 0.02;
  std::vector<double> multipassFactors = {10.0, 40.0, 80.0};
  bool prePass = false;
  uint64_t seed = 0;  // reserved for stochastic pickers
};

// Search budget for a cluster of n events under quota factor f:
//   Q(n, f) = min(ceil((n+1) f ln(n+2)), ceil(1000 min(1, (24/(n+1))^2)))
long quota(int eventCount, double quotaFactor);

// Exploration score of a branch: p / (visits + 1).
double adjustedProbability(double p, long visits);

// Path penalty contribution of taking a branch with raw probability p:
// min(100, -ln p). Paths are pruned once the total exceeds 100 * ptFactor.
double pretentiousnessStep(double p);

enum class NodeType : int { Pass = 0, Division = 1, Dots = 2 };

struct SearchNode {
  NodeType type = NodeType::Pass;
  std::vector<double> posterior;
  std::map<int, std::unique_ptr<SearchNode>> children;  // by branch index
  long visits = 0;
  bool sealed = false;  // the paper's visits = infinity marker
  double pretentiousness = 0.0;
  int elementIndex = -1;  // Division/Dots: which element is being decided
  int tip = 0;            // next order at this node's decision point
  // Pass nodes: per-element outputs of the governing prediction.
  std::vector<ElementPrediction> elementPredictions;
  // Division nodes: the element's dots posterior for spawning Dots children.
  std::vector<double> dotsPosterior;
};

struct SearchTree {
  std::unique_ptr<SearchNode> root;
};

struct SolveStats {
  long pickerCalls = 0;
  long deducePaths = 0;
};

// Repeats root descents until the quota is spent, the root seals, or the
// best loss reaches stopLoss; leaves the cluster holding the best state
// found, with residue ticks snapped and attributes finalized. The quota
// bounds both picker invocations and descents.
ClusterEvaluation solveCluster(EventCluster& cluster, const Picker& picker,
                               long quota, double stopLoss, double ptFactor,
                               SolveStats* stats = nullptr,
                               SearchTree* treeOut = nullptr);

// Order-ascending voice extraction: an order gap of exactly one continues
// the voice, a larger gap starts a new one; events without orders belong to
// no voice.
std::vector<std::vector<int>> extractVoices(const EventCluster& cluster);

// Post-regulation attribute pass: beam/stem from feature hints, grace and
// full-measure thresholds, the 2/3 warp for time-warped events, and residue
// events marked fake with snapped ticks and argmax durations.
void finalizeClusterAttributes(EventCluster& cluster);

// Voice assembly over solved clusters: grace/full-measure exclusion,
// adjacency matrix, and status from the quality evaluation.
RegulationSolution assembleMeasureSolution(MeasureInstance& measure);

// Full measure solve: one SolveCluster per staff group with per-cluster
// quota min(ceil(n*f), 1000), voice assembly, grace/full-measure exclusion,
// adjacency matrix, and status from the quality evaluation.
RegulationSolution solveMeasure(MeasureInstance& measure, const Picker& picker,
                                const SolverConfig& config,
                                SolveStats* stats = nullptr);

// Escalating-quota passes returning the lowest-loss solution (first pass
// wins ties). With config.prePass, a one-glimpse prediction per cluster
// overwrites tick/full-measure/fake predispositions first and re-estimates
// the measure duration when the EOS estimate disagrees with the time
// signature by 240 ticks or more.
RegulationSolution solveMultipass(const MeasureInstance& measure,
                                  const Picker& picker,
                                  const SolverConfig& config,
                                  SolveStats* stats = nullptr);

// Right-to-left walk per staff assigning each context term the tick of the
// nearest following event; terms on staves without events get tick 0.
void propagateContextTicks(MeasureInstance& measure,
                           const RegulationSolution& solution);

}  // namespace bead
