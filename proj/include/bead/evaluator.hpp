#pragma once
// Turns a (partial) chain into a scalar structural loss: tick propagation,
// tick twist, and the combined loss with fatality detection.

#include <optional>
#include <utility>
#include <vector>

#include "bead/model.hpp"

namespace bead {

struct ClusterEvaluation {
  double loss = 0.0;
  bool fatal = false;
  double tickTwist = 0.0;
  int residueCount = 0;
  int voiceCount = 0;
  double meanUnusedTime = 0.0;  // mean per-voice gap time, ticks
  double pretentiousness = 0.0;
  double tickRmse = 0.0;  // ticks
};

struct TickPropagation {
  // Parallel to cluster.elements; unset for sentinels and residue events.
  std::vector<std::optional<double>> ticks;
  std::vector<int> residueIds;
  int voiceCount = 0;
  // Per-voice written duration sum in ticks (effective, warp-scaled).
  std::vector<double> voiceDurations;
  // Per-voice unsounded time the voice spans: lead-in plus internal bubbles.
  std::vector<double> voiceGaps;
};

// Walk ordered events voice by voice: the voice-local tick advances by each
// event's effective duration, resets to zero on a voice break (order gap
// greater than one), and an integer predisposition tick estimate acts as a
// lower bound on the event's tick. Events flagged time-warped have their
// duration scaled by 2/3. Propagated ticks are also written into the
// elements' tick fields (rounded).
TickPropagation propagateTicks(EventCluster& cluster);

// Peak squared deviation from the diagonal over consecutive x-sorted pairs:
//   tau = max_pairs ((4/pi) * atan2(dt/tSpan, dx/xSpan) - 1)^2
// Pairs with dx == 0 and dt == 0 are skipped (a shared column at one tick).
double tickTwist(const std::vector<std::pair<double, double>>& points,
                 double xSpan, double tSpan);

struct EvaluateOptions {
  double pretentiousness = 0.0;
  // Degenerate-partial residue fatality only applies at abandoned leaves
  // (prune or exhaustion); mid-chain evaluations always carry residue.
  bool atAbandonedLeaf = false;
};

// Combined loss over the cluster's current solution fields:
//   L = RMSE(t, t_hat)/T + tau + 0.2 r + 0.002 v + 0.4 s/T + 0.02 pi
// with T = 1920. Fatal when tau >= 1, when the voice count exceeds 8, or,
// at abandoned leaves, when more than max(2, n/2) events remain residue.
// Fatal evaluations have loss of at least 1.
ClusterEvaluation evaluateCluster(EventCluster& cluster,
                                  const EvaluateOptions& options = {});

}  // namespace bead
