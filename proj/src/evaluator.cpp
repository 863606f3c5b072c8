#include "bead/evaluator.hpp"

#include <algorithm>
#include <cmath>

#include "bead/timebase.hpp"

namespace bead {

namespace {

constexpr double kPi = 3.14159265358979323846;

double effectiveDuration(const EventElement& e) {
  if (!e.division) return 0.0;  // chained but duration not yet decided
  double base = durationTicksReal(*e.division, e.dots.value_or(0));
  if (e.timeWarp) {
    return base * e.timeWarp->ratio();
  }
  if (e.predisposition.timeWarped > 0.5) {
    return base * (2.0 / 3.0);  // only 2/3 is regular at search time
  }
  return base;
}

}  // namespace

TickPropagation propagateTicks(EventCluster& cluster) {
  TickPropagation result;
  result.ticks.assign(cluster.elements.size(), std::nullopt);

  // Ordered real events, ascending by order.
  std::vector<int> chained;
  for (size_t i = 0; i < cluster.elements.size(); ++i) {
    const auto& e = cluster.elements[i];
    if (e.isReal() && e.order) {
      chained.push_back(int(i));
    } else if (e.isReal()) {
      result.residueIds.push_back(e.id);
    }
  }
  std::sort(chained.begin(), chained.end(), [&](int a, int b) {
    return *cluster.elements[a].order < *cluster.elements[b].order;
  });

  double cum = 0.0;
  double voiceDur = 0.0;
  int prevOrder = 0;  // BOS
  bool voiceOpen = false;
  auto closeVoice = [&] {
    result.voiceDurations.push_back(voiceDur);
    // Gap time the voice spans but does not sound: lead-in plus bubbles.
    result.voiceGaps.push_back(std::max(0.0, cum - voiceDur));
  };
  for (int idx : chained) {
    auto& e = cluster.elements[idx];
    if (!voiceOpen || *e.order - prevOrder > 1) {
      if (voiceOpen) closeVoice();
      cum = 0.0;  // a new voice starts at tick zero
      voiceDur = 0.0;
      voiceOpen = true;
      ++result.voiceCount;
    }
    double t = cum;
    if (e.predisposition.tickEstimate) {
      t = std::max(t, double(*e.predisposition.tickEstimate));
    }
    result.ticks[idx] = t;
    e.tick = int(std::llround(t));
    double dur = effectiveDuration(e);
    cum = t + dur;
    voiceDur += dur;
    prevOrder = *e.order;
  }
  if (voiceOpen) closeVoice();
  return result;
}

double tickTwist(const std::vector<std::pair<double, double>>& points,
                 double xSpan, double tSpan) {
  if (points.size() < 2 || xSpan <= 0.0 || tSpan <= 0.0) return 0.0;
  double worst = 0.0;
  for (size_t k = 1; k < points.size(); ++k) {
    double dx = (points[k].first - points[k - 1].first) / xSpan;
    double dt = (points[k].second - points[k - 1].second) / tSpan;
    if (dx == 0.0 && dt == 0.0) continue;
    double term = (4.0 / kPi) * std::atan2(dt, dx) - 1.0;
    worst = std::max(worst, term * term);
  }
  return worst;
}

ClusterEvaluation evaluateCluster(EventCluster& cluster,
                                  const EvaluateOptions& options) {
  ClusterEvaluation eval;
  eval.pretentiousness = options.pretentiousness;

  TickPropagation prop = propagateTicks(cluster);
  eval.residueCount = int(prop.residueIds.size());
  eval.voiceCount = prop.voiceCount;

  // RMSE over events that have both a propagated tick and an integer
  // predisposition estimate.
  double sq = 0.0;
  int rmseCount = 0;
  for (size_t i = 0; i < cluster.elements.size(); ++i) {
    const auto& e = cluster.elements[i];
    if (!prop.ticks[i] || !e.predisposition.tickEstimate) continue;
    double d = *prop.ticks[i] - double(*e.predisposition.tickEstimate);
    sq += d * d;
    ++rmseCount;
  }
  eval.tickRmse = rmseCount > 0 ? std::sqrt(sq / rmseCount) : 0.0;

  // Twist over all placed events, x-sorted. Both axes normalize by the
  // placed point set's own span; on a filled measure the tick span matches
  // the measure duration, and sparse partial states stay comparable.
  std::vector<std::pair<double, double>> points;
  for (size_t i = 0; i < cluster.elements.size(); ++i) {
    if (prop.ticks[i]) {
      points.push_back({cluster.elements[i].x, *prop.ticks[i]});
    }
  }
  std::sort(points.begin(), points.end());
  double xSpan = 0.0, tSpan = 0.0;
  if (!points.empty()) {
    double minT = points.front().second, maxT = minT;
    for (const auto& p : points) {
      minT = std::min(minT, p.second);
      maxT = std::max(maxT, p.second);
    }
    xSpan = points.back().first - points.front().first;
    tSpan = maxT - minT;
  }
  if (xSpan > 0.0 || tSpan > 0.0) {
    // A degenerate span on one axis still has to expose flat or vertical
    // pairs as fatal, so it normalizes by a unit span instead of vanishing.
    eval.tickTwist = tickTwist(points, xSpan > 0.0 ? xSpan : 1.0,
                               tSpan > 0.0 ? tSpan : 1.0);
  }

  double gapSum = 0.0;
  for (double g : prop.voiceGaps) gapSum += g;
  eval.meanUnusedTime =
      prop.voiceGaps.empty() ? 0.0 : gapSum / double(prop.voiceGaps.size());

  eval.fatal = eval.tickTwist >= 1.0 || eval.voiceCount > 8;
  if (options.atAbandonedLeaf) {
    int n = cluster.realCount();
    if (eval.residueCount > std::max(2, n / 2)) eval.fatal = true;
  }

  const double T = double(kWholeTicks);
  eval.loss = eval.tickRmse / T + eval.tickTwist + 0.2 * eval.residueCount +
              0.002 * eval.voiceCount + 0.4 * eval.meanUnusedTime / T +
              0.02 * eval.pretentiousness;
  if (eval.fatal) eval.loss = std::max(eval.loss, 1.0);
  return eval;
}

}  // namespace bead
