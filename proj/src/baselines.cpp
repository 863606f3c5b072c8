#include "bead/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "bead/solver.hpp"
#include "bead/timebase.hpp"

namespace bead {

namespace {

double hintDuration(const EventElement& e) {
  const auto& dv = e.predisposition.divisionVector;
  const auto& ov = e.predisposition.dotsVector;
  int division = int(std::max_element(dv.begin(), dv.end()) - dv.begin());
  int dots = int(std::max_element(ov.begin(), ov.end()) - ov.begin());
  double base = durationTicksReal(division, dots);
  if (e.predisposition.timeWarped > 0.5) base *= 2.0 / 3.0;
  return base;
}

bool chainable(const EventElement& e) {
  const auto& pd = e.predisposition;
  return pd.grace <= 0.5 && pd.fullMeasure <= 0.5 && pd.fake <= 0.5;
}

}  // namespace

void greedyRegulateCluster(EventCluster& cluster) {
  cluster.resetSolution();

  std::vector<int> real;
  for (size_t i = 0; i < cluster.elements.size(); ++i) {
    if (cluster.elements[i].isReal()) real.push_back(int(i));
  }

  // Duration attributes straight from the hint argmax.
  for (int idx : real) {
    auto& e = cluster.elements[idx];
    const auto& dv = e.predisposition.divisionVector;
    const auto& ov = e.predisposition.dotsVector;
    e.division = int(std::max_element(dv.begin(), dv.end()) - dv.begin());
    e.dots = int(std::max_element(ov.begin(), ov.end()) - ov.begin());
  }

  // Overlap-chained columns on [x-0.5, x+0.5], sorted by x.
  std::sort(real.begin(), real.end(), [&](int a, int b) {
    return cluster.elements[a].x < cluster.elements[b].x;
  });
  std::vector<std::vector<int>> columns;
  {
    size_t k = 0;
    while (k < real.size()) {
      double hi = cluster.elements[real[k]].x + 0.5;
      columns.push_back({real[k]});
      ++k;
      while (k < real.size() && cluster.elements[real[k]].x - 0.5 <= hi) {
        hi = std::max(hi, cluster.elements[real[k]].x + 0.5);
        columns.back().push_back(real[k]);
        ++k;
      }
    }
  }

  // Sweep left to right; each column starts at the current time, which then
  // advances to the earliest end time still unfinished.
  struct Running {
    double end;
    int id;
  };
  std::vector<Running> running;
  double t = 0.0;
  double maxEnd = 0.0;
  for (const auto& column : columns) {
    for (int idx : column) {
      auto& e = cluster.elements[idx];
      e.tick = int(std::llround(t));
      double end = t + hintDuration(e);
      running.push_back({end, e.id});
      maxEnd = std::max(maxEnd, end);
    }
    // Earliest unfinished end time; ties resolve by lowest id.
    double next = std::numeric_limits<double>::max();
    int nextId = std::numeric_limits<int>::max();
    for (const auto& r : running) {
      if (r.end > t + 1e-9 &&
          (r.end < next - 1e-9 ||
           (std::abs(r.end - next) <= 1e-9 && r.id < nextId))) {
        next = r.end;
        nextId = r.id;
      }
    }
    t = next < std::numeric_limits<double>::max() ? next : maxEnd;
  }

  // Forward chaining on the assigned ticks: always continue with the
  // earliest candidate that starts at or after the running end.
  std::vector<int> pool;
  for (int idx : real) {
    if (chainable(cluster.elements[idx])) pool.push_back(idx);
  }
  std::sort(pool.begin(), pool.end(), [&](int a, int b) {
    const auto& ea = cluster.elements[a];
    const auto& eb = cluster.elements[b];
    return std::tuple(*ea.tick, ea.id) < std::tuple(*eb.tick, eb.id);
  });

  std::vector<bool> used(pool.size(), false);
  int nextOrder = 1;
  for (size_t start = 0; start < pool.size(); ++start) {
    if (used[start]) continue;
    used[start] = true;
    auto* cur = &cluster.elements[pool[start]];
    cur->order = nextOrder++;
    double end = double(*cur->tick) + hintDuration(*cur);
    for (;;) {
      int pick = -1;
      for (size_t k = start + 1; k < pool.size(); ++k) {
        if (used[k]) continue;
        const auto& e = cluster.elements[pool[k]];
        if (double(*e.tick) + 1e-9 >= end) {
          pick = int(k);
          break;  // pool is (tick, id)-sorted, the first hit is the choice
        }
      }
      if (pick < 0) break;
      used[pick] = true;
      cur = &cluster.elements[pool[pick]];
      cur->order = nextOrder++;
      end = double(*cur->tick) + hintDuration(*cur);
    }
    nextOrder += 1;  // order gap: the next chain is a new voice
  }

  finalizeClusterAttributes(cluster);
}

RegulationSolution greedyRegulate(MeasureInstance& measure) {
  for (auto& cluster : measure.clusters) {
    greedyRegulateCluster(cluster);
  }
  return assembleMeasureSolution(measure);
}

}  // namespace bead
