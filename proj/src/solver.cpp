#include "bead/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "bead/quality.hpp"
#include "bead/timebase.hpp"

namespace bead {

long quota(int eventCount, double quotaFactor) {
  double n = double(eventCount);
  double scaled = std::ceil((n + 1.0) * quotaFactor * std::log(n + 2.0));
  double cap = std::ceil(1000.0 * std::min(1.0, std::pow(24.0 / (n + 1.0), 2)));
  return long(std::min(scaled, cap));
}

double adjustedProbability(double p, long visits) {
  return p / double(visits + 1);
}

double pretentiousnessStep(double p) {
  if (p <= 0.0) return 100.0;
  return std::min(100.0, -std::log(p));
}

namespace {

struct ElementState {
  std::optional<int> order;
  std::optional<int> tick;
  std::optional<int> division;
  std::optional<int> dots;
};

std::vector<ElementState> saveState(const EventCluster& cluster) {
  std::vector<ElementState> out;
  out.reserve(cluster.elements.size());
  for (const auto& e : cluster.elements) {
    out.push_back({e.order, e.tick, e.division, e.dots});
  }
  return out;
}

void restoreState(EventCluster& cluster, const std::vector<ElementState>& st) {
  for (size_t i = 0; i < cluster.elements.size(); ++i) {
    auto& e = cluster.elements[i];
    e.order = st[i].order;
    e.tick = st[i].tick;
    e.division = st[i].division;
    e.dots = st[i].dots;
  }
}

// One solve's mutable context: the shared cluster state, budget accounting,
// and prefix reconstruction from the applied orders.
struct DeduceContext {
  EventCluster& cluster;
  const Picker& picker;
  double ptFactor;
  long budget;
  SolveStats& stats;
  long callsUsed = 0;
  bool exhausted = false;

  struct QueryResult {
    std::optional<Prediction> prediction;
    bool pickerError = false;
  };

  QueryResult query(int tip) {
    if (callsUsed >= budget) {
      exhausted = true;
      return {};
    }
    PrefixState prefix;
    prefix.tip = tip;
    prefix.fixedOrders[0] = 0;
    for (const auto& e : cluster.elements) {
      if (e.isReal() && e.order) prefix.fixedOrders[e.id] = *e.order;
    }
    ++callsUsed;
    ++stats.pickerCalls;
    try {
      return {picker.predict(cluster, prefix), false};
    } catch (const std::exception&) {
      return {std::nullopt, true};
    }
  }

  bool hasResidue() const {
    for (const auto& e : cluster.elements) {
      if (e.isReal() && !e.order) return true;
    }
    return false;
  }

  void rollbackOrdersAbove(int maxKeptOrder) {
    for (auto& e : cluster.elements) {
      if (e.isReal() && e.order && *e.order > maxKeptOrder) {
        e.order.reset();
        e.tick.reset();
      }
    }
  }
};

ClusterEvaluation evaluateHere(DeduceContext& ctx, double pt, bool abandoned) {
  EvaluateOptions opts;
  opts.pretentiousness = pt;
  opts.atAbandonedLeaf = abandoned;
  return evaluateCluster(ctx.cluster, opts);
}

// Highest adjusted probability among live branches; zero-probability
// branches are never explorable. Ties break toward the lowest index.
int selectBranch(const SearchNode& node) {
  int best = -1;
  double bestScore = 0.0;
  for (size_t i = 0; i < node.posterior.size(); ++i) {
    double p = node.posterior[i];
    if (p <= 0.0) continue;
    auto it = node.children.find(int(i));
    if (it != node.children.end() && it->second->sealed) continue;
    long visits = it != node.children.end() ? it->second->visits : 0;
    double score = adjustedProbability(p, visits);
    if (score > bestScore) {
      bestScore = score;
      best = int(i);
    }
  }
  return best;
}

SearchNode* makeChild(SearchNode& parent, int branch, NodeType type,
                      std::vector<double> posterior, int elementIndex, int tip,
                      double pt) {
  auto node = std::make_unique<SearchNode>();
  node->type = type;
  node->posterior = std::move(posterior);
  node->elementIndex = elementIndex;
  node->tip = tip;
  node->pretentiousness = pt;
  SearchNode* raw = node.get();
  parent.children[branch] = std::move(node);
  return raw;
}

// One path from node to a leaf. tip is the next order to assign at this
// node's decision point; cluster state matches the path taken to get here.
ClusterEvaluation deduce(SearchNode& node, DeduceContext& ctx, int tip) {
  node.visits += 1;
  int ni = selectBranch(node);
  if (ni < 0) {  // every branch sealed or unreachable
    node.sealed = true;
    return evaluateHere(ctx, node.pretentiousness, /*abandoned=*/true);
  }
  node.pretentiousness += pretentiousnessStep(node.posterior[ni]);
  if (node.pretentiousness > 100.0 * ctx.ptFactor) {  // prune
    node.sealed = true;
    return evaluateHere(ctx, node.pretentiousness, /*abandoned=*/true);
  }

  std::optional<ClusterEvaluation> selfEval;
  SearchNode* child = nullptr;
  int childTip = tip;

  auto existing = [&](int branch) -> SearchNode* {
    auto it = node.children.find(branch);
    return it == node.children.end() ? nullptr : it->second.get();
  };

  switch (node.type) {
    case NodeType::Pass: {
      auto& elem = ctx.cluster.elements[ni];
      if (elem.elemType == ElemType::Eos) {
        auto eval = evaluateHere(ctx, node.pretentiousness, false);
        if (!ctx.hasResidue() || eval.fatal) {
          node.sealed = true;
          return eval;
        }
        selfEval = eval;
        childTip = tip + 1;  // the re-entered BOS consumes one order slot
        child = existing(ni);
        if (!child) {
          auto qr = ctx.query(childTip);
          if (!qr.prediction) {
            if (qr.pickerError) node.sealed = true;
            return eval;
          }
          child = makeChild(node, ni, NodeType::Pass,
                            std::move(qr.prediction->successor), -1, childTip,
                            node.pretentiousness);
          child->elementPredictions = std::move(qr.prediction->elements);
        }
      } else {
        elem.order = tip;
        elem.division.reset();
        elem.dots.reset();
        childTip = tip + 1;
        child = existing(ni);
        if (!child) {
          const auto& ep = node.elementPredictions[ni];
          child = makeChild(
              node, ni, NodeType::Division,
              std::vector<double>(ep.divisionVector.begin(),
                                  ep.divisionVector.end()),
              ni, childTip, node.pretentiousness);
          child->dotsPosterior.assign(ep.dotsVector.begin(),
                                      ep.dotsVector.end());
        }
      }
      break;
    }
    case NodeType::Division: {
      auto& elem = ctx.cluster.elements[node.elementIndex];
      elem.division = ni;
      child = existing(ni);
      if (!child) {
        child = makeChild(node, ni, NodeType::Dots, node.dotsPosterior,
                          node.elementIndex, tip, node.pretentiousness);
      }
      break;
    }
    case NodeType::Dots: {
      auto& elem = ctx.cluster.elements[node.elementIndex];
      elem.dots = ni;
      auto eval = evaluateHere(ctx, node.pretentiousness, false);
      if (!ctx.hasResidue() || eval.fatal) {  // leaf
        node.sealed = true;
        return eval;
      }
      selfEval = eval;
      child = existing(ni);
      if (!child) {
        auto qr = ctx.query(tip);
        if (!qr.prediction) {
          if (qr.pickerError) node.sealed = true;
          return eval;
        }
        child = makeChild(node, ni, NodeType::Pass,
                          std::move(qr.prediction->successor), -1, tip,
                          node.pretentiousness);
        child->elementPredictions = std::move(qr.prediction->elements);
      }
      break;
    }
  }

  // Path pretentiousness never decreases on the way down.
  child->pretentiousness =
      std::max(child->pretentiousness, node.pretentiousness);

  ClusterEvaluation result = deduce(*child, ctx, childTip);
  if (selfEval && result.fatal) {
    ctx.rollbackOrdersAbove(tip - 1);
    return *selfEval;
  }
  return result;
}

int nearestGridTick(const EventCluster& cluster, const EventElement& e) {
  // Residue snapping: adopt the nearest fixed event's tick when one sits
  // within two staff spaces, otherwise interpolate over x and snap to the
  // 60-tick grid.
  double bestDx = std::numeric_limits<double>::max();
  int bestTick = 0;
  for (const auto& other : cluster.elements) {
    if (!other.isReal() || !other.order || !other.tick) continue;
    double dx = std::abs(other.x - e.x);
    if (dx < bestDx) {
      bestDx = dx;
      bestTick = *other.tick;
    }
  }
  if (bestDx <= 2.0) return bestTick;

  double minX = cluster.bos().x, maxX = cluster.eos().x;
  for (const auto& other : cluster.elements) {
    if (!other.isReal()) continue;
    minX = std::min(minX, other.x);
    maxX = std::max(maxX, other.x);
  }
  double t = 0.0;
  if (maxX > minX) {
    t = (e.x - minX) / (maxX - minX) * double(cluster.measureDuration);
  }
  return int(std::llround(t / 60.0)) * 60;
}

}  // namespace

void finalizeClusterAttributes(EventCluster& cluster) {
  for (auto& e : cluster.elements) {
    if (!e.isReal()) continue;
    const auto& f = e.feature;
    // Beam / stem from the feature hints; everything below threshold means
    // no state.
    double bo = f[feature::kBeamOpen], bc = f[feature::kBeamOpen + 1],
           bl = f[feature::kBeamOpen + 2];
    double bmax = std::max({bo, bc, bl});
    if (bmax >= 0.5) {
      e.beam = bmax == bo   ? BeamState::Open
               : bmax == bc ? BeamState::Continue
                            : BeamState::Close;
    } else {
      e.beam = BeamState::None;
    }
    double su = f[feature::kStemUp], sd = f[feature::kStemUp + 1];
    double smax = std::max(su, sd);
    e.stemDirection = smax < 0.5   ? StemDirection::None
                      : smax == su ? StemDirection::Up
                                   : StemDirection::Down;
    e.grace = e.predisposition.grace > 0.5;
    e.fullMeasure = e.predisposition.fullMeasure > 0.5;
    if (e.predisposition.timeWarped > 0.5) {
      e.timeWarp = TimeWarp{2, 3};  // the one regular ratio
    } else {
      e.timeWarp.reset();
    }
    if (!e.order) {
      // Residue: duration attributes fall back to the predisposition argmax.
      const auto& dv = e.predisposition.divisionVector;
      const auto& ov = e.predisposition.dotsVector;
      e.division = int(std::max_element(dv.begin(), dv.end()) - dv.begin());
      e.dots = int(std::max_element(ov.begin(), ov.end()) - ov.begin());
      e.tick = nearestGridTick(cluster, e);
      e.fake = true;
    } else {
      e.fake = false;
      if (!e.division) e.division = 0;
      if (!e.dots) e.dots = 0;
    }
  }
}

ClusterEvaluation solveCluster(EventCluster& cluster, const Picker& picker,
                               long quotaBudget, double stopLoss,
                               double ptFactor, SolveStats* statsOut,
                               SearchTree* treeOut) {
  SolveStats local;
  SolveStats& stats = statsOut ? *statsOut : local;

  cluster.resetSolution();
  if (cluster.realCount() == 0) {
    finalizeClusterAttributes(cluster);
    if (treeOut) treeOut->root.reset();
    return ClusterEvaluation{};  // trivially solved
  }

  DeduceContext ctx{cluster, picker, ptFactor, quotaBudget, stats};

  auto seed = ctx.query(1);
  if (!seed.prediction) {
    throw std::runtime_error(seed.pickerError
                                 ? "picker failed on the root prefix"
                                 : "quota too small to seed the search");
  }
  SearchTree localTree;
  SearchTree& tree = treeOut ? *treeOut : localTree;
  tree.root = std::make_unique<SearchNode>();
  SearchNode& root = *tree.root;
  root.type = NodeType::Pass;
  root.posterior = std::move(seed.prediction->successor);
  root.elementPredictions = std::move(seed.prediction->elements);
  root.tip = 1;

  ClusterEvaluation best = evaluateHere(ctx, 0.0, /*abandoned=*/false);
  auto bestState = saveState(cluster);

  for (long iter = 0; iter < quotaBudget; ++iter) {
    if (root.sealed || ctx.exhausted) break;
    cluster.resetSolution();
    ++stats.deducePaths;
    ClusterEvaluation eval = deduce(root, ctx, 1);
    if (eval.loss < best.loss) {
      best = eval;
      bestState = saveState(cluster);
      if (best.loss <= stopLoss) break;
    }
  }

  restoreState(cluster, bestState);
  finalizeClusterAttributes(cluster);
  return best;
}

std::vector<std::vector<int>> extractVoices(const EventCluster& cluster) {
  std::vector<std::pair<int, int>> byOrder;  // (order, id)
  for (const auto& e : cluster.elements) {
    if (e.isReal() && e.order) byOrder.push_back({*e.order, e.id});
  }
  std::sort(byOrder.begin(), byOrder.end());
  std::vector<std::vector<int>> voices;
  int prevOrder = 0;
  for (const auto& [order, id] : byOrder) {
    if (voices.empty() || order - prevOrder > 1) voices.push_back({});
    voices.back().push_back(id);
    prevOrder = order;
  }
  return voices;
}

namespace {

void assembleSolution(MeasureInstance& measure, RegulationSolution& solution) {
  solution.measureIndex = measure.measureIndex;
  solution.voices.clear();
  solution.eventAssignments.clear();

  int duration = 0;
  for (auto& cluster : measure.clusters) {
    duration = std::max(duration, cluster.measureDuration);
    auto voices = extractVoices(cluster);

    // Grace and whole-measure events never sit inside voices; they borrow
    // the tick of the spatially nearest in-voice event, same staff first.
    std::vector<int> excluded;
    for (auto& voice : voices) {
      std::vector<int> kept;
      for (int id : voice) {
        auto& e = cluster.elements[cluster.indexOfId(id)];
        if (e.grace || e.fullMeasure) {
          excluded.push_back(id);
        } else {
          kept.push_back(id);
        }
      }
      voice = std::move(kept);
    }
    voices.erase(std::remove_if(voices.begin(), voices.end(),
                                [](const auto& v) { return v.empty(); }),
                 voices.end());
    for (const auto& e : cluster.elements) {
      if (e.isReal() && (e.grace || e.fullMeasure) && !e.order) {
        excluded.push_back(e.id);
      }
    }

    for (int id : excluded) {
      auto& e = cluster.elements[cluster.indexOfId(id)];
      double bestDx = std::numeric_limits<double>::max();
      int bestTick = e.tick.value_or(0);
      for (const auto& voice : voices) {
        for (int vid : voice) {
          const auto& o = cluster.elements[cluster.indexOfId(vid)];
          if (!o.tick) continue;
          double dx = std::abs(o.x - e.x);
          if (o.staff != e.staff) dx += 1e6;  // same staff strongly preferred
          if (dx < bestDx) {
            bestDx = dx;
            bestTick = *o.tick;
          }
        }
      }
      e.tick = bestTick;
    }

    for (auto& voice : voices) solution.voices.push_back(std::move(voice));

    for (const auto& e : cluster.elements) {
      if (!e.isReal()) continue;
      EventAssignment a;
      a.tick = e.tick.value_or(0);
      a.division = e.division.value_or(0);
      a.dots = e.dots.value_or(0);
      a.beam = e.beam;
      a.stemDirection = e.stemDirection;
      a.grace = e.grace;
      a.timeWarp = e.timeWarp;
      a.fullMeasure = e.fullMeasure;
      a.fake = e.fake;
      solution.eventAssignments[e.id] = a;
    }
  }
  solution.duration = duration > 0 ? duration : measure.duration;
  solution.buildAdjacency();

  QualityReport report = evaluateMeasure(solution, measure);
  solution.status = report.error  ? SolutionStatus::Fatal
                    : report.fine ? SolutionStatus::Solved
                                  : SolutionStatus::Issue;
}

double solveAllClusters(MeasureInstance& measure, const Picker& picker,
                        const SolverConfig& config, SolveStats* stats) {
  double totalLoss = 0.0;
  for (auto& cluster : measure.clusters) {
    long q = std::min(
        long(std::ceil(cluster.realCount() * config.quotaFactor)), 1000L);
    q = std::max(q, 1L);
    auto eval = solveCluster(cluster, picker, q, config.stopLoss,
                             config.ptFactor, stats);
    totalLoss += eval.loss;
  }
  return totalLoss;
}

void runPrePass(MeasureInstance& measure, const Picker& picker,
                SolveStats* stats) {
  for (auto& cluster : measure.clusters) {
    cluster.resetSolution();
    Prediction glimpse;
    try {
      glimpse = picker.predict(cluster, PrefixState::initial());
      if (stats) ++stats->pickerCalls;
    } catch (const std::exception&) {
      continue;  // keep upstream predispositions when the glimpse fails
    }
    for (size_t i = 0; i < cluster.elements.size(); ++i) {
      auto& e = cluster.elements[i];
      if (!e.isReal()) continue;
      const auto& ep = glimpse.elements[i];
      if (ep.tickEstimate) e.predisposition.tickEstimate = ep.tickEstimate;
      e.predisposition.fullMeasure = ep.fullMeasure;
      e.predisposition.fake = ep.fake;
    }
    auto eosEstimate = glimpse.elements.back().tickEstimate;
    if (eosEstimate &&
        std::abs(*eosEstimate - cluster.measureDuration) >= 240) {
      cluster.measureDuration = *eosEstimate;
    }
  }
}

}  // namespace

RegulationSolution assembleMeasureSolution(MeasureInstance& measure) {
  RegulationSolution solution;
  assembleSolution(measure, solution);
  return solution;
}

RegulationSolution solveMeasure(MeasureInstance& measure, const Picker& picker,
                                const SolverConfig& config, SolveStats* stats) {
  solveAllClusters(measure, picker, config, stats);
  RegulationSolution solution;
  assembleSolution(measure, solution);
  return solution;
}

RegulationSolution solveMultipass(const MeasureInstance& measure,
                                  const Picker& picker,
                                  const SolverConfig& config,
                                  SolveStats* stats) {
  MeasureInstance base = measure;
  if (config.prePass) runPrePass(base, picker, stats);

  double bestLoss = std::numeric_limits<double>::infinity();
  std::optional<RegulationSolution> bestSolution;
  for (double factor : config.multipassFactors) {
    MeasureInstance pass = base;
    SolverConfig passConfig = config;
    passConfig.quotaFactor = factor;
    double loss = solveAllClusters(pass, picker, passConfig, stats);
    if (loss < bestLoss) {  // strict: ties keep the earlier pass
      bestLoss = loss;
      RegulationSolution solution;
      assembleSolution(pass, solution);
      bestSolution = std::move(solution);
    }
  }
  if (!bestSolution) {
    MeasureInstance pass = base;
    return solveMeasure(pass, picker, config, stats);
  }
  return *bestSolution;
}

void propagateContextTicks(MeasureInstance& measure,
                           const RegulationSolution& solution) {
  for (auto& term : measure.contextTerms) {
    std::optional<int> bestTick;
    double bestX = std::numeric_limits<double>::max();
    bool staffHasEvents = false;
    for (const auto& cluster : measure.clusters) {
      for (const auto& e : cluster.elements) {
        if (!e.isReal() || e.staff != term.staff) continue;
        auto it = solution.eventAssignments.find(e.id);
        if (it == solution.eventAssignments.end()) continue;
        staffHasEvents = true;
        if (e.x >= term.x && e.x < bestX) {
          bestX = e.x;
          bestTick = it->second.tick;
        }
      }
    }
    if (!staffHasEvents) {
      term.tick = 0;
    } else if (bestTick) {
      term.tick = *bestTick;
    } else {
      term.tick = solution.duration;  // right of every event
    }
  }
}

}  // namespace bead
