#pragma once
// The prediction contract the solver queries at every Pass node, plus the
// rule-based, oracle, and score-table implementations.

#include <array>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "bead/model.hpp"

namespace bead {

namespace paraff {
struct TopologySample;
}

// Chain prefix: which elements are fixed and at which order.
struct PrefixState {
  int tip = 1;                     // next order to assign
  std::map<int, int> fixedOrders;  // event id -> order; BOS (id 0) -> 0

  static PrefixState initial() { return PrefixState{1, {{0, 0}}}; }
  bool isFixed(int id) const { return fixedOrders.count(id) > 0; }

  // "<ids sorted by order, comma-joined>@<tip>"; the tip suffix separates a
  // mid-voice prefix from the same orders after a voice boundary.
  std::string digest() const;
};

struct ElementPrediction {
  std::array<double, 9> divisionVector{};
  std::array<double, 3> dotsVector{};
  std::optional<int> tickEstimate;
  double grace = 0.0;
  double timeWarped = 0.0;
  double fullMeasure = 0.0;
  double fake = 0.0;
};

// One picker query result. successor is indexed by element position in the
// cluster; mass sits on unfixed CHORD/REST candidates and EOS only.
struct Prediction {
  std::vector<double> successor;
  std::vector<ElementPrediction> elements;
};

// Throws std::invalid_argument when the prediction violates its invariants
// (mass on fixed elements, non-normalized successor).
void checkPrediction(const Prediction& prediction, const EventCluster& cluster,
                     const PrefixState& prefix);

class Picker {
 public:
  virtual ~Picker() = default;
  // Deterministic for fixed inputs; throws on prefixes referencing ids the
  // cluster does not contain.
  virtual Prediction predict(const EventCluster& cluster,
                             const PrefixState& prefix) const = 0;
};

// Heuristic picker: horizontal grouping plus left-to-right continuation for
// successor scores, tick estimates by linear x interpolation snapped to the
// 60-tick grid, division/dots passthrough from predispositions, and 0.5
// thresholds for grace / whole-measure / duplicate special cases.
class RuleBasedPicker : public Picker {
 public:
  Prediction predict(const EventCluster& cluster,
                     const PrefixState& prefix) const override;
};

// Ground-truth-driven picker for tests: one-hot on the gold successor, with
// uniform mass over the gold next-voice heads at voice boundaries.
class OraclePicker : public Picker {
 public:
  explicit OraclePicker(const paraff::TopologySample& gold);
  Prediction predict(const EventCluster& cluster,
                     const PrefixState& prefix) const override;

 private:
  // Gold voices as id sequences plus per-id gold attributes.
  struct GoldEvent {
    int tick = 0;
    int division = 0;
    int dots = 0;
    bool timeWarped = false;
    bool isRest = false;
  };
  std::vector<std::vector<int>> voices_;
  std::map<int, GoldEvent> events_;
  int measureDuration_ = 1920;
};

// One table entry, keyed by event id so it can be rehydrated against any
// cluster holding those events.
struct PredictionRecord {
  std::map<int, double> successor;
  std::map<int, ElementPrediction> elements;

  Prediction materialize(const EventCluster& cluster) const;
};

// Replays precomputed predictions keyed by (cluster fingerprint, prefix
// digest). Missing keys raise std::out_of_range ("no prediction for prefix").
class TablePicker : public Picker {
 public:
  using Table = std::map<std::string, PredictionRecord>;

  explicit TablePicker(Table table) : table_(std::move(table)) {}
  static TablePicker fromFile(const std::string& path);

  Prediction predict(const EventCluster& cluster,
                     const PrefixState& prefix) const override;

  static std::string key(const EventCluster& cluster,
                         const PrefixState& prefix);

  static PredictionRecord toRecord(const Prediction& prediction,
                                   const EventCluster& cluster);

 private:
  Table table_;
};

}  // namespace bead
