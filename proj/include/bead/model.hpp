#pragma once
// Domain types for measure-level structure decoding: events, clusters,
// solutions, and the per-measure container, plus cluster validation and
// staff-group splitting.

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace bead {

enum class ElemType : int { Pad = 0, Bos = 1, Eos = 2, Chord = 3, Rest = 4 };

enum class BeamState : int { None = 0, Open = 1, Continue = 2, Close = 3 };

enum class StemDirection : int { None = 0, Up = 1, Down = 2 };

enum class SolutionStatus : int { Solved = 0, Issue = 1, Fatal = -1 };

struct TimeWarp {
  int numerator = 1;
  int denominator = 1;

  double ratio() const { return double(numerator) / double(denominator); }
  bool operator==(const TimeWarp&) const = default;
};

// Reduce a warp to lowest terms so {4,6} and {2,3} compare equal.
TimeWarp reduced(const TimeWarp& w);

/// Vertical distance between consecutive staff origins, in staff spaces.
inline constexpr double kStaffVerticalPitch = 12.0;

// Soft per-event evidence produced upstream (or by a picker glimpse).
struct Predisposition {
  std::optional<int> tickEstimate;
  std::array<double, 9> divisionVector{};  // probability over division class
  std::array<double, 3> dotsVector{};      // probability over dot count
  double grace = 0.0;
  double timeWarped = 0.0;
  double fullMeasure = 0.0;
  double fake = 0.0;
};

// Indices into the 16-dim local attribute feature vector.
namespace feature {
inline constexpr int kDivisionGe0 = 0;  // 7 dims: division >= 0 .. >= 6
inline constexpr int kDots1 = 7;        // 2 dims: >=1 dot, >=2 dots
inline constexpr int kBeamOpen = 9;     // 3 dims: Open, Continue, Close
inline constexpr int kStemUp = 12;      // 2 dims: Up, Down
inline constexpr int kGrace = 14;
inline constexpr int kTremoloCatcher = 15;
inline constexpr int kCount = 16;
}  // namespace feature

struct EventElement {
  int id = 0;  // 1-based for real events; 0 = BOS sentinel
  ElemType elemType = ElemType::Pad;
  int staff = 0;
  double x = 0.0;
  double pivotX = 0.0;
  double y1 = 0.0;
  double y2 = 0.0;
  std::array<double, feature::kCount> feature{};
  Predisposition predisposition;

  // Mutable solution fields, filled in by regulation.
  std::optional<int> order;
  std::optional<int> tick;
  std::optional<int> division;  // 0..8
  std::optional<int> dots;      // 0..2
  BeamState beam = BeamState::None;
  StemDirection stemDirection = StemDirection::None;
  bool grace = false;
  std::optional<TimeWarp> timeWarp;
  bool fullMeasure = false;
  bool fake = false;

  bool isSentinel() const {
    return elemType == ElemType::Bos || elemType == ElemType::Eos;
  }
  bool isReal() const {
    return elemType == ElemType::Chord || elemType == ElemType::Rest;
  }
};

// BOS + events + EOS for one staff group of one measure.
struct EventCluster {
  std::vector<EventElement> elements;  // [BOS, e_1..e_n, EOS]
  int staffGroup = 0;
  int measureDuration = 1920;  // ticks
  int time8th = 8;             // expected duration in eighths, capped at 16
  bool renormalizedInput = false;  // set when probability vectors needed fixing

  int realCount() const {
    return elements.size() >= 2 ? int(elements.size()) - 2 : 0;
  }
  EventElement& bos() { return elements.front(); }
  EventElement& eos() { return elements.back(); }
  const EventElement& bos() const { return elements.front(); }
  const EventElement& eos() const { return elements.back(); }

  // Index into elements for an event id, -1 when unknown.
  int indexOfId(int id) const;

  // Clear all solution fields; BOS keeps order 0.
  void resetSolution();
};

// Per-event result record inside a RegulationSolution.
struct EventAssignment {
  int tick = 0;
  int division = 0;
  int dots = 0;
  BeamState beam = BeamState::None;
  StemDirection stemDirection = StemDirection::None;
  bool grace = false;
  std::optional<TimeWarp> timeWarp;
  bool fullMeasure = false;
  bool fake = false;
};

struct RegulationSolution {
  int measureIndex = 0;
  std::vector<std::vector<int>> voices;  // ordered event ids
  std::map<int, EventAssignment> eventAssignments;
  int duration = 1920;
  SolutionStatus status = SolutionStatus::Solved;
  // H[i][j] true iff event j immediately precedes event i in its voice;
  // indexed by event id (0..maxId).
  std::vector<std::vector<bool>> adjacency;

  void buildAdjacency();
};

struct TimeSignature {
  int numerator = 4;
  int denominator = 4;

  int durationTicks() const { return numerator * 1920 / denominator; }
};

// A non-event measure annotation (clef, key, time signature glyph).
struct ContextTerm {
  std::string kind;
  int staff = 0;
  double x = 0.0;
  std::optional<int> tick;
};

struct MeasureInstance {
  std::vector<EventCluster> clusters;  // one per non-empty staff group
  int measureIndex = 0;
  TimeSignature timeSignature;
  int duration = 1920;
  std::vector<ContextTerm> contextTerms;

  const EventElement* findEvent(int id) const;
  EventElement* findEvent(int id);
};

// Raw measure as read from a cluster JSON file, before splitting.
struct RawMeasure {
  int measureIndex = 0;
  TimeSignature timeSignature;
  int duration = 1920;
  int time8th = 8;
  std::vector<std::vector<int>> staffGroups;
  std::vector<EventElement> events;
  std::vector<ContextTerm> contextTerms;
};

struct Violation {
  std::string rule;
  std::optional<int> id;
};

// Empty result iff every cluster invariant holds.
std::vector<Violation> validateCluster(const EventCluster& cluster);

// Partition raw events into one cluster per non-empty staff group, insert
// BOS/EOS sentinels and re-express y coordinates in the group's local frame.
// Throws std::invalid_argument when an event's staff is in no group.
MeasureInstance splitMeasure(const RawMeasure& raw);

}  // namespace bead
