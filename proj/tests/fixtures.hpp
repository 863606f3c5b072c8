#pragma once
// Hand-built cluster fixtures shared by the test binaries.

#include <array>
#include <vector>

#include "bead/model.hpp"

namespace beadtest {

struct EventSpec {
  int id = 0;
  bead::ElemType type = bead::ElemType::Chord;
  int staff = 0;
  double x = 0.0;
  int division = 2;
  int dots = 0;
  int tickEstimate = -1;  // <0: none
  double y1 = 0.0;
  double y2 = 1.0;
  bead::BeamState beam = bead::BeamState::None;
  bool warped = false;
  double gracePd = 0.0;
  double fullMeasurePd = 0.0;
  double fakePd = 0.0;
};

inline bead::EventElement makeEvent(const EventSpec& spec) {
  bead::EventElement e;
  e.id = spec.id;
  e.elemType = spec.type;
  e.staff = spec.staff;
  e.x = spec.x;
  e.pivotX = spec.x;
  e.y1 = spec.y1;
  e.y2 = spec.y2;
  e.predisposition.divisionVector[spec.division] = 1.0;
  e.predisposition.dotsVector[spec.dots] = 1.0;
  if (spec.tickEstimate >= 0) e.predisposition.tickEstimate = spec.tickEstimate;
  e.predisposition.grace = spec.gracePd;
  e.predisposition.fullMeasure = spec.fullMeasurePd;
  e.predisposition.fake = spec.fakePd;
  e.predisposition.timeWarped = spec.warped ? 1.0 : 0.0;
  // Matching feature hints: cumulative division bounds, dots, beam.
  for (int k = 0; k <= std::min(spec.division, 6); ++k) {
    e.feature[bead::feature::kDivisionGe0 + k] = 1.0;
  }
  if (spec.dots >= 1) e.feature[bead::feature::kDots1] = 1.0;
  if (spec.dots >= 2) e.feature[bead::feature::kDots1 + 1] = 1.0;
  if (spec.beam == bead::BeamState::Open) {
    e.feature[bead::feature::kBeamOpen] = 1.0;
  } else if (spec.beam == bead::BeamState::Continue) {
    e.feature[bead::feature::kBeamOpen + 1] = 1.0;
  } else if (spec.beam == bead::BeamState::Close) {
    e.feature[bead::feature::kBeamOpen + 2] = 1.0;
  }
  return e;
}

inline bead::EventCluster makeCluster(const std::vector<EventSpec>& specs,
                                      int measureDuration = 1920,
                                      int time8th = 8) {
  bead::EventCluster cluster;
  cluster.measureDuration = measureDuration;
  cluster.time8th = time8th;
  double minX = specs.empty() ? 0.0 : specs.front().x;
  double maxX = minX;
  for (const auto& s : specs) {
    minX = std::min(minX, s.x);
    maxX = std::max(maxX, s.x);
  }
  bead::EventElement bos;
  bos.id = 0;
  bos.elemType = bead::ElemType::Bos;
  bos.order = 0;
  bos.x = minX;
  bos.pivotX = minX;
  cluster.elements.push_back(bos);
  int maxId = 0;
  for (const auto& s : specs) {
    cluster.elements.push_back(makeEvent(s));
    maxId = std::max(maxId, s.id);
  }
  bead::EventElement eos;
  eos.id = maxId + 1;
  eos.elemType = bead::ElemType::Eos;
  eos.x = maxX;
  eos.pivotX = maxX;
  cluster.elements.push_back(eos);
  return cluster;
}

}  // namespace beadtest
