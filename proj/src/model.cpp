#include "bead/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

namespace bead {

namespace {

int gcdInt(int a, int b) {
  while (b != 0) {
    int t = a % b;
    a = b;
    b = t;
  }
  return a < 0 ? -a : a;
}

bool isProbabilityVector(const double* v, int n) {
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    if (v[i] < 0.0) return false;
    sum += v[i];
  }
  return std::abs(sum - 1.0) <= 1e-9;
}

// Upstream detectors are noisy; off-by-epsilon vectors are renormalized and
// the cluster keeps a warning flag instead of rejecting the input.
bool renormalize(double* v, int n) {
  double sum = 0.0;
  bool touched = false;
  for (int i = 0; i < n; ++i) {
    if (v[i] < 0.0) {
      v[i] = 0.0;
      touched = true;
    }
    sum += v[i];
  }
  if (std::abs(sum - 1.0) <= 1e-9) return touched;
  if (sum <= 0.0) {
    for (int i = 0; i < n; ++i) v[i] = 1.0 / n;
  } else {
    for (int i = 0; i < n; ++i) v[i] /= sum;
  }
  return true;
}

void normalizeEventVectors(EventCluster& cluster, EventElement& e) {
  bool a = renormalize(e.predisposition.divisionVector.data(), 9);
  bool b = renormalize(e.predisposition.dotsVector.data(), 3);
  if (a || b) cluster.renormalizedInput = true;
}

}  // namespace

TimeWarp reduced(const TimeWarp& w) {
  int g = gcdInt(w.numerator, w.denominator);
  if (g <= 0) return w;
  return TimeWarp{w.numerator / g, w.denominator / g};
}

int EventCluster::indexOfId(int id) const {
  for (size_t i = 0; i < elements.size(); ++i) {
    if (elements[i].id == id) return int(i);
  }
  return -1;
}

void EventCluster::resetSolution() {
  for (auto& e : elements) {
    e.order.reset();
    e.tick.reset();
    e.division.reset();
    e.dots.reset();
    e.beam = BeamState::None;
    e.stemDirection = StemDirection::None;
    e.grace = false;
    e.timeWarp.reset();
    e.fullMeasure = false;
    e.fake = false;
  }
  if (!elements.empty() && elements.front().elemType == ElemType::Bos) {
    elements.front().order = 0;
  }
}

void RegulationSolution::buildAdjacency() {
  int maxId = 0;
  for (const auto& voice : voices) {
    for (int id : voice) maxId = std::max(maxId, id);
  }
  adjacency.assign(maxId + 1, std::vector<bool>(maxId + 1, false));
  for (const auto& voice : voices) {
    for (size_t k = 1; k < voice.size(); ++k) {
      adjacency[voice[k]][voice[k - 1]] = true;
    }
  }
}

const EventElement* MeasureInstance::findEvent(int id) const {
  for (const auto& cluster : clusters) {
    for (const auto& e : cluster.elements) {
      if (e.isReal() && e.id == id) return &e;
    }
  }
  return nullptr;
}

EventElement* MeasureInstance::findEvent(int id) {
  return const_cast<EventElement*>(
      static_cast<const MeasureInstance*>(this)->findEvent(id));
}

std::vector<Violation> validateCluster(const EventCluster& cluster) {
  std::vector<Violation> out;
  const auto& elems = cluster.elements;

  if (elems.empty() || elems.front().elemType != ElemType::Bos) {
    out.push_back({"missing-bos", std::nullopt});
  }
  if (elems.size() < 2 || elems.back().elemType != ElemType::Eos) {
    out.push_back({"missing-eos", std::nullopt});
  }

  std::set<int> seen;
  for (size_t i = 0; i < elems.size(); ++i) {
    const auto& e = elems[i];
    bool interior = i > 0 && i + 1 < elems.size();
    if (interior && !e.isReal()) {
      out.push_back({"bad-elem-type", e.id});
    }
    if (!interior && i == 0 && e.elemType == ElemType::Eos) {
      out.push_back({"bos-eos-swapped", e.id});
    }
    if (e.elemType == ElemType::Bos && i != 0) {
      out.push_back({"stray-bos", e.id});
    }
    if (e.elemType == ElemType::Eos && i + 1 != elems.size()) {
      out.push_back({"stray-eos", e.id});
    }
    if (!seen.insert(e.id).second) {
      out.push_back({"duplicate-id", e.id});
    }
    if (e.isSentinel() && (e.division || e.dots || e.beam != BeamState::None)) {
      out.push_back({"sentinel-with-attributes", e.id});
    }
    if (e.timeWarp && e.timeWarp->ratio() <= 0.5) {
      out.push_back({"bad-timewarp-ratio", e.id});
    }
    if (e.isReal()) {
      if (!isProbabilityVector(e.predisposition.divisionVector.data(), 9)) {
        out.push_back({"division-vector-not-probability", e.id});
      }
      if (!isProbabilityVector(e.predisposition.dotsVector.data(), 3)) {
        out.push_back({"dots-vector-not-probability", e.id});
      }
    }
  }
  if (!elems.empty() && elems.front().elemType == ElemType::Bos &&
      elems.front().order.value_or(0) != 0) {
    out.push_back({"bos-order-not-zero", elems.front().id});
  }
  if (cluster.measureDuration <= 0) {
    out.push_back({"bad-measure-duration", std::nullopt});
  }
  if (cluster.time8th < 1 || cluster.time8th > 16) {
    out.push_back({"bad-time8th", std::nullopt});
  }
  return out;
}

MeasureInstance splitMeasure(const RawMeasure& raw) {
  // Each staff must be covered by exactly one group.
  std::map<int, int> staffToGroup;
  for (size_t g = 0; g < raw.staffGroups.size(); ++g) {
    for (int staff : raw.staffGroups[g]) {
      auto [it, inserted] = staffToGroup.emplace(staff, int(g));
      if (!inserted) {
        throw std::invalid_argument("staff " + std::to_string(staff) +
                                    " appears in two staff groups");
      }
    }
  }

  MeasureInstance measure;
  measure.measureIndex = raw.measureIndex;
  measure.timeSignature = raw.timeSignature;
  measure.duration = raw.duration;
  measure.contextTerms = raw.contextTerms;

  std::vector<std::vector<EventElement>> byGroup(raw.staffGroups.size());
  int nextId = 1;
  std::set<int> usedIds;
  for (const auto& e : raw.events) {
    if (e.id > 0) usedIds.insert(e.id);
  }
  for (const auto& ev : raw.events) {
    auto it = staffToGroup.find(ev.staff);
    if (it == staffToGroup.end()) {
      throw std::invalid_argument("event staff " + std::to_string(ev.staff) +
                                  " not in any staff group");
    }
    EventElement e = ev;
    if (e.id <= 0) {
      while (usedIds.count(nextId)) ++nextId;
      e.id = nextId;
      usedIds.insert(nextId);
    }
    byGroup[it->second].push_back(std::move(e));
  }

  for (size_t g = 0; g < byGroup.size(); ++g) {
    if (byGroup[g].empty()) continue;  // non-empty groups only
    EventCluster cluster;
    cluster.staffGroup = int(g);
    cluster.measureDuration = raw.duration;
    cluster.time8th = raw.time8th;

    int topStaff = *std::min_element(raw.staffGroups[g].begin(),
                                     raw.staffGroups[g].end());
    double yOrigin = topStaff * kStaffVerticalPitch;

    int maxId = 0;
    for (const auto& e : byGroup[g]) maxId = std::max(maxId, e.id);

    EventElement bos;
    bos.id = 0;
    bos.elemType = ElemType::Bos;
    bos.order = 0;
    double minX = byGroup[g].front().x, maxX = minX;
    for (const auto& e : byGroup[g]) {
      minX = std::min(minX, e.x);
      maxX = std::max(maxX, e.x);
    }
    bos.x = minX;
    bos.pivotX = minX;
    cluster.elements.push_back(bos);

    for (auto& e : byGroup[g]) {
      e.y1 -= yOrigin;
      e.y2 -= yOrigin;
      normalizeEventVectors(cluster, e);
      cluster.elements.push_back(std::move(e));
    }

    EventElement eos;
    eos.id = maxId + 1;
    eos.elemType = ElemType::Eos;
    eos.x = maxX;
    eos.pivotX = maxX;
    cluster.elements.push_back(eos);

    measure.clusters.push_back(std::move(cluster));
  }
  return measure;
}

}  // namespace bead
