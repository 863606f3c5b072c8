#include "bead/picker.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "bead/cache.hpp"
#include "bead/paraff.hpp"
#include "bead/timebase.hpp"

namespace bead {

namespace {

constexpr double kExpectedAdvance = 2.0;  // staff spaces per chain step
constexpr double kAdvanceSigma = 2.0;
constexpr double kEosScoreResidue = 0.3;
constexpr double kEosScoreEmpty = 1e6;
constexpr double kSpecialCaseDamping = 0.01;

int snap60(double t) { return int(std::llround(t / 60.0)) * 60; }

void validatePrefix(const EventCluster& cluster, const PrefixState& prefix) {
  for (const auto& [id, order] : prefix.fixedOrders) {
    if (cluster.indexOfId(id) < 0) {
      throw std::invalid_argument("prefix references unknown id " +
                                  std::to_string(id));
    }
    (void)order;
  }
}

std::array<double, 9> passthrough9(const std::array<double, 9>& v) {
  std::array<double, 9> out{};
  double sum = 0.0;
  for (int i = 0; i < 9; ++i) {
    out[i] = std::max(0.0, v[i]);
    sum += out[i];
  }
  if (sum <= 0.0) {
    out.fill(1.0 / 9.0);
  } else {
    for (auto& x : out) x /= sum;
  }
  return out;
}

std::array<double, 3> passthrough3(const std::array<double, 3>& v) {
  std::array<double, 3> out{};
  double sum = 0.0;
  for (int i = 0; i < 3; ++i) {
    out[i] = std::max(0.0, v[i]);
    sum += out[i];
  }
  if (sum <= 0.0) {
    out.fill(1.0 / 3.0);
  } else {
    for (auto& x : out) x /= sum;
  }
  return out;
}

}  // namespace

std::string PrefixState::digest() const {
  std::vector<std::pair<int, int>> byOrder;  // (order, id)
  for (const auto& [id, order] : fixedOrders) byOrder.push_back({order, id});
  std::sort(byOrder.begin(), byOrder.end());
  std::string out;
  for (size_t i = 0; i < byOrder.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(byOrder[i].second);
  }
  out += '@';
  out += std::to_string(tip);
  return out;
}

void checkPrediction(const Prediction& prediction, const EventCluster& cluster,
                     const PrefixState& prefix) {
  if (prediction.successor.size() != cluster.elements.size() ||
      prediction.elements.size() != cluster.elements.size()) {
    throw std::invalid_argument("prediction size mismatch");
  }
  double sum = 0.0;
  for (size_t i = 0; i < prediction.successor.size(); ++i) {
    double p = prediction.successor[i];
    if (p < 0.0) throw std::invalid_argument("negative successor mass");
    const auto& e = cluster.elements[i];
    bool eligible = (e.isReal() && !prefix.isFixed(e.id)) ||
                    e.elemType == ElemType::Eos;
    if (!eligible && p != 0.0) {
      throw std::invalid_argument("successor mass on ineligible element id " +
                                  std::to_string(e.id));
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw std::invalid_argument("successor does not sum to 1");
  }
}

// ---------------------------------------------------------------------------
// Rule-based picker
// ---------------------------------------------------------------------------

Prediction RuleBasedPicker::predict(const EventCluster& cluster,
                                    const PrefixState& prefix) const {
  validatePrefix(cluster, prefix);
  const auto& elems = cluster.elements;
  Prediction pred;
  pred.successor.assign(elems.size(), 0.0);
  pred.elements.resize(elems.size());

  // Coarse horizontal grouping: overlap-chained columns on [x-0.5, x+0.5].
  std::vector<int> realIdx;
  for (size_t i = 0; i < elems.size(); ++i) {
    if (elems[i].isReal()) realIdx.push_back(int(i));
  }
  std::sort(realIdx.begin(), realIdx.end(),
            [&](int a, int b) { return elems[a].x < elems[b].x; });
  std::vector<double> columnMeanX(elems.size(), 0.0);
  {
    size_t k = 0;
    while (k < realIdx.size()) {
      size_t start = k;
      double hi = elems[realIdx[k]].x + 0.5;
      double sum = elems[realIdx[k]].x;
      ++k;
      while (k < realIdx.size() && elems[realIdx[k]].x - 0.5 <= hi) {
        hi = std::max(hi, elems[realIdx[k]].x + 0.5);
        sum += elems[realIdx[k]].x;
        ++k;
      }
      double mean = sum / double(k - start);
      for (size_t j = start; j < k; ++j) columnMeanX[realIdx[j]] = mean;
    }
  }

  double minX = 0.0, maxX = 0.0;
  if (!realIdx.empty()) {
    minX = elems[*std::min_element(realIdx.begin(), realIdx.end(),
                                   [&](int a, int b) {
                                     return elems[a].x < elems[b].x;
                                   })].x;
    maxX = elems[*std::max_element(realIdx.begin(), realIdx.end(),
                                   [&](int a, int b) {
                                     return elems[a].x < elems[b].x;
                                   })].x;
  }
  double span = maxX - minX;

  // Tick estimates: linear interpolation between the BOS anchor (tick 0 at
  // min x) and the EOS anchor (measure duration at max x), snapped to the
  // 60-tick grid; column members share the column's estimate.
  for (size_t i = 0; i < elems.size(); ++i) {
    const auto& e = elems[i];
    auto& out = pred.elements[i];
    if (e.elemType == ElemType::Bos) {
      out.tickEstimate = 0;
      continue;
    }
    if (e.elemType == ElemType::Eos) {
      out.tickEstimate = cluster.measureDuration;
      continue;
    }
    if (!e.isReal()) continue;
    double t = 0.0;
    if (span > 0.0) {
      t = (columnMeanX[i] - minX) / span * double(cluster.measureDuration);
    }
    out.tickEstimate = snap60(std::clamp(t, 0.0, double(cluster.measureDuration)));
    out.divisionVector = passthrough9(e.predisposition.divisionVector);
    out.dotsVector = passthrough3(e.predisposition.dotsVector);
    out.grace = e.predisposition.grace;
    out.timeWarped = e.predisposition.timeWarped;
    out.fullMeasure = e.predisposition.fullMeasure;
    out.fake = e.predisposition.fake;
  }

  // Left-to-right continuation: the voice in progress ends at the fixed event
  // with the highest order; a pending voice break falls back to a fresh
  // anchor so the leftmost candidate leads.
  int anchorIdx = -1;
  int maxOrder = 0;
  for (size_t i = 0; i < elems.size(); ++i) {
    if (!elems[i].isReal()) continue;
    auto it = prefix.fixedOrders.find(elems[i].id);
    if (it != prefix.fixedOrders.end() && it->second >= maxOrder) {
      maxOrder = it->second;
      if (it->second > 0) anchorIdx = int(i);
    }
  }
  bool midVoice = anchorIdx >= 0 && prefix.tip == maxOrder + 1;
  double anchorX = midVoice ? elems[anchorIdx].x : minX - kExpectedAdvance;

  int eosIdx = int(elems.size()) - 1;
  bool anyResidue = false;
  for (size_t i = 0; i < elems.size(); ++i) {
    const auto& e = elems[i];
    if (!e.isReal() || prefix.isFixed(e.id)) continue;
    anyResidue = true;
    double score =
        std::exp(-std::abs(e.x - anchorX - kExpectedAdvance) / kAdvanceSigma);
    const auto& pd = e.predisposition;
    if (pd.grace > 0.5 || pd.fullMeasure > 0.5 || pd.fake > 0.5) {
      score *= kSpecialCaseDamping;  // keep special cases out of chains
    }
    pred.successor[i] = score;
  }
  pred.successor[eosIdx] = anyResidue ? kEosScoreResidue : kEosScoreEmpty;

  double sum = 0.0;
  for (double p : pred.successor) sum += p;
  for (double& p : pred.successor) p /= sum;
  return pred;
}

// ---------------------------------------------------------------------------
// Oracle picker
// ---------------------------------------------------------------------------

OraclePicker::OraclePicker(const paraff::TopologySample& gold) {
  voices_ = gold.voices;
  measureDuration_ = gold.measureDuration;
  for (const auto& e : gold.events) {
    GoldEvent g;
    g.tick = e.tick;
    g.division = e.division;
    g.dots = e.dots;
    g.timeWarped = e.timeWarp.has_value();
    g.isRest = e.isRest;
    events_[e.id] = g;
  }
}

Prediction OraclePicker::predict(const EventCluster& cluster,
                                 const PrefixState& prefix) const {
  validatePrefix(cluster, prefix);
  const auto& elems = cluster.elements;
  Prediction pred;
  pred.successor.assign(elems.size(), 0.0);
  pred.elements.resize(elems.size());

  for (size_t i = 0; i < elems.size(); ++i) {
    const auto& e = elems[i];
    auto& out = pred.elements[i];
    if (e.elemType == ElemType::Bos) {
      out.tickEstimate = 0;
      continue;
    }
    if (e.elemType == ElemType::Eos) {
      out.tickEstimate = measureDuration_;
      continue;
    }
    auto it = events_.find(e.id);
    if (it == events_.end()) continue;
    out.divisionVector[it->second.division] = 1.0;
    out.dotsVector[it->second.dots] = 1.0;
    out.tickEstimate = it->second.tick;
    out.timeWarped = it->second.timeWarped ? 1.0 : 0.0;
  }

  // Reconstruct chains from the fixed orders (gap rule) and match them
  // against gold voices.
  std::vector<std::pair<int, int>> byOrder;  // (order, id)
  for (const auto& [id, order] : prefix.fixedOrders) {
    if (id != 0) byOrder.push_back({order, id});
  }
  std::sort(byOrder.begin(), byOrder.end());
  std::vector<std::vector<int>> chains;
  int prevOrder = 0;
  for (const auto& [order, id] : byOrder) {
    if (chains.empty() || order - prevOrder > 1) chains.push_back({});
    chains.back().push_back(id);
    prevOrder = order;
  }
  int maxOrder = byOrder.empty() ? 0 : byOrder.back().first;
  bool midVoice = !chains.empty() && prefix.tip == maxOrder + 1;

  int eosIdx = int(elems.size()) - 1;
  auto oneHotEos = [&] { pred.successor[eosIdx] = 1.0; };

  // Map each chain to the gold voice holding its first id.
  std::set<size_t> consumed;
  bool diverged = false;
  const std::vector<int>* openVoice = nullptr;
  size_t openLen = 0;
  for (size_t c = 0; c < chains.size() && !diverged; ++c) {
    const auto& chain = chains[c];
    size_t v = voices_.size();
    for (size_t k = 0; k < voices_.size(); ++k) {
      if (!voices_[k].empty() && voices_[k].front() == chain.front()) {
        v = k;
        break;
      }
    }
    if (v == voices_.size() || consumed.count(v) ||
        chain.size() > voices_[v].size() ||
        !std::equal(chain.begin(), chain.end(), voices_[v].begin())) {
      diverged = true;
      break;
    }
    bool isLast = c + 1 == chains.size();
    if (isLast && midVoice) {
      openVoice = &voices_[v];
      openLen = chain.size();
    }
    consumed.insert(v);
  }

  if (diverged) {
    oneHotEos();  // off the gold path; close out quickly
    return pred;
  }

  if (midVoice && openVoice) {
    if (openLen == openVoice->size()) {
      oneHotEos();  // gold voice complete
      return pred;
    }
    int nextId = (*openVoice)[openLen];
    int idx = cluster.indexOfId(nextId);
    if (idx < 0) {
      oneHotEos();
      return pred;
    }
    pred.successor[idx] = 1.0;
    return pred;
  }

  // Fresh voice: uniform mass over the heads of unconsumed gold voices,
  // mirroring the multi-hot boundary labels.
  std::vector<int> headIdx;
  for (size_t v = 0; v < voices_.size(); ++v) {
    if (consumed.count(v) || voices_[v].empty()) continue;
    int idx = cluster.indexOfId(voices_[v].front());
    if (idx >= 0) headIdx.push_back(idx);
  }
  if (headIdx.empty()) {
    oneHotEos();
    return pred;
  }
  for (int idx : headIdx) {
    pred.successor[idx] = 1.0 / double(headIdx.size());
  }
  return pred;
}

// ---------------------------------------------------------------------------
// Table picker
// ---------------------------------------------------------------------------

Prediction PredictionRecord::materialize(const EventCluster& cluster) const {
  Prediction prediction;
  prediction.successor.assign(cluster.elements.size(), 0.0);
  prediction.elements.resize(cluster.elements.size());
  for (size_t i = 0; i < cluster.elements.size(); ++i) {
    int id = cluster.elements[i].id;
    if (auto it = successor.find(id); it != successor.end()) {
      prediction.successor[i] = it->second;
    }
    if (auto it = elements.find(id); it != elements.end()) {
      prediction.elements[i] = it->second;
    }
  }
  return prediction;
}

PredictionRecord TablePicker::toRecord(const Prediction& prediction,
                                       const EventCluster& cluster) {
  PredictionRecord record;
  for (size_t i = 0; i < cluster.elements.size(); ++i) {
    int id = cluster.elements[i].id;
    record.successor[id] = prediction.successor[i];
    record.elements[id] = prediction.elements[i];
  }
  return record;
}

std::string TablePicker::key(const EventCluster& cluster,
                             const PrefixState& prefix) {
  return fingerprint(cluster) + ":" + prefix.digest();
}

Prediction TablePicker::predict(const EventCluster& cluster,
                                const PrefixState& prefix) const {
  validatePrefix(cluster, prefix);
  auto it = table_.find(key(cluster, prefix));
  if (it == table_.end()) {
    throw std::out_of_range("no prediction for prefix " + prefix.digest());
  }
  return it->second.materialize(cluster);
}

}  // namespace bead
