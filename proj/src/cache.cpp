#include "bead/cache.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>

#include "bead/json_io.hpp"

namespace bead {

namespace {

struct Fnv1a {
  uint64_t state = 1469598103934665603ull;

  void mix(uint64_t v) {
    for (int k = 0; k < 8; ++k) {
      state ^= (v >> (k * 8)) & 0xff;
      state *= 1099511628211ull;
    }
  }
  void mix(int v) { mix(uint64_t(uint32_t(v))); }
};

int quantize(double v, double quantum) {
  return int(std::llround(v / quantum));
}

int argmax9(const std::array<double, 9>& v) {
  return int(std::max_element(v.begin(), v.end()) - v.begin());
}

int argmax3(const std::array<double, 3>& v) {
  return int(std::max_element(v.begin(), v.end()) - v.begin());
}

// Thresholded argmax over a feature block, -1 below 0.5.
int featureArgmax(const std::array<double, feature::kCount>& f, int offset,
                  int width) {
  int best = -1;
  double bestV = 0.5;
  for (int k = 0; k < width; ++k) {
    if (f[offset + k] >= bestV) {
      bestV = f[offset + k];
      best = k;
    }
  }
  return best;
}

}  // namespace

std::string fingerprint(const EventCluster& cluster) {
  // Canonical event order: (staff, x, y1), so input permutation is moot.
  std::vector<const EventElement*> events;
  for (const auto& e : cluster.elements) {
    if (e.isReal()) events.push_back(&e);
  }
  std::sort(events.begin(), events.end(),
            [](const EventElement* a, const EventElement* b) {
              return std::tuple(a->staff, a->x, a->y1) <
                     std::tuple(b->staff, b->x, b->y1);
            });

  Fnv1a h;
  h.mix(cluster.measureDuration);
  h.mix(cluster.time8th);
  h.mix(int(events.size()));
  for (const auto* e : events) {
    h.mix(int(e->elemType));
    h.mix(e->staff);
    h.mix(quantize(e->x, 0.25));
    h.mix(quantize(e->pivotX, 0.25));
    h.mix(quantize(e->y1, 0.5));
    h.mix(quantize(e->y2, 0.5));
    h.mix(argmax9(e->predisposition.divisionVector));
    h.mix(argmax3(e->predisposition.dotsVector));
    h.mix(featureArgmax(e->feature, feature::kBeamOpen, 3));
    h.mix(featureArgmax(e->feature, feature::kStemUp, 2));
    h.mix(e->predisposition.grace > 0.5 ? 1 : 0);
    h.mix(e->predisposition.timeWarped > 0.5 ? 1 : 0);
    h.mix(e->predisposition.fullMeasure > 0.5 ? 1 : 0);
    h.mix(e->predisposition.fake > 0.5 ? 1 : 0);
  }

  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h.state));
  return buf;
}

std::string fingerprint(const MeasureInstance& measure) {
  std::string out;
  for (const auto& cluster : measure.clusters) {
    if (!out.empty()) out += '-';
    out += fingerprint(cluster);
  }
  return out.empty() ? "empty" : out;
}

SolutionCache SolutionCache::load(const std::string& path) {
  SolutionCache cache;
  cache.path_ = path;
  std::ifstream in(path);
  if (!in) return cache;  // missing file: empty cache
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto j = io::json::parse(line, nullptr, false);
    if (j.is_discarded()) continue;
    std::string key = j.value("key", "");
    if (key.empty()) continue;
    Provenance prov =
        j.value("provenance", "auto") == "human" ? Provenance::Human
                                                 : Provenance::AutoFine;
    auto solution = io::solutionFromJson(j.at("solution"));
    auto& slot = cache.entries_[key];
    if (prov == Provenance::Human) {
      slot.human = std::move(solution);  // last writer wins per tier
    } else {
      slot.autoFine = std::move(solution);
    }
  }
  return cache;
}

void SolutionCache::append(const std::string& key,
                           const RegulationSolution& solution,
                           Provenance provenance) {
  if (path_.empty()) return;
  std::ofstream out(path_, std::ios::app);
  if (!out) return;
  io::json j;
  j["key"] = key;
  j["provenance"] = provenance == Provenance::Human ? "human" : "auto";
  j["solution"] = io::solutionToJson(solution);
  j["timestamp"] = std::chrono::duration_cast<std::chrono::seconds>(
                       std::chrono::system_clock::now().time_since_epoch())
                       .count();
  out << j.dump() << "\n";
}

bool SolutionCache::put(const std::string& key,
                        const RegulationSolution& solution,
                        Provenance provenance, const QualityReport& report) {
  if (provenance == Provenance::AutoFine && !report.fine) {
    return false;  // only fine solutions enter the automatic tier
  }
  auto& slot = entries_[key];
  if (provenance == Provenance::Human) {
    slot.human = solution;
  } else {
    slot.autoFine = solution;
  }
  append(key, solution, provenance);
  return true;
}

std::optional<RegulationSolution> SolutionCache::get(
    const std::string& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  if (it->second.human) return it->second.human;
  return it->second.autoFine;
}

size_t SolutionCache::size() const { return entries_.size(); }

}  // namespace bead
