#pragma once
// Measure-fingerprint solution cache with human / auto-fine provenance tiers
// and an append-only JSON-lines store.

#include <map>
#include <optional>
#include <string>

#include "bead/model.hpp"
#include "bead/quality.hpp"

namespace bead {

// Stable digest over element types, staves, quantized geometry (x to 0.25
// staff spaces, y to 0.5), feature-hint argmaxes, measure duration, and
// time8th. Ids, measure indices, and raw probabilities are excluded, and
// events are ordered by (staff, x, y1) before hashing, so the key follows
// the regulation problem rather than page identity.
std::string fingerprint(const EventCluster& cluster);
std::string fingerprint(const MeasureInstance& measure);

enum class Provenance : int { AutoFine = 0, Human = 1 };

class SolutionCache {
 public:
  SolutionCache() = default;

  // Opens (and later appends to) a JSON-lines file. Missing files are
  // treated as empty caches.
  static SolutionCache load(const std::string& path);

  // Human entries are accepted unconditionally; automatic entries only when
  // the report says the solution is fine. Returns whether the entry was
  // stored. Within one provenance tier the last writer wins.
  bool put(const std::string& key, const RegulationSolution& solution,
           Provenance provenance, const QualityReport& report);

  // Highest-provenance entry for the key, if any.
  std::optional<RegulationSolution> get(const std::string& key) const;

  size_t size() const;

 private:
  struct Slot {
    std::optional<RegulationSolution> human;
    std::optional<RegulationSolution> autoFine;
  };
  void append(const std::string& key, const RegulationSolution& solution,
              Provenance provenance);

  std::map<std::string, Slot> entries_;
  std::string path_;  // empty for in-memory caches
};

}  // namespace bead
