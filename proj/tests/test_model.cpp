#include <doctest.h>

#include <algorithm>
#include <set>

#include "bead/model.hpp"
#include "fixtures.hpp"

using namespace bead;
using beadtest::EventSpec;
using beadtest::makeCluster;

TEST_CASE("well-formed cluster validates clean") {
  auto cluster = makeCluster({
      {.id = 1, .x = 2.0},
      {.id = 2, .x = 5.0},
      {.id = 3, .x = 8.0},
  });
  CHECK(validateCluster(cluster).empty());
}

TEST_CASE("missing EOS is reported") {
  auto cluster = makeCluster({{.id = 1, .x = 2.0}});
  cluster.elements.pop_back();
  auto violations = validateCluster(cluster);
  REQUIRE_FALSE(violations.empty());
  bool found = false;
  for (const auto& v : violations) found |= v.rule == "missing-eos";
  CHECK(found);
}

TEST_CASE("duplicate ids are reported with the offender") {
  auto cluster = makeCluster({
      {.id = 4, .x = 2.0},
      {.id = 4, .x = 5.0},
  });
  auto violations = validateCluster(cluster);
  REQUIRE_FALSE(violations.empty());
  bool found = false;
  for (const auto& v : violations) {
    if (v.rule == "duplicate-id" && v.id == 4) found = true;
  }
  CHECK(found);
}

TEST_CASE("non-probability vectors and bad warps are violations") {
  auto cluster = makeCluster({{.id = 1, .x = 2.0}});
  cluster.elements[1].predisposition.divisionVector[3] = 0.7;  // now sums 1.7
  cluster.elements[1].timeWarp = TimeWarp{1, 2};
  auto violations = validateCluster(cluster);
  std::set<std::string> rules;
  for (const auto& v : violations) rules.insert(v.rule);
  CHECK(rules.count("division-vector-not-probability"));
  CHECK(rules.count("bad-timewarp-ratio"));
}

namespace {

RawMeasure makeRaw(std::vector<std::pair<int, double>> staffAndX,
                   std::vector<std::vector<int>> groups) {
  RawMeasure raw;
  raw.staffGroups = std::move(groups);
  int id = 1;
  for (auto [staff, x] : staffAndX) {
    EventSpec spec;
    spec.id = id++;
    spec.staff = staff;
    spec.x = x;
    spec.y1 = staff * kStaffVerticalPitch + 1.0;
    spec.y2 = staff * kStaffVerticalPitch + 2.0;
    raw.events.push_back(beadtest::makeEvent(spec));
  }
  return raw;
}

}  // namespace

TEST_CASE("split produces one cluster per populated group") {
  auto raw = makeRaw({{0, 1.0}, {0, 2.0}, {0, 3.0}, {0, 4.0}, {0, 5.0},
                      {1, 1.5}, {1, 2.5}, {1, 3.5}, {1, 4.5}, {1, 5.5}},
                     {{0}, {1}});
  auto measure = splitMeasure(raw);
  REQUIRE(measure.clusters.size() == 2);
  CHECK(measure.clusters[0].realCount() == 5);
  CHECK(measure.clusters[1].realCount() == 5);
  for (const auto& cluster : measure.clusters) {
    CHECK(validateCluster(cluster).empty());
  }
}

TEST_CASE("a grand-staff group keeps both staves in one cluster") {
  auto raw = makeRaw({{0, 1.0}, {1, 2.0}, {0, 3.0}, {1, 4.0}}, {{0, 1}});
  auto measure = splitMeasure(raw);
  REQUIRE(measure.clusters.size() == 1);
  CHECK(measure.clusters[0].realCount() == 4);
  // Cross-staff interaction preserved: both staff indices present.
  std::set<int> staves;
  for (const auto& e : measure.clusters[0].elements) {
    if (e.isReal()) staves.insert(e.staff);
  }
  CHECK(staves == std::set<int>{0, 1});
}

TEST_CASE("empty groups emit no cluster") {
  auto raw = makeRaw({{0, 1.0}}, {{0}, {2}});
  auto measure = splitMeasure(raw);
  CHECK(measure.clusters.size() == 1);
}

TEST_CASE("events on uncovered staves are rejected") {
  auto raw = makeRaw({{3, 1.0}}, {{0}, {1}});
  CHECK_THROWS_AS(splitMeasure(raw), std::invalid_argument);
}

TEST_CASE("split is a partition of the input events") {
  auto raw = makeRaw({{0, 1.0}, {1, 1.2}, {0, 2.0}, {2, 2.2}, {1, 3.0},
                      {2, 3.3}, {0, 4.0}},
                     {{0}, {1, 2}});
  auto measure = splitMeasure(raw);
  std::multiset<int> seen;
  for (const auto& cluster : measure.clusters) {
    for (const auto& e : cluster.elements) {
      if (e.isReal()) seen.insert(e.id);
    }
  }
  std::multiset<int> expected;
  for (const auto& e : raw.events) expected.insert(e.id);
  CHECK(seen == expected);
}

TEST_CASE("split re-expresses y in the group frame") {
  auto raw = makeRaw({{1, 1.0}, {2, 2.0}}, {{1, 2}});
  auto measure = splitMeasure(raw);
  REQUIRE(measure.clusters.size() == 1);
  const auto& cluster = measure.clusters[0];
  // Group's top staff is 1, so staff-1 events sit near local zero.
  CHECK(cluster.elements[1].y1 == doctest::Approx(1.0));
  CHECK(cluster.elements[2].y1 ==
        doctest::Approx(1.0 + kStaffVerticalPitch));
}

TEST_CASE("ids are assigned in input order when absent") {
  RawMeasure raw;
  raw.staffGroups = {{0}};
  for (int i = 0; i < 3; ++i) {
    EventSpec spec;
    spec.id = 0;  // unassigned
    spec.x = 1.0 + i;
    raw.events.push_back(beadtest::makeEvent(spec));
  }
  auto measure = splitMeasure(raw);
  REQUIRE(measure.clusters.size() == 1);
  const auto& elems = measure.clusters[0].elements;
  CHECK(elems[1].id == 1);
  CHECK(elems[2].id == 2);
  CHECK(elems[3].id == 3);
  CHECK(elems[0].id == 0);              // BOS sentinel
  CHECK(elems.back().id == 4);          // EOS = n + 1
}

TEST_CASE("off-by-epsilon probability vectors are renormalized with a flag") {
  RawMeasure raw;
  raw.staffGroups = {{0}};
  EventSpec spec;
  spec.id = 1;
  spec.x = 1.0;
  auto event = beadtest::makeEvent(spec);
  event.predisposition.divisionVector[2] = 0.5;
  event.predisposition.divisionVector[3] = 0.6;  // sums to 1.1
  raw.events.push_back(event);
  auto measure = splitMeasure(raw);
  REQUIRE(measure.clusters.size() == 1);
  CHECK(measure.clusters[0].renormalizedInput);
  CHECK(validateCluster(measure.clusters[0]).empty());
}

TEST_CASE("adjacency matrix mirrors voice chains") {
  RegulationSolution solution;
  solution.voices = {{1, 2}, {3}};
  solution.buildAdjacency();
  CHECK(solution.adjacency[2][1]);
  CHECK_FALSE(solution.adjacency[1][2]);
  CHECK_FALSE(solution.adjacency[3][1]);
}
