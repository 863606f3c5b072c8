#include <doctest.h>

#include <stdexcept>

#include "bead/timebase.hpp"

using namespace bead;

TEST_CASE("duration formula reproduces the reference table") {
  CHECK(durationTicks(0, 0) == 1920);  // whole
  CHECK(durationTicks(1, 0) == 960);   // half
  CHECK(durationTicks(2, 0) == 480);   // quarter
  CHECK(durationTicks(3, 0) == 240);   // eighth
  CHECK(durationTicks(4, 0) == 120);   // sixteenth
  CHECK(durationTicks(2, 1) == 720);   // dotted quarter
  CHECK(durationTicks(1, 1) == 1440);  // dotted half
  CHECK(durationTicks(2, 2) == 840);   // double-dotted quarter
  CHECK(durationTicks(3, 1) == 360);   // dotted eighth
}

TEST_CASE("sub-tick division/dots pairs are rejected") {
  CHECK_THROWS_AS(durationTicks(6, 2), std::domain_error);
  CHECK_THROWS_AS(durationTicks(7, 1), std::domain_error);
  CHECK_THROWS_AS(durationTicks(8, 0), std::domain_error);
  CHECK_THROWS_AS(durationTicks(8, 2), std::domain_error);
  CHECK_THROWS_AS(durationTicks(-1, 0), std::domain_error);
  CHECK_THROWS_AS(durationTicks(9, 0), std::domain_error);
  CHECK_THROWS_AS(durationTicks(2, 3), std::domain_error);
}

TEST_CASE("duration is monotone in division and dots") {
  for (int dots = 0; dots <= 2; ++dots) {
    double prev = 1e18;
    for (int division = 0; division <= 8; ++division) {
      double d = durationTicksReal(division, dots);
      CHECK(d < prev);
      prev = d;
    }
  }
  for (int division = 0; division <= 8; ++division) {
    CHECK(durationTicksReal(division, 0) < durationTicksReal(division, 1));
    CHECK(durationTicksReal(division, 1) < durationTicksReal(division, 2));
  }
}

TEST_CASE("warp duration is an exact rational product") {
  auto triplet = warpDuration(240, 2, 3);
  CHECK(triplet.isIntegral());
  CHECK(triplet.integer() == 160);

  auto identity = warpDuration(480, 1, 1);
  CHECK(identity.integer() == 480);

  auto threeQuarters = warpDuration(480, 3, 4);
  CHECK(threeQuarters.integer() == 360);

  auto inexact = warpDuration(100, 2, 3);  // 200/3
  CHECK_FALSE(inexact.isIntegral());
  CHECK(inexact.num == 200);
  CHECK(inexact.den == 3);
}

TEST_CASE("warp ratios at or below one half are errors") {
  CHECK_THROWS_AS(warpDuration(480, 1, 2), std::domain_error);
  CHECK_THROWS_AS(warpDuration(480, 1, 3), std::domain_error);
  CHECK_THROWS_AS(warpDuration(480, 0, 1), std::domain_error);
  CHECK_NOTHROW(warpDuration(480, 2, 3));
}

TEST_CASE("vtick worked example: 1234") {
  auto code = vtickEncode(1234);
  // 1234 = 960 + 240 + 30 + 4.
  std::array<int, 9> expected = {1, 0, 1, 0, 0, 1, 0, 0, 4};
  CHECK(code.digits == expected);
  std::array<double, 13> vec = {1, 0, 1, 0, 0, 1, 0, /*r3*/ 0, 0,
                                /*r5*/ 0, 0, 0, 1};
  CHECK(code.vector == vec);
  CHECK(vtickDecode(code) == 1234);
}

TEST_CASE("vtick zero and extremes") {
  auto zero = vtickEncode(0);
  for (int d : zero.digits) CHECK(d == 0);
  for (double v : zero.vector) CHECK(v == 0.0);

  // Independent mixed-radix oracle for 1919.
  int t = 1919;
  std::array<int, 9> oracle{};
  for (int i = 8; i >= 0; --i) {
    oracle[i] = t % kVtickRadices[i];
    t /= kVtickRadices[i];
  }
  CHECK(oracle == std::array<int, 9>{1, 1, 1, 1, 1, 1, 1, 2, 4});
  CHECK(vtickEncode(1919).digits == oracle);
}

TEST_CASE("vtick round trip is exhaustive over one whole note") {
  for (int t = 0; t < 1920; ++t) {
    CHECK(vtickDecode(vtickEncode(t)) == t);
  }
}

TEST_CASE("vtick digits dot place values reproduce the tick") {
  for (int t : {0, 1, 59, 60, 479, 480, 1000, 1234, 1919}) {
    auto code = vtickEncode(t);
    int acc = 0;
    for (int i = 0; i < 9; ++i) acc += code.digits[i] * kVtickPlaceValues[i];
    CHECK(acc == t);
  }
}

TEST_CASE("vtick overflow uses a whole-note quotient") {
  auto code = vtickEncode(2880);  // a 3/2 measure
  CHECK(code.quotient == 1);
  CHECK(vtickDecode(code) == 2880);
  CHECK(vtickDecode(vtickEncode(5555)) == 5555);
  CHECK_THROWS_AS(vtickEncode(-1), std::out_of_range);
}

TEST_CASE("vtick decode validates digits") {
  VtickCode code;
  code.digits = {0, 0, 0, 0, 0, 0, 0, 3, 0};  // radix-3 digit out of range
  CHECK_THROWS_AS(vtickDecode(code), std::out_of_range);
}

TEST_CASE("vector decoding accepts soft values and flags ambiguity") {
  auto code = vtickEncode(1234);
  // Soften the one-hot entries; argmax with a 0.5 floor still decodes.
  std::array<double, 13> soft{};
  for (int i = 0; i < 13; ++i) {
    soft[i] = code.vector[i] > 0.5 ? 0.8 : 0.2;
  }
  auto digits = vtickDigitsFromVector(soft);
  CHECK(digits == code.digits);

  // Everything below threshold means zero digits.
  std::array<double, 13> cold{};
  cold.fill(0.4);
  for (int d : vtickDigitsFromVector(cold)) CHECK(d == 0);

  // Two exact-tied hot entries in one block are malformed.
  std::array<double, 13> dup{};
  dup[9] = 1.0;
  dup[10] = 1.0;
  CHECK_THROWS_AS(vtickDigitsFromVector(dup), std::invalid_argument);

  // Distinct hot values pick the stronger entry.
  std::array<double, 13> graded{};
  graded[9] = 0.6;
  graded[10] = 0.9;
  CHECK(vtickDigitsFromVector(graded)[8] == 2);
}
