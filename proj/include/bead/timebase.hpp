#pragma once
// Duration arithmetic and the mixed-radix vtick codec.

#include <array>
#include <cstdint>
#include <span>

namespace bead {

inline constexpr int kWholeTicks = 1920;    // ticks per whole note
inline constexpr int kQuarterTicks = 480;   // DIVISIONS constant

// Exact ratio of ticks, kept unreduced until asked.
struct Fraction {
  long long num = 0;
  long long den = 1;

  double value() const { return double(num) / double(den); }
  bool isIntegral() const { return den != 0 && num % den == 0; }
  long long integer() const { return num / den; }
  Fraction reduced() const;
};

// duration = 1920 * 2^-division * (2 - 2^-dots).
// Throws std::domain_error on out-of-range arguments and std::domain_error
// ("sub-tick duration") when the formula value is not an integer
// (e.g. division 6 with dots 2, or any division-8 value).
int durationTicks(int division, int dots);

// Same formula without the integrality requirement, for evaluation of
// arbitrary search states.
double durationTicksReal(int division, int dots);

// Exact rational product base * numerator / denominator.
// Throws std::domain_error ("bad timewarp ratio") when numerator/denominator
// is not greater than 1/2.
Fraction warpDuration(long long baseTicks, int numerator, int denominator);

// Mixed-radix tick code over radices (2,2,2,2,2,2,2,3,5), most significant
// first. Place values are (960,480,240,120,60,30,15,5,1). The 13-real vector
// concatenates per-digit one-hots with the zero state dropped (7x1 + 2 + 4).
struct VtickCode {
  int quotient = 0;  // t div 1920, for ticks beyond one whole
  std::array<int, 9> digits{};
  std::array<double, 13> vector{};
};

inline constexpr std::array<int, 9> kVtickRadices = {2, 2, 2, 2, 2, 2, 2, 3, 5};
inline constexpr std::array<int, 9> kVtickPlaceValues = {960, 480, 240, 120,
                                                         60,  30,  15,  5, 1};

// Throws std::out_of_range for negative ticks. Ticks >= 1920 are encoded as
// (quotient, remainder code) so the codec stays total on long measures.
VtickCode vtickEncode(int tick);

// Throws std::out_of_range when a digit exceeds its radix.
int vtickDecode(const VtickCode& code);

// Rebuild digits from a (possibly soft) 13-real vector: per digit block the
// strongest entry at or above 0.5 wins, everything below 0.5 means digit 0,
// and an exact tie between hot entries is a malformed block.
// Throws std::invalid_argument on malformed blocks.
std::array<int, 9> vtickDigitsFromVector(std::span<const double> vec);

}  // namespace bead
