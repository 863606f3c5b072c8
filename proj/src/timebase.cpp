#include "bead/timebase.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace bead {

Fraction Fraction::reduced() const {
  long long g = std::gcd(num < 0 ? -num : num, den < 0 ? -den : den);
  if (g == 0) return *this;
  return Fraction{num / g, den / g};
}

double durationTicksReal(int division, int dots) {
  return kWholeTicks * std::exp2(-division) * (2.0 - std::exp2(-dots));
}

int durationTicks(int division, int dots) {
  if (division < 0 || division > 8) {
    throw std::domain_error("division out of range [0,8]: " +
                            std::to_string(division));
  }
  if (dots < 0 || dots > 2) {
    throw std::domain_error("dots out of range [0,2]: " + std::to_string(dots));
  }
  // 1920 * 2^-d * (2 - 2^-o) = 1920 * (2^(o+1) - 1) / 2^(d+o)
  long long num = 1920LL * ((1LL << (dots + 1)) - 1);
  long long den = 1LL << (division + dots);
  if (num % den != 0) {
    throw std::domain_error("sub-tick duration for division " +
                            std::to_string(division) + ", dots " +
                            std::to_string(dots));
  }
  return int(num / den);
}

Fraction warpDuration(long long baseTicks, int numerator, int denominator) {
  if (numerator <= 0 || denominator <= 0 ||
      2LL * numerator <= denominator) {
    throw std::domain_error("bad timewarp ratio " + std::to_string(numerator) +
                            "/" + std::to_string(denominator));
  }
  return Fraction{baseTicks * numerator, denominator}.reduced();
}

namespace {

// Offset of each digit's block inside the 13-real vector.
constexpr std::array<int, 9> blockOffset() {
  std::array<int, 9> off{};
  int pos = 0;
  for (int i = 0; i < 9; ++i) {
    off[i] = pos;
    pos += kVtickRadices[i] - 1;
  }
  return off;
}
constexpr std::array<int, 9> kBlockOffset = blockOffset();

}  // namespace

VtickCode vtickEncode(int tick) {
  if (tick < 0) {
    throw std::out_of_range("vtick encode of negative tick " +
                            std::to_string(tick));
  }
  VtickCode code;
  code.quotient = tick / kWholeTicks;
  int rem = tick % kWholeTicks;
  for (int i = 8; i >= 0; --i) {
    code.digits[i] = rem % kVtickRadices[i];
    rem /= kVtickRadices[i];
  }
  for (int i = 0; i < 9; ++i) {
    if (code.digits[i] > 0) {
      code.vector[kBlockOffset[i] + code.digits[i] - 1] = 1.0;
    }
  }
  return code;
}

int vtickDecode(const VtickCode& code) {
  int value = 0;
  for (int i = 0; i < 9; ++i) {
    if (code.digits[i] < 0 || code.digits[i] >= kVtickRadices[i]) {
      throw std::out_of_range("vtick digit " + std::to_string(i) +
                              " exceeds radix");
    }
    value += code.digits[i] * kVtickPlaceValues[i];
  }
  return code.quotient * kWholeTicks + value;
}

std::array<int, 9> vtickDigitsFromVector(std::span<const double> vec) {
  if (vec.size() != 13) {
    throw std::invalid_argument("vtick vector must have 13 entries");
  }
  std::array<int, 9> digits{};
  for (int i = 0; i < 9; ++i) {
    int width = kVtickRadices[i] - 1;
    double best = 0.0;
    int bestIdx = -1;
    bool tie = false;
    for (int k = 0; k < width; ++k) {
      double v = vec[kBlockOffset[i] + k];
      if (v < 0.5) continue;
      if (bestIdx < 0 || v > best) {
        best = v;
        bestIdx = k;
        tie = false;
      } else if (v == best) {
        tie = true;
      }
    }
    if (tie) {
      throw std::invalid_argument("ambiguous vtick digit block " +
                                  std::to_string(i));
    }
    digits[i] = bestIdx < 0 ? 0 : bestIdx + 1;
  }
  return digits;
}

}  // namespace bead
