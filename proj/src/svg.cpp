#include "bead/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include "bead/timebase.hpp"

namespace bead {

namespace {

constexpr double kTickScale = 0.1;   // px per tick
constexpr double kLaneHeight = 24.0; // px
constexpr double kMarginLeft = 40.0;
constexpr double kMarginTop = 18.0;

const char* kVoiceColors[8] = {"#d64541", "#2e8b57", "#7d3c98", "#2471a3",
                               "#ca6f1e", "#117864", "#884ea0", "#839192"};

double effectiveDuration(const EventAssignment& a) {
  double base = durationTicksReal(std::clamp(a.division, 0, 8),
                                  std::clamp(a.dots, 0, 2));
  if (a.timeWarp) base *= a.timeWarp->ratio();
  return base;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

}  // namespace

std::string emitTimelineSvg(const RegulationSolution& solution,
                            const MeasureInstance& measure) {
  int lanes = std::max<size_t>(1, solution.voices.size());
  // Extra lane for events outside every voice, when any exist.
  std::set<int> inVoice;
  for (const auto& voice : solution.voices) {
    for (int id : voice) inVoice.insert(id);
  }
  std::vector<int> loose;
  for (const auto& [id, a] : solution.eventAssignments) {
    if (!inVoice.count(id)) loose.push_back(id);
  }
  if (!loose.empty()) lanes = int(solution.voices.size()) + 1;

  double width = kMarginLeft + solution.duration * kTickScale + 20.0;
  double height = kMarginTop + lanes * kLaneHeight + 24.0;

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(width)
      << "\" height=\"" << fmt(height) << "\" viewBox=\"0 0 " << fmt(width)
      << " " << fmt(height) << "\">\n";
  out << "  <rect x=\"0\" y=\"0\" width=\"" << fmt(width) << "\" height=\""
      << fmt(height) << "\" fill=\"#fdfdf6\"/>\n";

  // Tick axis with quarter-note gridlines.
  double axisY = kMarginTop + lanes * kLaneHeight + 6.0;
  out << "  <line x1=\"" << fmt(kMarginLeft) << "\" y1=\"" << fmt(axisY)
      << "\" x2=\"" << fmt(kMarginLeft + solution.duration * kTickScale)
      << "\" y2=\"" << fmt(axisY) << "\" stroke=\"#555\"/>\n";
  for (int t = 0; t <= solution.duration; t += kQuarterTicks) {
    double x = kMarginLeft + t * kTickScale;
    out << "  <line x1=\"" << fmt(x) << "\" y1=\"" << fmt(kMarginTop - 4)
        << "\" x2=\"" << fmt(x) << "\" y2=\"" << fmt(axisY)
        << "\" stroke=\"#ddd\"/>\n";
    out << "  <text x=\"" << fmt(x) << "\" y=\"" << fmt(axisY + 12)
        << "\" font-size=\"9\" text-anchor=\"middle\" fill=\"#555\">" << t
        << "</text>\n";
  }

  auto drawBlock = [&](int lane, const EventAssignment& a, int id) {
    double x = kMarginLeft + a.tick * kTickScale;
    double w = std::max(1.5, effectiveDuration(a) * kTickScale - 1.0);
    double y = kMarginTop + lane * kLaneHeight + 3.0;
    double h = kLaneHeight - 6.0;
    const char* color = kVoiceColors[lane % 8];
    bool hollow = a.fake || a.grace;
    out << "  <rect x=\"" << fmt(x) << "\" y=\"" << fmt(y) << "\" width=\""
        << fmt(w) << "\" height=\"" << fmt(h) << "\" rx=\"2\" fill=\""
        << (hollow ? "none" : color) << "\" stroke=\"" << color
        << "\" stroke-width=\"1.2\"/>\n";
    out << "  <text x=\"" << fmt(x + 2.5) << "\" y=\"" << fmt(y + h - 4)
        << "\" font-size=\"9\" fill=\"" << (hollow ? color : "#ffffff")
        << "\">" << id << "</text>\n";
  };

  for (size_t v = 0; v < solution.voices.size(); ++v) {
    for (int id : solution.voices[v]) {
      auto it = solution.eventAssignments.find(id);
      if (it != solution.eventAssignments.end()) {
        drawBlock(int(v), it->second, id);
      }
    }
  }
  std::sort(loose.begin(), loose.end());
  for (int id : loose) {
    drawBlock(int(solution.voices.size()), solution.eventAssignments.at(id),
              id);
  }

  out << "  <text x=\"4\" y=\"" << fmt(kMarginTop - 6)
      << "\" font-size=\"10\" fill=\"#333\">measure " << solution.measureIndex
      << " &#183; " << measure.timeSignature.numerator << "/"
      << measure.timeSignature.denominator << " &#183; " << solution.duration
      << " ticks</text>\n";
  out << "</svg>\n";
  return out.str();
}

}  // namespace bead
