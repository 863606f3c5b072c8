#include "bead/paraff.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "bead/timebase.hpp"

namespace bead::paraff {

namespace {

// Deterministic PRNG helpers (stream independent of libstdc++ details).
uint64_t splitmix64(uint64_t& state) {
  state += 0x9e3779b97f4a7c15ull;
  uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

double u01(uint64_t& state) {
  return double(splitmix64(state) >> 11) * 0x1.0p-53;
}

uint64_t mixSeed(uint64_t a, uint64_t b) {
  uint64_t s = a ^ (b * 0x9e3779b97f4a7c15ull + 0x243f6a8885a308d3ull);
  splitmix64(s);
  return s;
}

}  // namespace

const char* groupName(TokenGroup g) {
  switch (g) {
    case TokenGroup::Special: return "Special";
    case TokenGroup::Staff: return "Staff";
    case TokenGroup::Clef: return "Clef";
    case TokenGroup::Key: return "Key";
    case TokenGroup::TimeNum: return "TimeNum";
    case TokenGroup::TimeDen: return "TimeDen";
    case TokenGroup::Pitch: return "Pitch";
    case TokenGroup::Accidental: return "Accidental";
    case TokenGroup::Octave: return "Octave";
    case TokenGroup::Duration: return "Duration";
    case TokenGroup::Dot: return "Dot";
    case TokenGroup::Beam: return "Beam";
    case TokenGroup::Rest: return "Rest";
    case TokenGroup::Warp: return "Warp";
    case TokenGroup::Expressive: return "Expressive";
  }
  return "?";
}

Vocabulary::Vocabulary() {
  auto add = [&](const std::string& lexeme, TokenGroup group) {
    Token t{lexeme, group, int(tokens_.size())};
    byLexeme_[lexeme] = t.vocabId;
    tokens_.push_back(std::move(t));
  };
  add("PAD", TokenGroup::Special);
  add("BOM", TokenGroup::Special);
  add("EOM", TokenGroup::Special);
  add("VB", TokenGroup::Special);
  for (int s = 1; s <= 3; ++s) add("S" + std::to_string(s), TokenGroup::Staff);
  add("Cg", TokenGroup::Clef);
  add("Cf", TokenGroup::Clef);
  add("K0", TokenGroup::Key);
  for (int k = 1; k <= 6; ++k) add("K" + std::to_string(k), TokenGroup::Key);
  for (int k = 1; k <= 6; ++k) add("K_" + std::to_string(k), TokenGroup::Key);
  for (int n : {2, 3, 4, 6, 8, 9, 12}) {
    add("TN" + std::to_string(n), TokenGroup::TimeNum);
  }
  for (int d : {2, 4, 8}) add("TD" + std::to_string(d), TokenGroup::TimeDen);
  for (char p : {'a', 'b', 'c', 'd', 'e', 'f', 'g'}) {
    add(std::string(1, p), TokenGroup::Pitch);
  }
  add("As", TokenGroup::Accidental);
  add("Af", TokenGroup::Accidental);
  add("Ass", TokenGroup::Accidental);
  add("Aff", TokenGroup::Accidental);
  add("Osup", TokenGroup::Octave);
  add("Osub", TokenGroup::Octave);
  for (int k : {1, 2, 4, 8, 16, 32, 64}) {
    add("D" + std::to_string(k), TokenGroup::Duration);
  }
  add("Dot", TokenGroup::Dot);
  add("Bl", TokenGroup::Beam);
  add("Br", TokenGroup::Beam);
  add("Rest", TokenGroup::Rest);
  add("RSpace", TokenGroup::Rest);
  for (int n = 2; n <= 16; ++n) add("W" + std::to_string(n), TokenGroup::Warp);
  add("W", TokenGroup::Warp);
  add("Wx", TokenGroup::Warp);
  add("EslurL", TokenGroup::Expressive);
  add("EslurR", TokenGroup::Expressive);
  add("Etie", TokenGroup::Expressive);
  add("Earp", TokenGroup::Expressive);
}

const Vocabulary& Vocabulary::instance() {
  static Vocabulary vocab;
  return vocab;
}

const Token& Vocabulary::lookup(const std::string& lexeme) const {
  auto it = byLexeme_.find(lexeme);
  if (it == byLexeme_.end()) {
    throw std::invalid_argument("unknown Paraff token: " + lexeme);
  }
  return tokens_[it->second];
}

bool Vocabulary::contains(const std::string& lexeme) const {
  return byLexeme_.count(lexeme) > 0;
}

std::vector<Token> tokenize(const std::string& text) {
  std::vector<Token> out;
  std::istringstream in(text);
  std::string lexeme;
  while (in >> lexeme) {
    out.push_back(Vocabulary::instance().lookup(lexeme));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Transition matrix
// ---------------------------------------------------------------------------

namespace {

// Group-level adjacency: entry (i, j) is 1 when tokens of group j can follow
// tokens of group i somewhere in a valid sentence. Context ordering follows
// the measure-head shape K (TN TD) and the inline S [C] switches.
struct TransitionMatrix {
  bool allowed[kGroupCount][kGroupCount] = {};

  TransitionMatrix() {
    auto allow = [&](TokenGroup a, std::initializer_list<TokenGroup> next) {
      for (auto b : next) allowed[int(a)][int(b)] = true;
    };
    using G = TokenGroup;
    // BOM starts the head or a voice; VB/EOM follow closed voices, and empty
    // voices keep Special -> Special legal.
    allow(G::Special, {G::Special, G::Staff, G::Clef, G::Key, G::TimeNum,
                       G::Pitch});
    allow(G::Key, {G::TimeNum, G::Staff, G::Clef, G::Pitch, G::Special});
    allow(G::TimeNum, {G::TimeDen});  // numerator before denominator, always
    allow(G::TimeDen, {G::Staff, G::Clef, G::Pitch, G::Special});
    allow(G::Staff, {G::Clef, G::Pitch, G::Special});
    allow(G::Clef, {G::Staff, G::Pitch, G::Special});
    allow(G::Pitch,
          {G::Pitch, G::Accidental, G::Octave, G::Warp, G::Duration});
    allow(G::Accidental, {G::Pitch, G::Octave, G::Warp, G::Duration});
    allow(G::Octave, {G::Pitch, G::Octave, G::Warp, G::Duration});
    allow(G::Warp, {G::Duration});
    allow(G::Duration, {G::Dot, G::Beam, G::Rest, G::Expressive, G::Pitch,
                        G::Staff, G::Clef, G::Special});
    allow(G::Dot, {G::Dot, G::Beam, G::Rest, G::Expressive, G::Pitch, G::Staff,
                   G::Clef, G::Special});
    allow(G::Beam, {G::Rest, G::Expressive, G::Pitch, G::Staff, G::Clef,
                    G::Special});
    allow(G::Rest, {G::Beam, G::Expressive, G::Pitch, G::Staff, G::Clef,
                    G::Special});
    allow(G::Expressive, {G::Expressive, G::Beam, G::Rest, G::Pitch, G::Staff,
                          G::Clef, G::Special});
  }
};

const TransitionMatrix& matrix() {
  static TransitionMatrix m;
  return m;
}

}  // namespace

bool transitionAllowed(TokenGroup prev, TokenGroup next) {
  return matrix().allowed[int(prev)][int(next)];
}

std::string transitionMatrixJson() {
  std::ostringstream out;
  out << "{\n";
  for (int i = 0; i < kGroupCount; ++i) {
    out << "  \"" << groupName(TokenGroup(i)) << "\": [";
    bool first = true;
    for (int j = 0; j < kGroupCount; ++j) {
      if (!matrix().allowed[i][j]) continue;
      if (!first) out << ", ";
      out << '"' << groupName(TokenGroup(j)) << '"';
      first = false;
    }
    out << "]" << (i + 1 < kGroupCount ? "," : "") << "\n";
  }
  out << "}\n";
  return out.str();
}

int warpReference(int n) {
  if (n < 2 || n > 16) {
    throw std::invalid_argument("warp numerator out of range: " +
                                std::to_string(n));
  }
  if (n == 2) return 3;  // duplet in compound time
  // Largest power of two below n; powers of two themselves take the 3:4
  // compound grouping so the ratio stays above 1/2.
  int p = 1;
  while (p * 2 < n) p *= 2;
  if (p * 2 == n || (n & (n - 1)) == 0) {
    return n * 3 / 4;
  }
  return p;
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

namespace {

int accidentalSemitones(const std::string& lexeme) {
  if (lexeme == "As") return 1;
  if (lexeme == "Af") return -1;
  if (lexeme == "Ass") return 2;
  return -2;  // Aff
}

}  // namespace

MeasureAst parse(const std::vector<Token>& tokens) {
  MeasureAst ast;
  size_t pos = 0;
  auto peek = [&]() -> const Token* {
    return pos < tokens.size() ? &tokens[pos] : nullptr;
  };
  auto expect = [&](const std::string& lexeme) {
    if (!peek() || peek()->lexeme != lexeme) {
      throw ParseError("expected " + lexeme, int(pos));
    }
    ++pos;
  };

  expect("BOM");

  // Measure head: optional key, optional full time signature.
  if (peek() && peek()->group == TokenGroup::Key) {
    const std::string& k = peek()->lexeme;
    ast.keyFifths = k[1] == '_' ? -std::stoi(k.substr(2)) : std::stoi(k.substr(1));
    ++pos;
  }
  if (peek() && peek()->group == TokenGroup::TimeNum) {
    TimeSignature ts;
    ts.numerator = std::stoi(peek()->lexeme.substr(2));
    ++pos;
    if (!peek() || peek()->group != TokenGroup::TimeDen) {
      throw ParseError("time numerator without denominator", int(pos));
    }
    ts.denominator = std::stoi(peek()->lexeme.substr(2));
    ++pos;
    ast.time = ts;
  }

  ast.voices.emplace_back();
  const Token* prevContext = nullptr;
  while (true) {
    const Token* t = peek();
    if (!t) throw ParseError("unterminated measure, missing EOM", int(pos));
    if (t->lexeme == "EOM") {
      ++pos;
      break;
    }
    if (t->lexeme == "VB") {
      ast.voices.emplace_back();
      prevContext = nullptr;
      ++pos;
      continue;
    }
    switch (t->group) {
      case TokenGroup::Staff:
      case TokenGroup::Clef: {
        if (prevContext && prevContext->group == t->group) {
          throw ParseError("redundant context token " + t->lexeme, int(pos));
        }
        ast.voices.back().push_back(ContextToken{*t});
        prevContext = t;
        ++pos;
        break;
      }
      case TokenGroup::Key:
      case TokenGroup::TimeNum:
      case TokenGroup::TimeDen:
        throw ParseError("context token outside measure head: " + t->lexeme,
                         int(pos));
      case TokenGroup::Pitch: {
        prevContext = nullptr;
        EventTerm event;
        while (peek() && peek()->group == TokenGroup::Pitch) {
          PitchUnit unit;
          unit.letter = peek()->lexeme[0];
          ++pos;
          if (peek() && peek()->group == TokenGroup::Accidental) {
            unit.alteration = accidentalSemitones(peek()->lexeme);
            ++pos;
            if (peek() && peek()->group == TokenGroup::Accidental) {
              throw ParseError("stacked accidentals", int(pos));
            }
          }
          while (peek() && peek()->group == TokenGroup::Octave) {
            unit.octaveShift += peek()->lexeme == "Osup" ? 1 : -1;
            ++pos;
          }
          event.pitches.push_back(unit);
        }
        if (peek() && peek()->group == TokenGroup::Warp) {
          const std::string& w = peek()->lexeme;
          if (w == "W") {
            event.warpContinue = true;
          } else if (w == "Wx") {
            event.warpClose = true;
          } else {
            event.warpNumerator = std::stoi(w.substr(1));
          }
          ++pos;
        }
        if (!peek() || peek()->group != TokenGroup::Duration) {
          throw ParseError("event missing duration token", int(pos));
        }
        event.durationDenom = std::stoi(peek()->lexeme.substr(1));
        ++pos;
        while (peek() && peek()->group == TokenGroup::Dot) {
          if (++event.dotCount > 2) {
            throw ParseError("more than two dots", int(pos));
          }
          ++pos;
        }
        while (peek() && (peek()->group == TokenGroup::Beam ||
                          peek()->group == TokenGroup::Rest ||
                          peek()->group == TokenGroup::Expressive)) {
          const std::string& lex = peek()->lexeme;
          if (lex == "Bl") {
            if (event.beamOpen) throw ParseError("duplicate Bl", int(pos));
            event.beamOpen = true;
          } else if (lex == "Br") {
            if (event.beamClose) throw ParseError("duplicate Br", int(pos));
            event.beamClose = true;
          } else if (lex == "Rest") {
            event.rest = true;
          } else if (lex == "RSpace") {
            event.rest = true;
            event.restSpacer = true;
          } else {
            event.expressives.push_back(lex);
          }
          ++pos;
        }
        ast.voices.back().push_back(std::move(event));
        break;
      }
      case TokenGroup::Dot:
        throw ParseError("dot without a preceding duration", int(pos));
      default:
        throw ParseError("unexpected token " + t->lexeme, int(pos));
    }
  }
  if (pos != tokens.size()) {
    throw ParseError("tokens after EOM", int(pos));
  }
  return ast;
}

// ---------------------------------------------------------------------------
// Constrained sampler
// ---------------------------------------------------------------------------

LogitSource uniformNoiseSource(uint64_t seed) {
  return [seed](std::span<const Token> prefix, std::span<double> logits) {
    uint64_t h = seed ^ 0x853c49e6748fea9bull;
    for (const auto& t : prefix) {
      h = mixSeed(h, uint64_t(t.vocabId) + 0x9e37u);
    }
    for (size_t k = 0; k < logits.size(); ++k) {
      uint64_t s = mixSeed(h, k);
      logits[k] = u01(s);
    }
  };
}

namespace {

// Static plausibility prior added to the raw logits; keeps uniform-noise
// sampling from drowning in 64th notes and clef changes.
double tokenPrior(const Token& t) {
  switch (t.group) {
    case TokenGroup::Duration: {
      int d = std::stoi(t.lexeme.substr(1));
      switch (d) {
        case 1: return -0.8;
        case 2: return 0.0;
        case 4: return 0.7;
        case 8: return 0.8;
        case 16: return 0.3;
        case 32: return -0.6;
        default: return -1.2;
      }
    }
    case TokenGroup::Dot: return -0.8;
    case TokenGroup::Accidental: return -1.1;
    case TokenGroup::Octave: return -1.0;
    case TokenGroup::Staff: return -1.0;
    case TokenGroup::Clef: return -1.6;
    case TokenGroup::Expressive: return -1.8;
    case TokenGroup::Rest: return -0.4;
    case TokenGroup::Beam: return 0.1;
    default: return 0.0;
  }
}

struct SamplerState {
  int headPhase = 0;  // 0: want key, 1: want TN, 2: want TD, 3: done
  int timeNum = 4;
  int timeDen = 4;
  long measureDuration = 1920;

  int voiceCount = 1;
  int eventsTotal = 0;
  double voiceFilled = 0.0;  // ticks committed in the current voice

  // Event under construction.
  bool inEvent = false;
  int pitchCount = 0;
  bool warpSlotPassed = false;
  bool durationChosen = false;
  int durationDenom = 0;
  int dotCount = 0;
  double eventDuration = 0.0;  // effective ticks committed so far
  bool postStage = false;
  bool eventHasBl = false;
  bool eventHasBr = false;
  bool eventHasRest = false;
  int exprCount = 0;

  // Beam group state (per voice).
  bool beamOpen = false;
  int beamLength = 0;

  // Warp group state.
  bool warpOpen = false;
  int warpNumerator = 0;
  int warpRemaining = 0;  // events still to emit in the group (incl. current)
  int warpDurDenom = 0;   // first event's duration token value
  int warpDots = 0;
  bool currentEventWarped = false;

  std::set<int> distinctDurations;

  double remaining() const { return double(measureDuration) - voiceFilled; }
};

double warpRatio(const SamplerState& st) {
  if (!st.currentEventWarped) return 1.0;
  return double(warpReference(st.warpNumerator)) / double(st.warpNumerator);
}

double effDuration(int denom, int dots, double ratio) {
  double base = 1920.0 / double(denom);
  return base * (2.0 - std::exp2(-dots)) * ratio;
}

bool integralDuration(int denom, int dots, const SamplerState& st) {
  if (!st.currentEventWarped) {
    long long num = 1920LL * ((1LL << (dots + 1)) - 1);
    long long den = 1LL << dots;
    return (num % (den * denom)) == 0;
  }
  int m = warpReference(st.warpNumerator);
  long long num = 1920LL * ((1LL << (dots + 1)) - 1) * m;
  long long den = (1LL << dots) * (long long)denom * st.warpNumerator;
  return (num % den) == 0;
}

// Close out the event under construction, committing its duration.
void commitEvent(SamplerState& st) {
  if (!st.inEvent) return;
  st.voiceFilled += st.eventDuration;
  st.eventsTotal += 1;
  if (st.eventHasBl) {
    st.beamOpen = true;
    st.beamLength = 1;
  } else if (st.beamOpen) {
    st.beamLength += 1;
  }
  if (st.eventHasBr) {
    st.beamOpen = false;
    st.beamLength = 0;
  }
  if (st.currentEventWarped) {
    st.warpRemaining -= 1;
    if (st.warpRemaining <= 0) st.warpOpen = false;
  }
  st.inEvent = false;
  st.pitchCount = 0;
  st.warpSlotPassed = false;
  st.durationChosen = false;
  st.durationDenom = 0;
  st.dotCount = 0;
  st.eventDuration = 0.0;
  st.postStage = false;
  st.eventHasBl = false;
  st.eventHasBr = false;
  st.eventHasRest = false;
  st.exprCount = 0;
  st.currentEventWarped = false;
}

// Beam state once the in-progress event commits.
bool beamOpenAfterCommit(const SamplerState& st) {
  bool open = st.beamOpen;
  if (st.inEvent) {
    if (st.eventHasBl) open = true;
    if (st.eventHasBr) open = false;
  }
  return open;
}

// Warp-group state once the in-progress event commits.
bool warpOpenAfterCommit(const SamplerState& st) {
  if (st.inEvent && st.currentEventWarped) return st.warpRemaining > 1;
  return st.warpOpen;
}

// Whether a token is legal in the current sampler state. The group matrix
// has already been consulted; this adds the stateful constraints.
bool stateAllows(const Token& t, const SamplerState& st,
                 const SampleConfig& config, const Token& prev) {
  const std::string& lex = t.lexeme;
  if (lex == "PAD" || lex == "BOM") return false;

  if (st.headPhase < 3) {
    if (config.forceHead) {
      switch (st.headPhase) {
        case 0: return t.group == TokenGroup::Key;
        case 1: return t.group == TokenGroup::TimeNum;
        case 2:
          if (t.group != TokenGroup::TimeDen) return false;
          break;
      }
    }
    if (t.group == TokenGroup::TimeDen) {
      // Keep time8th within [1, 16].
      int den = std::stoi(lex.substr(2));
      int t8 = st.timeNum * 8 / den;
      return t8 >= 1 && t8 <= 16 && (st.timeNum * 8) % den == 0;
    }
  }
  if (st.headPhase >= 3 &&
      (t.group == TokenGroup::Key || t.group == TokenGroup::TimeNum ||
       t.group == TokenGroup::TimeDen)) {
    return false;  // head context only
  }

  switch (t.group) {
    case TokenGroup::Special: {
      if (lex == "VB") {
        if (st.inEvent && !st.postStage) return false;
        if (beamOpenAfterCommit(st) || warpOpenAfterCommit(st)) return false;
        if (st.voiceCount >= config.maxVoices) return false;
        // An event in post stage commits on the boundary, which is fine.
        return st.headPhase >= 3;
      }
      if (lex == "EOM") {
        if (st.inEvent && !st.postStage) return false;
        if (beamOpenAfterCommit(st) || warpOpenAfterCommit(st)) return false;
        if (st.voiceCount < config.minVoices) return false;
        if (int(st.distinctDurations.size()) <
                config.minDistinctDurations &&
            st.eventsTotal > 0) {
          return false;
        }
        return st.headPhase >= 3 || !config.forceHead;
      }
      return false;
    }
    case TokenGroup::Staff: {
      if (st.inEvent && !st.postStage) return false;
      int s = lex[1] - '0';
      if (s > config.maxStaves) return false;
      // A context switch commits the current event, so it is only legal when
      // another event can still start afterwards; otherwise an open beam
      // would be stranded.
      if (st.eventsTotal + (st.inEvent ? 1 : 0) >= config.maxEventsPerMeasure) {
        return false;
      }
      double pending = st.inEvent ? st.eventDuration : 0.0;
      return st.remaining() - pending + 1e-9 >= 1920.0 / 64.0;
    }
    case TokenGroup::Clef: {
      if (st.inEvent && !st.postStage) return false;
      if (st.eventsTotal + (st.inEvent ? 1 : 0) >= config.maxEventsPerMeasure) {
        return false;
      }
      double pending = st.inEvent ? st.eventDuration : 0.0;
      return st.remaining() - pending + 1e-9 >= 1920.0 / 64.0;
    }
    case TokenGroup::Key:
      return st.headPhase == 0;
    case TokenGroup::TimeNum:
      return st.headPhase <= 1;
    case TokenGroup::TimeDen:
      return st.headPhase == 2;
    case TokenGroup::Pitch: {
      if (st.inEvent && !st.postStage) {
        // Chord continuation before the warp/duration slot.
        if (st.warpSlotPassed || st.durationChosen) return false;
        return st.pitchCount < config.maxChordSize;
      }
      // Starting a new event; the in-progress event commits on this token,
      // so its duration must come off the budget first.
      if (st.eventsTotal + (st.inEvent ? 1 : 0) >= config.maxEventsPerMeasure) {
        return false;
      }
      double pending = st.inEvent ? st.eventDuration : 0.0;
      double minDur;
      if (warpOpenAfterCommit(st)) {
        double ratio = double(warpReference(st.warpNumerator)) /
                       double(st.warpNumerator);
        minDur = effDuration(st.warpDurDenom, st.warpDots, ratio);
      } else {
        minDur = 1920.0 / 64.0;
      }
      return st.remaining() - pending + 1e-9 >= minDur;
    }
    case TokenGroup::Accidental:
      return st.inEvent && !st.postStage && !st.warpSlotPassed &&
             !st.durationChosen && prev.group == TokenGroup::Pitch;
    case TokenGroup::Octave: {
      if (!(st.inEvent && !st.postStage && !st.warpSlotPassed &&
            !st.durationChosen)) {
        return false;
      }
      // No more than two stacked octave marks.
      return !(prev.group == TokenGroup::Octave);
    }
    case TokenGroup::Warp: {
      if (!st.inEvent || st.postStage || st.durationChosen) return false;
      if (st.warpSlotPassed) return false;
      if (st.warpOpen) {
        if (lex == "W") return st.warpRemaining > 1;
        if (lex == "Wx") return st.warpRemaining == 1;
        return false;
      }
      if (lex == "W" || lex == "Wx") return false;
      int n = std::stoi(lex.substr(1));
      if (std::find(config.warpNumerators.begin(), config.warpNumerators.end(),
                    n) == config.warpNumerators.end()) {
        return false;
      }
      if (st.eventsTotal + n > config.maxEventsPerMeasure) return false;
      // The whole group must fit the remaining budget even at the smallest
      // duration token. The warp slot sits inside the group's first event,
      // which is not committed yet, so nothing is pending here.
      double groupTotal = double(warpReference(n)) * (1920.0 / 64.0);
      return st.remaining() + 1e-9 >= groupTotal;
    }
    case TokenGroup::Duration: {
      if (!st.inEvent || st.durationChosen || st.postStage) return false;
      int denom = std::stoi(lex.substr(1));
      if (st.warpOpen && !st.currentEventWarped) {
        return false;  // the warp slot must be taken first inside a group
      }
      if (st.currentEventWarped) {
        bool firstOfGroup = st.warpRemaining == st.warpNumerator;
        if (!firstOfGroup && denom != st.warpDurDenom) return false;
        if (!integralDuration(denom, 0, st)) return false;
        double groupTotal =
            double(st.warpRemaining) * effDuration(denom, 0, warpRatio(st));
        if (firstOfGroup && st.remaining() + 1e-9 < groupTotal) return false;
        if (!firstOfGroup) return true;  // budget checked at group start
        return true;
      }
      return st.remaining() + 1e-9 >= effDuration(denom, 0, 1.0);
    }
    case TokenGroup::Dot: {
      if (!st.inEvent || !st.durationChosen || st.postStage) return false;
      if (st.dotCount >= 2) return false;
      int newDots = st.dotCount + 1;
      if (!integralDuration(st.durationDenom, newDots, st)) return false;
      if (st.currentEventWarped) {
        bool firstOfGroup = st.warpRemaining == st.warpNumerator;
        if (!firstOfGroup) return newDots <= st.warpDots;
        double groupTotal = double(st.warpRemaining) *
                            effDuration(st.durationDenom, newDots, warpRatio(st));
        return st.remaining() + 1e-9 >= groupTotal;
      }
      return st.remaining() + 1e-9 >=
             effDuration(st.durationDenom, newDots, 1.0);
    }
    case TokenGroup::Beam: {
      if (!st.inEvent || !st.durationChosen) return false;
      if (lex == "Bl") {
        if (st.beamOpen || st.eventHasBl || st.eventHasBr) return false;
        // Opening needs room for at least one more event, in both the event
        // budget and the remaining voice time.
        if (st.eventsTotal + 2 > config.maxEventsPerMeasure) return false;
        return st.remaining() - st.eventDuration + 1e-9 >= 1920.0 / 64.0;
      }
      // Br: close a group opened on an earlier event.
      return st.beamOpen && !st.eventHasBl && !st.eventHasBr &&
             st.beamLength >= 1;
    }
    case TokenGroup::Rest:
      if (!st.inEvent || !st.durationChosen) return false;
      if (st.eventHasRest) return false;
      if (lex == "RSpace") return config.allowRSpace;
      return true;
    case TokenGroup::Expressive:
      return st.inEvent && st.durationChosen && st.exprCount < 2;
  }
  return false;
}

// Extra state-dependent bias: push toward closing voices as they fill and
// toward finishing tuplet groups.
double dynamicBias(const Token& t, const SamplerState& st,
                   const SampleConfig& config) {
  const std::string& lex = t.lexeme;
  double committed = st.voiceFilled + (st.inEvent ? st.eventDuration : 0.0);
  double fill = st.measureDuration > 0
                    ? committed / double(st.measureDuration)
                    : 0.0;
  if (lex == "VB" || lex == "EOM") {
    return fill >= 0.999 ? 3.0 : (fill - 0.8) * 2.0;
  }
  if (t.group == TokenGroup::Duration && !st.warpOpen) {
    // Prefer durations that complete the voice exactly.
    int denom = std::stoi(lex.substr(1));
    double remaining = double(st.measureDuration) - committed;
    if (std::abs(effDuration(denom, 0, 1.0) - remaining) < 1e-9) return 1.2;
  }
  if (t.group == TokenGroup::Beam && lex == "Br" && st.beamLength >= 3) {
    return 2.0;
  }
  if (t.group == TokenGroup::Warp && lex != "W" && lex != "Wx") {
    return config.warpStartBias;
  }
  if (t.group == TokenGroup::Pitch && !st.inEvent) {
    return 0.4;  // keep voices moving
  }
  if (t.group == TokenGroup::Pitch && st.inEvent) {
    return -0.9;  // chords stay occasional
  }
  return 0.0;
}

void applyToken(SamplerState& st, const Token& t) {
  const std::string& lex = t.lexeme;
  if (st.headPhase < 3) {
    if (t.group == TokenGroup::Key) {
      st.headPhase = 1;
      return;
    }
    if (t.group == TokenGroup::TimeNum) {
      st.timeNum = std::stoi(lex.substr(2));
      st.headPhase = 2;
      return;
    }
    if (t.group == TokenGroup::TimeDen) {
      st.timeDen = std::stoi(lex.substr(2));
      st.measureDuration = long(st.timeNum) * 1920 / st.timeDen;
      st.headPhase = 3;
      return;
    }
    st.headPhase = 3;  // head skipped
  }
  switch (t.group) {
    case TokenGroup::Special:
      commitEvent(st);
      if (lex == "VB") {
        st.voiceCount += 1;
        st.voiceFilled = 0.0;
        st.beamOpen = false;
        st.beamLength = 0;
        st.warpOpen = false;
      }
      break;
    case TokenGroup::Staff:
    case TokenGroup::Clef:
      commitEvent(st);
      break;
    case TokenGroup::Pitch:
      if (!st.inEvent || st.postStage) {
        commitEvent(st);
        st.inEvent = true;
        st.pitchCount = 1;
        if (st.warpOpen) {
          st.currentEventWarped = false;  // set when the W slot is taken
        }
      } else {
        st.pitchCount += 1;
      }
      break;
    case TokenGroup::Accidental:
    case TokenGroup::Octave:
      break;
    case TokenGroup::Warp:
      st.warpSlotPassed = true;
      if (lex == "W" || lex == "Wx") {
        st.currentEventWarped = true;
      } else {
        st.warpNumerator = std::stoi(lex.substr(1));
        st.warpOpen = true;
        st.warpRemaining = st.warpNumerator;
        st.currentEventWarped = true;
      }
      break;
    case TokenGroup::Duration: {
      st.durationChosen = true;
      st.durationDenom = std::stoi(lex.substr(1));
      if (st.currentEventWarped &&
          st.warpRemaining == st.warpNumerator) {
        st.warpDurDenom = st.durationDenom;
        st.warpDots = 0;
      }
      st.eventDuration = effDuration(st.durationDenom, 0, warpRatio(st));
      st.postStage = true;
      st.distinctDurations.insert(st.durationDenom * 10);
      break;
    }
    case TokenGroup::Dot:
      st.dotCount += 1;
      if (st.currentEventWarped && st.warpRemaining == st.warpNumerator) {
        st.warpDots = st.dotCount;
      }
      st.eventDuration =
          effDuration(st.durationDenom, st.dotCount, warpRatio(st));
      st.distinctDurations.insert(st.durationDenom * 10 + st.dotCount);
      break;
    case TokenGroup::Beam:
      if (lex == "Bl") st.eventHasBl = true;
      if (lex == "Br") st.eventHasBr = true;
      break;
    case TokenGroup::Rest:
      st.eventHasRest = true;
      break;
    case TokenGroup::Expressive:
      st.exprCount += 1;
      break;
    case TokenGroup::Key:
    case TokenGroup::TimeNum:
    case TokenGroup::TimeDen:
      break;  // head tokens are consumed above
  }
}

}  // namespace

std::vector<Token> sampleMeasure(const LogitSource& logitSource,
                                 const SampleConfig& config) {
  const auto& vocab = Vocabulary::instance();
  const int vocabSize = vocab.size();

  struct Step {
    Token token;
    SamplerState before;
    std::set<int> banned;
  };

  uint64_t rngState = mixSeed(config.seed, 0x5eed5eedull);
  std::vector<Token> tokens = {vocab.lookup("BOM")};
  std::vector<Step> steps;
  SamplerState state;
  int backtracks = 0;
  std::set<int> banned;  // for the next position only

  std::vector<double> logits(vocabSize);
  while (true) {
    const Token& prev = tokens.back();
    logitSource(std::span<const Token>(tokens.data(), tokens.size()),
                std::span<double>(logits.data(), logits.size()));

    bool atCap = int(tokens.size()) >= config.maxTokens - 1;
    std::vector<int> candidates;
    std::vector<double> weights;
    double maxLogit = -1e300;
    for (int k = 0; k < vocabSize; ++k) {
      const Token& cand = vocab.at(k);
      if (banned.count(k)) continue;
      if (!transitionAllowed(prev.group, cand.group)) continue;
      if (!stateAllows(cand, state, config, prev)) continue;
      if (atCap && cand.lexeme != "EOM") continue;
      double score = logits[k] + tokenPrior(cand) +
                     dynamicBias(cand, state, config);
      candidates.push_back(k);
      weights.push_back(score);
      maxLogit = std::max(maxLogit, score);
    }

    if (candidates.empty()) {
      if (steps.empty() || ++backtracks > 16) {
        std::string trail;
        for (const auto& t : tokens) trail += t.lexeme + " ";
        throw std::runtime_error(
            "sampler dead end after 16 backtracks (seed " +
            std::to_string(config.seed) + "): " + trail);
      }
      Step popped = std::move(steps.back());
      steps.pop_back();
      state = popped.before;
      banned = std::move(popped.banned);
      banned.insert(popped.token.vocabId);
      tokens.pop_back();
      continue;
    }

    // Renormalized softmax over valid continuations only.
    double sum = 0.0;
    for (auto& w : weights) {
      w = std::exp(w - maxLogit);
      sum += w;
    }
    double draw = u01(rngState) * sum;
    int chosen = candidates.back();
    for (size_t i = 0; i < candidates.size(); ++i) {
      draw -= weights[i];
      if (draw <= 0.0) {
        chosen = candidates[i];
        break;
      }
    }

    const Token& tok = vocab.at(chosen);
    steps.push_back({tok, state, banned});
    banned.clear();
    applyToken(state, tok);
    tokens.push_back(tok);
    if (tok.lexeme == "EOM") break;
  }
  return tokens;
}

// ---------------------------------------------------------------------------
// Topology decoding with synthetic layout
// ---------------------------------------------------------------------------

namespace {

// Staff-local vertical position of a pitch under a clef; one diatonic step
// is half a staff space, larger y sits lower on the staff.
double pitchY(const PitchUnit& p, bool trebleClef) {
  static const int letterIdx[] = {5, 6, 0, 1, 2, 3, 4};  // a..g -> c-based
  int idx = letterIdx[p.letter - 'a'];
  int reference = trebleClef ? 0 : -12;  // clef shifts the octave frame
  int diatonic = idx + 7 * p.octaveShift + reference;
  return 2.0 - 0.5 * double(diatonic);
}

struct VoiceCursor {
  Fraction tick{0, 1};
};

}  // namespace

TopologySample decodeTopology(const MeasureAst& ast, uint64_t layoutSeed) {
  TopologySample sample;
  if (ast.time) {
    sample.timeSignature = *ast.time;
  }
  sample.measureDuration = sample.timeSignature.durationTicks();
  sample.time8th = std::clamp(
      sample.timeSignature.numerator * 8 / sample.timeSignature.denominator, 1,
      16);

  struct PendingEvent {
    TopoEvent event;
    bool spacer = false;
  };
  std::vector<TopoEvent> decoded;
  std::vector<std::vector<size_t>> voiceMembers;  // indices into decoded

  int initialStaff = 0;
  for (size_t v = 0; v < ast.voices.size(); ++v) {
    const auto& terms = ast.voices[v];
    int staff = initialStaff;
    std::map<int, bool> trebleByStaff;  // default treble
    long long tickNum = 0;  // ticks scaled by kTickScale for exactness
    const long long kTickScale = 720720;  // lcm of tuplet denominators
    std::vector<size_t> members;
    bool beamOpen = false;

    std::optional<TimeWarp> groupWarp;
    for (const auto& term : terms) {
      if (std::holds_alternative<ContextToken>(term)) {
        const auto& tok = std::get<ContextToken>(term).token;
        if (tok.group == TokenGroup::Staff) {
          staff = tok.lexeme[1] - '1';
        } else if (tok.group == TokenGroup::Clef) {
          trebleByStaff[staff] = tok.lexeme == "Cg";
          if (decoded.empty() && members.empty()) {
            ContextTerm ct;
            ct.kind = "clef";
            ct.staff = staff;
            ct.x = 0.2;
            sample.contextTerms.push_back(ct);
          }
        }
        continue;
      }
      const auto& ev = std::get<EventTerm>(term);

      // Warp group bookkeeping.
      std::optional<TimeWarp> warp;
      if (ev.warpNumerator) {
        int n = *ev.warpNumerator;
        groupWarp = reduced(TimeWarp{warpReference(n), n});
        warp = groupWarp;
      } else if (ev.warpContinue || ev.warpClose) {
        if (!groupWarp) {
          throw DecodeRejection("warp continuation outside a group");
        }
        warp = groupWarp;
        if (ev.warpClose) groupWarp.reset();
      } else {
        groupWarp.reset();
      }

      int division = 0;
      int k = ev.durationDenom;
      while ((1 << division) < k) ++division;
      if ((1 << division) != k) {
        throw DecodeRejection("bad duration denominator");
      }
      long long num = 1920LL * ((1LL << (ev.dotCount + 1)) - 1) * kTickScale;
      long long den = (1LL << (division + ev.dotCount));
      if (warp) {
        num *= warp->numerator;
        den *= warp->denominator;
      }
      if (num % den != 0) throw DecodeRejection("sub-tick event duration");
      long long scaledDur = num / den;

      if (!ev.restSpacer) {
        TopoEvent e;
        e.staff = staff;
        e.voiceIndex = int(voiceMembers.size());
        if (tickNum % kTickScale != 0) {
          throw DecodeRejection("event off the integer tick grid");
        }
        e.tick = int(tickNum / kTickScale);
        e.division = division;
        e.dots = ev.dotCount;
        e.timeWarp = warp;
        e.isRest = ev.rest;
        bool treble = trebleByStaff.count(staff) ? trebleByStaff[staff] : true;
        if (ev.rest || ev.pitches.empty()) {
          e.y1 = -0.5;
          e.y2 = 0.5;
        } else {
          double lo = 1e9, hi = -1e9;
          for (const auto& p : ev.pitches) {
            double y = pitchY(p, treble);
            lo = std::min(lo, y);
            hi = std::max(hi, y);
          }
          e.y1 = lo - 0.5;
          e.y2 = hi + 0.5;
        }
        if (ev.beamOpen && ev.beamClose) {
          throw DecodeRejection("single-event beam group");
        }
        if (ev.beamOpen) {
          if (beamOpen) throw DecodeRejection("beam reopened inside a group");
          beamOpen = true;
          e.beam = BeamState::Open;
        } else if (ev.beamClose) {
          if (!beamOpen) throw DecodeRejection("beam closed without opening");
          beamOpen = false;
          e.beam = BeamState::Close;
        } else if (beamOpen) {
          e.beam = BeamState::Continue;
        }
        decoded.push_back(e);
        members.push_back(decoded.size() - 1);
      }
      tickNum += scaledDur;
      if (tickNum > (long long)sample.measureDuration * kTickScale) {
        throw DecodeRejection("voice duration exceeds the measure");
      }
    }
    if (beamOpen) throw DecodeRejection("beam group left open");
    if (groupWarp) throw DecodeRejection("tuplet group left open");
    if (!members.empty()) voiceMembers.push_back(std::move(members));
  }

  // Fractional tuplet groups: the per-voice effective group total must be
  // divisible by the warp denominator.
  for (const auto& members : voiceMembers) {
    long long total = 0;
    std::optional<TimeWarp> open;
    for (size_t idx : members) {
      const auto& e = decoded[idx];
      double dur = durationTicksReal(e.division, e.dots);
      if (e.timeWarp) {
        if (!open || !(*open == *e.timeWarp)) {
          open = e.timeWarp;
          total = 0;
        }
        total += std::llround(dur * e.timeWarp->ratio());
      } else if (open) {
        if (total % open->denominator != 0) {
          throw DecodeRejection("fractional tuplet group");
        }
        open.reset();
      }
    }
    if (open && total % open->denominator != 0) {
      throw DecodeRejection("fractional tuplet group");
    }
  }

  // Synthetic layout: every distinct onset is one column, and simultaneous
  // events share the column x exactly so the twist metric sees clean
  // verticals. Column advances follow engraving practice: sub-linear in the
  // tick gap (gap^0.9) with a little multiplicative jitter, then scaled so
  // the tightest gap stays readable.
  uint64_t rng = mixSeed(layoutSeed, 0x1a707ull);
  std::set<int> onsetSet;
  for (const auto& e : decoded) onsetSet.insert(e.tick);
  std::vector<int> onsets(onsetSet.begin(), onsetSet.end());

  std::map<int, double> columnX;
  if (!onsets.empty()) {
    std::vector<double> advance;  // advance[i] leads into onsets[i]
    for (size_t i = 0; i < onsets.size(); ++i) {
      int gap = i == 0 ? onsets[0] : onsets[i] - onsets[i - 1];
      double a = gap > 0 ? std::pow(double(gap), 0.9) : 0.0;
      a *= std::exp((u01(rng) - 0.5) * 0.1);
      advance.push_back(a);
    }
    double minAdvance = 1e18;
    for (size_t i = 1; i < advance.size(); ++i) {
      minAdvance = std::min(minAdvance, advance[i]);
    }
    double scale =
        advance.size() > 1 ? 0.8 / std::max(minAdvance, 1e-9) : 0.02;
    scale = std::min(scale, 0.02);  // keep wide measures in proportion
    if (advance.size() > 1 && minAdvance * scale < 0.8) {
      scale = 0.8 / minAdvance;
    }
    double x = 1.8;
    for (size_t i = 0; i < onsets.size(); ++i) {
      x += advance[i] * scale;
      columnX[onsets[i]] = x;
    }
  }
  for (auto& e : decoded) {
    e.x = columnX[e.tick];
    e.pivotX = e.x + (u01(rng) - 0.5) * 0.4;  // visual anchor wobble
  }

  // Detector-style ids: left to right, top staff first within a column.
  std::vector<size_t> order(decoded.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    const auto& ea = decoded[a];
    const auto& eb = decoded[b];
    return std::tuple(ea.x, ea.staff, ea.y1, ea.voiceIndex) <
           std::tuple(eb.x, eb.staff, eb.y1, eb.voiceIndex);
  });
  std::vector<int> idOf(decoded.size());
  for (size_t k = 0; k < order.size(); ++k) {
    idOf[order[k]] = int(k) + 1;
  }
  for (size_t i = 0; i < decoded.size(); ++i) decoded[i].id = idOf[i];

  sample.voices.clear();
  for (const auto& members : voiceMembers) {
    std::vector<int> voice;
    for (size_t idx : members) voice.push_back(decoded[idx].id);
    sample.voices.push_back(std::move(voice));
  }
  std::sort(decoded.begin(), decoded.end(),
            [](const TopoEvent& a, const TopoEvent& b) { return a.id < b.id; });
  sample.events = std::move(decoded);

  // Head context terms for the context-tick pass.
  if (ast.keyFifths) {
    sample.contextTerms.push_back({"key", 0, 0.5, std::nullopt});
  }
  if (ast.time) {
    sample.contextTerms.push_back({"time", 0, 0.9, std::nullopt});
  }
  return sample;
}

// ---------------------------------------------------------------------------
// Detector-style measure synthesis
// ---------------------------------------------------------------------------

RawMeasure toRawMeasure(const TopologySample& sample, const HintNoise& noise) {
  RawMeasure raw;
  raw.measureIndex = sample.measureIndex;
  raw.timeSignature = sample.timeSignature;
  raw.duration = sample.measureDuration;
  raw.time8th = sample.time8th;
  raw.contextTerms = sample.contextTerms;

  std::set<int> staves;
  for (const auto& e : sample.events) staves.insert(e.staff);
  raw.staffGroups.push_back(std::vector<int>(staves.begin(), staves.end()));

  uint64_t rng = mixSeed(noise.seed, 0xfea7ull);
  double w = noise.dirichletWeight;

  auto dirichlet = [&](double* out, int n) {
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
      out[i] = -std::log(std::max(1e-12, u01(rng)));
      sum += out[i];
    }
    for (int i = 0; i < n; ++i) out[i] /= sum;
  };

  for (const auto& e : sample.events) {
    EventElement ev;
    ev.id = e.id;
    ev.elemType = e.isRest ? ElemType::Rest : ElemType::Chord;
    ev.staff = e.staff;
    ev.x = e.x;
    ev.pivotX = e.pivotX;
    ev.y1 = e.y1 + e.staff * kStaffVerticalPitch;
    ev.y2 = e.y2 + e.staff * kStaffVerticalPitch;

    // Gold one-hot feature hints mixed with noise.
    std::array<double, feature::kCount> f{};
    for (int k = 0; k <= std::min(e.division, 6); ++k) {
      f[feature::kDivisionGe0 + k] = 1.0;
    }
    if (e.dots >= 1) f[feature::kDots1] = 1.0;
    if (e.dots >= 2) f[feature::kDots1 + 1] = 1.0;
    if (e.beam == BeamState::Open) f[feature::kBeamOpen] = 1.0;
    if (e.beam == BeamState::Continue) f[feature::kBeamOpen + 1] = 1.0;
    if (e.beam == BeamState::Close) f[feature::kBeamOpen + 2] = 1.0;
    if (!e.isRest) {
      if (e.voiceIndex % 2 == 0) {
        f[feature::kStemUp] = 1.0;
      } else {
        f[feature::kStemUp + 1] = 1.0;
      }
    }
    for (int k = 0; k < feature::kCount; ++k) {
      ev.feature[k] = (1.0 - w) * f[k] + w * u01(rng);
    }

    double dir9[9];
    dirichlet(dir9, 9);
    for (int k = 0; k < 9; ++k) {
      ev.predisposition.divisionVector[k] =
          (1.0 - w) * (k == e.division ? 1.0 : 0.0) + w * dir9[k];
    }
    double dir3[3];
    dirichlet(dir3, 3);
    for (int k = 0; k < 3; ++k) {
      ev.predisposition.dotsVector[k] =
          (1.0 - w) * (k == e.dots ? 1.0 : 0.0) + w * dir3[k];
    }
    ev.predisposition.tickEstimate = e.tick;
    ev.predisposition.grace = w * 0.3 * u01(rng);
    ev.predisposition.timeWarped =
        e.timeWarp ? 1.0 - w * 0.3 * u01(rng) : w * 0.3 * u01(rng);
    ev.predisposition.fullMeasure = w * 0.3 * u01(rng);
    ev.predisposition.fake = w * 0.3 * u01(rng);

    raw.events.push_back(std::move(ev));
  }
  return raw;
}

RegulationSolution goldSolution(const TopologySample& sample) {
  RegulationSolution solution;
  solution.measureIndex = sample.measureIndex;
  solution.voices = sample.voices;
  solution.duration = sample.measureDuration;
  solution.status = SolutionStatus::Solved;
  for (const auto& e : sample.events) {
    EventAssignment a;
    a.tick = e.tick;
    a.division = e.division;
    a.dots = e.dots;
    a.beam = e.beam;
    a.stemDirection = e.isRest ? StemDirection::None
                      : (e.voiceIndex % 2 == 0 ? StemDirection::Up
                                               : StemDirection::Down);
    a.grace = e.grace;
    a.timeWarp = e.timeWarp;
    a.fullMeasure = false;
    a.fake = false;
    solution.eventAssignments[e.id] = a;
  }
  solution.buildAdjacency();
  return solution;
}

GeneratedSample generateSample(const SampleConfig& config,
                               const HintNoise& noise, int index) {
  for (int attempt = 0; attempt < 64; ++attempt) {
    SampleConfig attemptConfig = config;
    attemptConfig.seed = mixSeed(config.seed, uint64_t(index) * 977 + attempt);
    try {
      auto tokens = sampleMeasure(uniformNoiseSource(attemptConfig.seed),
                                  attemptConfig);
      auto ast = parse(tokens);
      auto topo = decodeTopology(ast, mixSeed(attemptConfig.seed, 0x1a7ull));
      topo.measureIndex = index;
      if (topo.events.empty()) continue;
      if (int(topo.voices.size()) < config.minVoices) continue;
      HintNoise hn = noise;
      hn.seed = mixSeed(noise.seed, uint64_t(index));
      GeneratedSample out;
      out.measure = toRawMeasure(topo, hn);
      out.topology = std::move(topo);
      out.tokens = std::move(tokens);
      return out;
    } catch (const DecodeRejection&) {
      continue;
    } catch (const ParseError&) {
      continue;
    } catch (const std::runtime_error&) {
      continue;  // sampler dead end
    }
  }
  throw std::runtime_error("could not generate a valid sample at index " +
                           std::to_string(index));
}

}  // namespace bead::paraff
