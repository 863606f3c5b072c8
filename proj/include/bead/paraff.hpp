#pragma once
// Paraff measure DSL: tokenizer, sentence grammar, token-group transition
// matrix, grammar-constrained sampler, and deterministic decoding into
// ground-truth topology samples with a synthetic layout model.

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "bead/model.hpp"

namespace bead::paraff {

enum class TokenGroup : int {
  Special = 0,
  Staff,
  Clef,
  Key,
  TimeNum,
  TimeDen,
  Pitch,
  Accidental,
  Octave,
  Duration,
  Dot,
  Beam,
  Rest,
  Warp,
  Expressive,
};
inline constexpr int kGroupCount = 15;

const char* groupName(TokenGroup g);

struct Token {
  std::string lexeme;
  TokenGroup group;
  int vocabId = 0;
};

// Fixed vocabulary per the language definition; fewer than 256 entries.
class Vocabulary {
 public:
  static const Vocabulary& instance();

  int size() const { return int(tokens_.size()); }
  const Token& at(int id) const { return tokens_[id]; }
  // Throws std::invalid_argument for unknown lexemes.
  const Token& lookup(const std::string& lexeme) const;
  bool contains(const std::string& lexeme) const;

 private:
  Vocabulary();
  std::vector<Token> tokens_;
  std::map<std::string, int> byLexeme_;
};

// Throws std::invalid_argument naming the offending lexeme.
std::vector<Token> tokenize(const std::string& text);

struct ParseError : std::runtime_error {
  int position;  // token index
  ParseError(const std::string& message, int pos)
      : std::runtime_error(message + " (token " + std::to_string(pos) + ")"),
        position(pos) {}
};

struct PitchUnit {
  char letter = 'c';       // a..g
  int alteration = 0;      // semitones, -2..2
  int octaveShift = 0;     // Osup/Osub steps
};

struct EventTerm {
  std::vector<PitchUnit> pitches;
  // Warp slot: absent, or Wn (groupStart = n), or W / Wx continuations.
  std::optional<int> warpNumerator;  // set for Wn
  bool warpContinue = false;         // W
  bool warpClose = false;            // Wx
  int durationDenom = 1;             // k in Dk; division = log2(k)
  int dotCount = 0;
  bool beamOpen = false;   // Bl
  bool beamClose = false;  // Br
  bool rest = false;       // Rest
  bool restSpacer = false; // RSpace
  std::vector<std::string> expressives;
};

struct ContextToken {
  Token token;
};

using VoiceTerm = std::variant<ContextToken, EventTerm>;

struct MeasureAst {
  std::optional<int> keyFifths;           // K token, negative for flats
  std::optional<TimeSignature> time;      // TN/TD pair
  std::vector<std::vector<VoiceTerm>> voices;
};

// Sentence shape: BOM [K] [TN TD] voice (VB voice)* EOM, with S/C context
// switches allowed inside voices. Throws ParseError with the token position.
MeasureAst parse(const std::vector<Token>& tokens);

// G x G binary token-group transition matrix derived from the grammar.
bool transitionAllowed(TokenGroup prev, TokenGroup next);
// Serialized matrix with group names, for review against data/.
std::string transitionMatrixJson();

// Standard tuplet reference count for Wn: the duration of n written notes is
// squeezed into M(n) normal ones, so each event is scaled by M(n)/n.
int warpReference(int n);

struct SampleConfig {
  uint64_t seed = 0;
  int minVoices = 1;
  int maxVoices = 4;
  int minDistinctDurations = 1;
  int maxEventsPerMeasure = 24;
  int maxChordSize = 3;
  int maxStaves = 2;
  bool allowRSpace = false;
  std::vector<int> warpNumerators = {3};  // triplets only by default
  double warpStartBias = 0.12;            // extra mass nudging tuplet starts
  int maxTokens = 256;
  bool forceHead = true;  // always open with K TN TD
};

// Fills logits (one per vocabulary entry) for the next position.
using LogitSource =
    std::function<void(std::span<const Token> prefix, std::span<double> logits)>;

// Seeded uniform-noise logits, the default desk-scale source.
LogitSource uniformNoiseSource(uint64_t seed);

// Masked sampling: every emitted sequence parses. Backtracks up to 16 times
// on an empty candidate set, then throws std::runtime_error.
std::vector<Token> sampleMeasure(const LogitSource& logits,
                                 const SampleConfig& config);

struct TopoEvent {
  int id = 0;
  int staff = 0;
  int voiceIndex = 0;
  int tick = 0;
  int division = 0;
  int dots = 0;
  BeamState beam = BeamState::None;
  std::optional<TimeWarp> timeWarp;
  bool isRest = false;
  bool grace = false;
  double x = 0.0;
  double pivotX = 0.0;
  double y1 = 0.0;
  double y2 = 0.0;
};

struct TopologySample {
  int measureIndex = 0;
  TimeSignature timeSignature;
  int measureDuration = 1920;
  int time8th = 8;
  std::vector<TopoEvent> events;           // id order
  std::vector<std::vector<int>> voices;    // gold construction order
  std::vector<ContextTerm> contextTerms;
};

struct DecodeRejection : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Deterministic decoding: ticks from cumulative warped durations, beams from
// Bl/Br pairing, staves from inline S switches, and a synthetic layout in
// which all events sharing an onset share one column x exactly.
// Throws DecodeRejection on overfull voices, broken beam pairing, or
// fractional tuplet groups.
TopologySample decodeTopology(const MeasureAst& ast, uint64_t layoutSeed);

struct HintNoise {
  double dirichletWeight = 0.15;
  uint64_t seed = 0;
};

// Build the detector-style input measure for a sample: feature hints and
// predisposition vectors are gold one-hots mixed with Dirichlet noise; tick
// estimates stay exact.
RawMeasure toRawMeasure(const TopologySample& sample, const HintNoise& noise);

// The sample's gold assignments as a solution record.
RegulationSolution goldSolution(const TopologySample& sample);

struct GeneratedSample {
  TopologySample topology;
  RawMeasure measure;
  std::vector<Token> tokens;
};

// Sample-and-decode loop with rejection: degenerate draws (empty measures,
// overfull voices, broken constructs) are resampled under derived sub-seeds.
// Deterministic for a fixed (config, noise, index).
GeneratedSample generateSample(const SampleConfig& config,
                               const HintNoise& noise, int index);

}  // namespace bead::paraff
