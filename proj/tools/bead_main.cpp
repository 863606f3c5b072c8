// Command-line entry points: regulate, evaluate, compare, generate, vtick,
// and paraff utilities. Machine-readable JSON goes to stdout, diagnostics to
// stderr; exit code 0 on success.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "bead/baselines.hpp"
#include "bead/cache.hpp"
#include "bead/json_io.hpp"
#include "bead/metrics.hpp"
#include "bead/model.hpp"
#include "bead/paraff.hpp"
#include "bead/picker.hpp"
#include "bead/quality.hpp"
#include "bead/solver.hpp"
#include "bead/svg.hpp"
#include "bead/timebase.hpp"

namespace {

uint64_t defaultSeed() {
  if (const char* env = std::getenv("BEAD_SEED")) {
    return std::strtoull(env, nullptr, 10);
  }
  return 0;
}

std::vector<bead::RegulationSolution> loadSolutions(const std::string& path) {
  auto j = bead::io::readFile(path);
  std::vector<bead::RegulationSolution> out;
  if (j.is_array()) {
    for (const auto& item : j) {
      // Topology files carry their gold assignments under "solution".
      out.push_back(bead::io::solutionFromJson(
          item.contains("solution") ? item["solution"] : item));
    }
  } else if (j.contains("solution")) {
    out.push_back(bead::io::solutionFromJson(j["solution"]));
  } else {
    out.push_back(bead::io::solutionFromJson(j));
  }
  return out;
}

int runRegulate(const std::string& clusterPath, const std::string& strategy,
                bool multipass, bool prePass, double ptFactor,
                double quotaFactor, double stopLoss, uint64_t seed,
                const std::string& goldPath, const std::string& cachePath,
                const std::string& svgPath) {
  auto raw = bead::io::rawMeasureFromJson(bead::io::readFile(clusterPath));
  auto measure = bead::splitMeasure(raw);

  bead::SolverConfig config;
  config.ptFactor = ptFactor;
  config.quotaFactor = quotaFactor;
  config.stopLoss = stopLoss;
  config.prePass = prePass;
  config.seed = seed;

  std::unique_ptr<bead::Picker> picker;
  if (strategy == "oracle") {
    if (goldPath.empty()) {
      std::cerr << "oracle strategy needs --gold <topology.json>\n";
      return 2;
    }
    auto gold = bead::io::topologyFromJson(bead::io::readFile(goldPath));
    picker = std::make_unique<bead::OraclePicker>(gold);
  } else if (strategy == "rulebased-search") {
    picker = std::make_unique<bead::RuleBasedPicker>();
  } else if (strategy != "greedy") {
    std::cerr << "unknown strategy: " << strategy << "\n";
    return 2;
  }

  bead::SolutionCache cache;
  std::string key;
  bool useCache = !cachePath.empty();
  if (useCache) {
    cache = bead::SolutionCache::load(cachePath);
    key = bead::fingerprint(measure);
    if (auto hit = cache.get(key)) {
      hit->measureIndex = raw.measureIndex;
      std::cout << bead::io::solutionToJson(*hit).dump(2) << "\n";
      std::cerr << "cache hit " << key << "\n";
      return 0;
    }
  }

  bead::RegulationSolution solution;
  if (strategy == "greedy") {
    solution = bead::greedyRegulate(measure);
  } else if (multipass) {
    solution = bead::solveMultipass(measure, *picker, config);
  } else {
    solution = bead::solveMeasure(measure, *picker, config);
  }
  bead::propagateContextTicks(measure, solution);

  if (useCache) {
    auto report = bead::evaluateMeasure(solution, measure);
    if (cache.put(key, solution, bead::Provenance::AutoFine, report)) {
      std::cerr << "cache store " << key << "\n";
    }
  }
  if (!svgPath.empty()) {
    std::ofstream out(svgPath);
    out << bead::emitTimelineSvg(solution, measure);
  }
  std::cout << bead::io::solutionToJson(solution).dump(2) << "\n";
  return 0;
}

int runEvaluate(const std::string& solutionPath, const std::string& clusterPath,
                const std::string& patchPath) {
  auto solution = bead::io::solutionFromJson(bead::io::readFile(solutionPath));
  auto raw = bead::io::rawMeasureFromJson(bead::io::readFile(clusterPath));
  auto measure = bead::splitMeasure(raw);

  if (patchPath.empty()) {
    auto report = bead::evaluateMeasure(solution, measure);
    bead::io::json j;
    j["error"] = report.error;
    j["fine"] = report.fine;
    j["perfect"] = report.perfect;
    j["qualityScore"] = report.q;
    j["tickTwist"] = report.diagnostics.tickTwist;
    j["spaceTime"] = report.diagnostics.spaceTime;
    j["surplusTime"] = report.diagnostics.surplusTime;
    j["durationRate"] = report.diagnostics.durationRate;
    j["flags"] = {{"beamBroken", report.flags.beamBroken},
                  {"tickOverlapped", report.flags.tickOverlapped},
                  {"voiceRugged", report.flags.voiceRugged},
                  {"irregularTick", report.flags.irregularTick},
                  {"fractionalWarp", report.flags.fractionalWarp},
                  {"complexWarp", report.flags.complexWarp},
                  {"graceInVoice", report.flags.graceInVoice},
                  {"surplus", report.flags.surplus},
                  {"spaceNonzero", report.flags.spaceNonzero},
                  {"twistFatal", report.flags.twistFatal}};
    std::cout << j.dump(2) << "\n";
    return report.error ? 1 : 0;
  }

  auto patch = bead::io::patchFromJson(bead::io::readFile(patchPath));
  auto fix = bead::evaluateFix(solution, measure, patch);
  std::cout << bead::formatFixReport(fix, patch.measureIndex);
  return 0;
}

int runCompare(const std::string& predPath, const std::string& goldPath,
               bool perMeasure) {
  auto pred = loadSolutions(predPath);
  auto gold = loadSolutions(goldPath);
  auto corpus = bead::compareCorpus(pred, gold);
  std::cout << bead::formatComparison(corpus);
  if (perMeasure) {
    std::map<int, const bead::RegulationSolution*> byIndex;
    for (const auto& p : pred) byIndex[p.measureIndex] = &p;
    for (const auto& g : gold) {
      static const bead::RegulationSolution kEmpty{};
      auto it = byIndex.find(g.measureIndex);
      const auto& p = it != byIndex.end() ? *it->second : kEmpty;
      auto mc = bead::compareMeasure(p, g);
      std::cout << "m" << g.measureIndex << ": perfect=" << mc.perfect
                << " voiceMatch=" << mc.voiceMatch
                << " tickExact=" << mc.tickExact << "\n";
    }
  }
  return 0;
}

int runGenerate(int count, uint64_t seed, int minVoices, int maxVoices,
                double noiseWeight, const std::string& outDir) {
  namespace fs = std::filesystem;
  fs::create_directories(outDir);
  bead::paraff::SampleConfig config;
  config.seed = seed;
  config.minVoices = minVoices;
  config.maxVoices = maxVoices;
  bead::paraff::HintNoise noise;
  noise.seed = seed;
  noise.dirichletWeight = noiseWeight;

  for (int i = 0; i < count; ++i) {
    auto sample = bead::paraff::generateSample(config, noise, i);
    char name[32];
    std::snprintf(name, sizeof(name), "%05d", i);
    bead::io::writeFile(outDir + "/" + name + ".topo.json",
                        bead::io::topologyToJson(sample.topology));
    bead::io::writeFile(outDir + "/" + name + ".cluster.json",
                        bead::io::rawMeasureToJson(sample.measure));
  }
  std::cerr << "wrote " << count << " samples to " << outDir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Measure-level structure decoding for polyphonic notation"};
  app.require_subcommand(1);

  // regulate
  std::string clusterPath, strategy = "rulebased-search", goldPath, cachePath,
              svgPath;
  bool multipass = false, prePass = false;
  double ptFactor = 1.0, quotaFactor = 40.0, stopLoss = 0.02;
  uint64_t seed = defaultSeed();
  auto* regulate = app.add_subcommand("regulate", "Decode one measure cluster");
  regulate->add_option("cluster", clusterPath, "cluster JSON file")
      ->required();
  regulate->add_option("--strategy", strategy,
                       "greedy | rulebased-search | oracle");
  regulate->add_flag("--multipass", multipass, "escalating quota passes");
  regulate->add_flag("--pre-pass", prePass, "glimpse pre-pass");
  regulate->add_option("--pt-factor", ptFactor, "pretentiousness tolerance");
  regulate->add_option("--quota-factor", quotaFactor, "search quota factor");
  regulate->add_option("--stop-loss", stopLoss, "early-stop loss");
  regulate->add_option("--seed", seed, "seed for stochastic pickers");
  regulate->add_option("--gold", goldPath, "topology JSON for the oracle");
  regulate->add_option("--cache", cachePath, "fingerprint cache file");
  regulate->add_option("--emit-svg", svgPath, "write the timeline SVG here");

  // evaluate
  std::string solutionPath, evalClusterPath, patchPath;
  auto* evaluate = app.add_subcommand("evaluate", "Quality-check a solution");
  evaluate->add_option("solution", solutionPath, "solution JSON")->required();
  evaluate->add_option("--cluster", evalClusterPath, "measure cluster JSON")
      ->required();
  evaluate->add_option("--patch", patchPath, "fix record to apply");

  // compare
  std::string predPath, goldCmpPath;
  bool perMeasure = false;
  auto* compare = app.add_subcommand("compare", "Golden comparison");
  compare->add_option("pred", predPath, "predicted solutions")->required();
  compare->add_option("gold", goldCmpPath, "gold solutions")->required();
  compare->add_flag("--per-measure", perMeasure, "print per-measure tiers");

  // generate
  int count = 10, minVoices = 1, maxVoices = 4;
  double noiseWeight = 0.15;
  std::string outDir = "corpus";
  uint64_t genSeed = defaultSeed();
  auto* generate = app.add_subcommand("generate", "Synthesize a corpus");
  generate->add_option("--count", count, "number of measures");
  generate->add_option("--seed", genSeed, "corpus seed");
  generate->add_option("--min-voices", minVoices, "minimum voices");
  generate->add_option("--max-voices", maxVoices, "maximum voices");
  generate->add_option("--noise", noiseWeight, "hint noise weight");
  generate->add_option("--out", outDir, "output directory");

  // vtick
  auto* vtick = app.add_subcommand("vtick", "Mixed-radix tick codec");
  int encodeTick = -1;
  std::vector<double> decodeVec;
  auto* vtickEncodeCmd = vtick->add_subcommand("encode", "tick -> code");
  vtickEncodeCmd->add_option("tick", encodeTick, "tick value")->required();
  auto* vtickDecodeCmd = vtick->add_subcommand("decode", "13 reals -> tick");
  vtickDecodeCmd->add_option("vector", decodeVec, "13 vector entries")
      ->expected(13);
  vtick->require_subcommand(1);

  // paraff
  auto* paraffCmd = app.add_subcommand("paraff", "DSL utilities");
  std::string paraffFile;
  uint64_t paraffSeed = defaultSeed();
  int paraffMinVoices = 1;
  auto* paraffParse = paraffCmd->add_subcommand("parse", "parse a sentence");
  paraffParse->add_option("file", paraffFile, "token text file")->required();
  auto* paraffSample =
      paraffCmd->add_subcommand("sample", "sample one sentence");
  paraffSample->add_option("--seed", paraffSeed, "sampler seed");
  paraffSample->add_option("--min-voices", paraffMinVoices, "minimum voices");
  auto* paraffMatrix =
      paraffCmd->add_subcommand("matrix", "print the transition matrix");
  paraffCmd->require_subcommand(1);

  CLI11_PARSE(app, argc, argv);

  try {
    if (regulate->parsed()) {
      return runRegulate(clusterPath, strategy, multipass, prePass, ptFactor,
                         quotaFactor, stopLoss, seed, goldPath, cachePath,
                         svgPath);
    }
    if (evaluate->parsed()) {
      return runEvaluate(solutionPath, evalClusterPath, patchPath);
    }
    if (compare->parsed()) {
      return runCompare(predPath, goldCmpPath, perMeasure);
    }
    if (generate->parsed()) {
      return runGenerate(count, genSeed, minVoices, maxVoices, noiseWeight,
                         outDir);
    }
    if (vtick->parsed()) {
      if (vtickEncodeCmd->parsed()) {
        auto code = bead::vtickEncode(encodeTick);
        bead::io::json j;
        j["tick"] = encodeTick;
        j["quotient"] = code.quotient;
        j["digits"] = code.digits;
        j["vector"] = code.vector;
        std::cout << j.dump(2) << "\n";
      } else {
        auto digits = bead::vtickDigitsFromVector(decodeVec);
        bead::VtickCode code;
        code.digits = digits;
        bead::io::json j;
        j["digits"] = digits;
        j["tick"] = bead::vtickDecode(code);
        std::cout << j.dump(2) << "\n";
      }
      return 0;
    }
    if (paraffCmd->parsed()) {
      if (paraffParse->parsed()) {
        std::ifstream in(paraffFile);
        if (!in) {
          std::cerr << "cannot open " << paraffFile << "\n";
          return 2;
        }
        std::string text((std::istreambuf_iterator<char>(in)),
                         std::istreambuf_iterator<char>());
        auto ast = bead::paraff::parse(bead::paraff::tokenize(text));
        bead::io::json j;
        j["voices"] = ast.voices.size();
        if (ast.keyFifths) j["keyFifths"] = *ast.keyFifths;
        if (ast.time) {
          j["timeSignature"] = {{"num", ast.time->numerator},
                                {"den", ast.time->denominator}};
        }
        int events = 0;
        for (const auto& voice : ast.voices) {
          for (const auto& term : voice) {
            events += std::holds_alternative<bead::paraff::EventTerm>(term);
          }
        }
        j["events"] = events;
        std::cout << j.dump(2) << "\n";
      } else if (paraffSample->parsed()) {
        bead::paraff::SampleConfig config;
        config.seed = paraffSeed;
        config.minVoices = paraffMinVoices;
        auto tokens = bead::paraff::sampleMeasure(
            bead::paraff::uniformNoiseSource(paraffSeed), config);
        std::string line;
        for (const auto& t : tokens) {
          if (!line.empty()) line += ' ';
          line += t.lexeme;
        }
        std::cout << line << "\n";
      } else if (paraffMatrix->parsed()) {
        std::cout << bead::paraff::transitionMatrixJson();
      }
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
