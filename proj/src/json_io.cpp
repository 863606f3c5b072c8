#include "bead/json_io.hpp"

#include <fstream>
#include <stdexcept>

namespace bead::io {

const char* beamName(BeamState b) {
  switch (b) {
    case BeamState::None: return "None";
    case BeamState::Open: return "Open";
    case BeamState::Continue: return "Continue";
    case BeamState::Close: return "Close";
  }
  return "None";
}

BeamState beamFromName(const std::string& name) {
  if (name == "None") return BeamState::None;
  if (name == "Open") return BeamState::Open;
  if (name == "Continue") return BeamState::Continue;
  if (name == "Close") return BeamState::Close;
  throw std::invalid_argument("unknown beam state: " + name);
}

const char* stemName(StemDirection s) {
  switch (s) {
    case StemDirection::None: return "None";
    case StemDirection::Up: return "Up";
    case StemDirection::Down: return "Down";
  }
  return "None";
}

StemDirection stemFromName(const std::string& name) {
  if (name == "None") return StemDirection::None;
  if (name == "Up") return StemDirection::Up;
  if (name == "Down") return StemDirection::Down;
  throw std::invalid_argument("unknown stem direction: " + name);
}

namespace {

json timeWarpToJson(const TimeWarp& w) {
  return json{{"num", w.numerator}, {"den", w.denominator}};
}

TimeWarp timeWarpFromJson(const json& j) {
  return TimeWarp{j.at("num").get<int>(), j.at("den").get<int>()};
}

json contextTermsToJson(const std::vector<ContextTerm>& terms) {
  json arr = json::array();
  for (const auto& t : terms) {
    json jt{{"kind", t.kind}, {"staff", t.staff}, {"x", t.x}};
    if (t.tick) jt["tick"] = *t.tick;
    arr.push_back(jt);
  }
  return arr;
}

std::vector<ContextTerm> contextTermsFromJson(const json& arr) {
  std::vector<ContextTerm> out;
  for (const auto& jt : arr) {
    ContextTerm t;
    t.kind = jt.at("kind").get<std::string>();
    t.staff = jt.at("staff").get<int>();
    t.x = jt.at("x").get<double>();
    if (jt.contains("tick")) t.tick = jt.at("tick").get<int>();
    out.push_back(t);
  }
  return out;
}

}  // namespace

json rawMeasureToJson(const RawMeasure& raw) {
  json j;
  j["measureIndex"] = raw.measureIndex;
  j["timeSignature"] = {{"num", raw.timeSignature.numerator},
                        {"den", raw.timeSignature.denominator}};
  j["duration"] = raw.duration;
  j["time8th"] = raw.time8th;
  j["staffGroups"] = raw.staffGroups;
  json events = json::array();
  for (const auto& e : raw.events) {
    json je;
    je["id"] = e.id;
    je["type"] = e.elemType == ElemType::Rest ? "REST" : "CHORD";
    je["staff"] = e.staff;
    je["x"] = e.x;
    je["pivotX"] = e.pivotX;
    je["y1"] = e.y1;
    je["y2"] = e.y2;
    je["feature"] = e.feature;
    json pd;
    if (e.predisposition.tickEstimate) {
      pd["tickEstimate"] = *e.predisposition.tickEstimate;
    }
    pd["divisionVector"] = e.predisposition.divisionVector;
    pd["dotsVector"] = e.predisposition.dotsVector;
    pd["grace"] = e.predisposition.grace;
    pd["timeWarped"] = e.predisposition.timeWarped;
    pd["fullMeasure"] = e.predisposition.fullMeasure;
    pd["fake"] = e.predisposition.fake;
    je["predisposition"] = pd;
    events.push_back(je);
  }
  j["events"] = events;
  if (!raw.contextTerms.empty()) {
    j["contextTerms"] = contextTermsToJson(raw.contextTerms);
  }
  return j;
}

RawMeasure rawMeasureFromJson(const json& j) {
  RawMeasure raw;
  raw.measureIndex = j.value("measureIndex", 0);
  if (j.contains("timeSignature")) {
    raw.timeSignature.numerator = j["timeSignature"].at("num").get<int>();
    raw.timeSignature.denominator = j["timeSignature"].at("den").get<int>();
  }
  raw.duration = j.value("duration", raw.timeSignature.durationTicks());
  raw.time8th = j.value("time8th", 8);
  if (j.contains("staffGroups")) {
    raw.staffGroups = j["staffGroups"].get<std::vector<std::vector<int>>>();
  }
  for (const auto& je : j.at("events")) {
    EventElement e;
    e.id = je.value("id", 0);
    std::string type = je.value("type", "CHORD");
    e.elemType = type == "REST" ? ElemType::Rest : ElemType::Chord;
    e.staff = je.value("staff", 0);
    e.x = je.value("x", 0.0);
    e.pivotX = je.value("pivotX", e.x);
    e.y1 = je.value("y1", 0.0);
    e.y2 = je.value("y2", 0.0);
    if (je.contains("feature")) {
      auto f = je["feature"].get<std::vector<double>>();
      if (f.size() != size_t(feature::kCount)) {
        throw std::invalid_argument("feature vector must have 16 entries");
      }
      std::copy(f.begin(), f.end(), e.feature.begin());
    }
    if (je.contains("predisposition")) {
      const auto& pd = je["predisposition"];
      if (pd.contains("tickEstimate") && !pd["tickEstimate"].is_null()) {
        e.predisposition.tickEstimate = pd["tickEstimate"].get<int>();
      }
      if (pd.contains("divisionVector")) {
        auto v = pd["divisionVector"].get<std::vector<double>>();
        if (v.size() != 9) {
          throw std::invalid_argument("divisionVector must have 9 entries");
        }
        std::copy(v.begin(), v.end(), e.predisposition.divisionVector.begin());
      }
      if (pd.contains("dotsVector")) {
        auto v = pd["dotsVector"].get<std::vector<double>>();
        if (v.size() != 3) {
          throw std::invalid_argument("dotsVector must have 3 entries");
        }
        std::copy(v.begin(), v.end(), e.predisposition.dotsVector.begin());
      }
      e.predisposition.grace = pd.value("grace", 0.0);
      e.predisposition.timeWarped = pd.value("timeWarped", 0.0);
      e.predisposition.fullMeasure = pd.value("fullMeasure", 0.0);
      e.predisposition.fake = pd.value("fake", 0.0);
    }
    raw.events.push_back(std::move(e));
  }
  if (raw.staffGroups.empty()) {
    // Single implicit group covering every staff present.
    std::vector<int> staves;
    for (const auto& e : raw.events) staves.push_back(e.staff);
    std::sort(staves.begin(), staves.end());
    staves.erase(std::unique(staves.begin(), staves.end()), staves.end());
    raw.staffGroups.push_back(staves);
  }
  if (j.contains("contextTerms")) {
    raw.contextTerms = contextTermsFromJson(j["contextTerms"]);
  }
  return raw;
}

json solutionToJson(const RegulationSolution& solution) {
  json j;
  j["measureIndex"] = solution.measureIndex;
  j["voices"] = solution.voices;
  j["duration"] = solution.duration;
  j["status"] = int(solution.status);
  json events = json::array();
  for (const auto& [id, a] : solution.eventAssignments) {
    json je;
    je["id"] = id;
    je["tick"] = a.tick;
    je["division"] = a.division;
    je["dots"] = a.dots;
    je["beam"] = beamName(a.beam);
    je["stemDirection"] = stemName(a.stemDirection);
    je["grace"] = a.grace;
    if (a.timeWarp) je["timeWarp"] = timeWarpToJson(*a.timeWarp);
    je["fullMeasure"] = a.fullMeasure;
    je["fake"] = a.fake;
    events.push_back(je);
  }
  j["events"] = events;
  return j;
}

RegulationSolution solutionFromJson(const json& j) {
  RegulationSolution solution;
  solution.measureIndex = j.value("measureIndex", 0);
  if (j.contains("voices")) {
    solution.voices = j["voices"].get<std::vector<std::vector<int>>>();
  }
  solution.duration = j.value("duration", 1920);
  solution.status = SolutionStatus(j.value("status", 0));
  if (j.contains("events")) {
    for (const auto& je : j["events"]) {
      EventAssignment a;
      int id = je.at("id").get<int>();
      a.tick = je.value("tick", 0);
      a.division = je.value("division", 0);
      a.dots = je.value("dots", 0);
      a.beam = beamFromName(je.value("beam", "None"));
      a.stemDirection = stemFromName(je.value("stemDirection", "None"));
      a.grace = je.value("grace", false);
      if (je.contains("timeWarp") && !je["timeWarp"].is_null()) {
        a.timeWarp = timeWarpFromJson(je["timeWarp"]);
      }
      a.fullMeasure = je.value("fullMeasure", false);
      a.fake = je.value("fake", false);
      solution.eventAssignments[id] = a;
    }
  }
  solution.buildAdjacency();
  return solution;
}

json topologyToJson(const paraff::TopologySample& sample) {
  json j;
  j["measureIndex"] = sample.measureIndex;
  j["timeSignature"] = {{"num", sample.timeSignature.numerator},
                        {"den", sample.timeSignature.denominator}};
  j["duration"] = sample.measureDuration;
  j["time8th"] = sample.time8th;
  json events = json::array();
  for (const auto& e : sample.events) {
    json je;
    je["id"] = e.id;
    je["staff"] = e.staff;
    je["voice"] = e.voiceIndex;
    je["tick"] = e.tick;
    je["division"] = e.division;
    je["dots"] = e.dots;
    je["beam"] = beamName(e.beam);
    if (e.timeWarp) je["timeWarp"] = timeWarpToJson(*e.timeWarp);
    je["rest"] = e.isRest;
    je["grace"] = e.grace;
    je["x"] = e.x;
    je["pivotX"] = e.pivotX;
    je["y1"] = e.y1;
    je["y2"] = e.y2;
    events.push_back(je);
  }
  j["events"] = events;
  j["voices"] = sample.voices;
  if (!sample.contextTerms.empty()) {
    j["contextTerms"] = contextTermsToJson(sample.contextTerms);
  }
  // The gold assignments in solution form, so comparisons can read topology
  // files directly.
  j["solution"] = solutionToJson(paraff::goldSolution(sample));
  return j;
}

paraff::TopologySample topologyFromJson(const json& j) {
  paraff::TopologySample sample;
  sample.measureIndex = j.value("measureIndex", 0);
  if (j.contains("timeSignature")) {
    sample.timeSignature.numerator = j["timeSignature"].at("num").get<int>();
    sample.timeSignature.denominator = j["timeSignature"].at("den").get<int>();
  }
  sample.measureDuration = j.value("duration", 1920);
  sample.time8th = j.value("time8th", 8);
  for (const auto& je : j.at("events")) {
    paraff::TopoEvent e;
    e.id = je.at("id").get<int>();
    e.staff = je.value("staff", 0);
    e.voiceIndex = je.value("voice", 0);
    e.tick = je.value("tick", 0);
    e.division = je.value("division", 0);
    e.dots = je.value("dots", 0);
    e.beam = beamFromName(je.value("beam", "None"));
    if (je.contains("timeWarp") && !je["timeWarp"].is_null()) {
      e.timeWarp = timeWarpFromJson(je["timeWarp"]);
    }
    e.isRest = je.value("rest", false);
    e.grace = je.value("grace", false);
    e.x = je.value("x", 0.0);
    e.pivotX = je.value("pivotX", e.x);
    e.y1 = je.value("y1", 0.0);
    e.y2 = je.value("y2", 0.0);
    sample.events.push_back(e);
  }
  sample.voices = j.at("voices").get<std::vector<std::vector<int>>>();
  if (j.contains("contextTerms")) {
    sample.contextTerms = contextTermsFromJson(j["contextTerms"]);
  }
  return sample;
}

Patch patchFromJson(const json& j) {
  Patch patch;
  patch.measureIndex = j.value("measureIndex", 0);
  if (j.contains("events")) {
    for (const auto& je : j["events"]) {
      PatchEvent pe;
      pe.id = je.at("id").get<int>();
      if (je.contains("tick") && !je["tick"].is_null()) {
        pe.tick = je["tick"].get<int>();
      }
      if (je.contains("division") && !je["division"].is_null()) {
        pe.division = je["division"].get<int>();
      }
      if (je.contains("dots") && !je["dots"].is_null()) {
        pe.dots = je["dots"].get<int>();
      }
      if (je.contains("beam") && !je["beam"].is_null()) {
        pe.beam = beamFromName(je["beam"].get<std::string>());
      }
      if (je.contains("grace") && !je["grace"].is_null()) {
        pe.grace = je["grace"].get<bool>();
      }
      if (je.contains("timeWarp")) {
        pe.timeWarpGiven = true;
        if (!je["timeWarp"].is_null()) {
          pe.timeWarp = timeWarpFromJson(je["timeWarp"]);
        }
      }
      patch.events.push_back(pe);
    }
  }
  if (j.contains("voices") && !j["voices"].is_null()) {
    patch.voices = j["voices"].get<std::vector<std::vector<int>>>();
  }
  if (j.contains("duration") && !j["duration"].is_null()) {
    patch.duration = j["duration"].get<int>();
  }
  if (j.contains("status") && !j["status"].is_null()) {
    patch.status = SolutionStatus(j["status"].get<int>());
  }
  return patch;
}

json predictionRecordToJson(const PredictionRecord& record) {
  json j;
  json successor = json::object();
  json elements = json::object();
  for (const auto& [id, p] : record.successor) {
    successor[std::to_string(id)] = p;
  }
  for (const auto& [id, ep] : record.elements) {
    json je;
    je["divisionVector"] = ep.divisionVector;
    je["dotsVector"] = ep.dotsVector;
    if (ep.tickEstimate) je["tickEstimate"] = *ep.tickEstimate;
    je["grace"] = ep.grace;
    je["timeWarped"] = ep.timeWarped;
    je["fullMeasure"] = ep.fullMeasure;
    je["fake"] = ep.fake;
    elements[std::to_string(id)] = je;
  }
  j["successor"] = successor;
  j["elements"] = elements;
  return j;
}

PredictionRecord predictionRecordFromJson(const json& j) {
  PredictionRecord record;
  for (const auto& [key, value] : j.at("successor").items()) {
    record.successor[std::stoi(key)] = value.get<double>();
  }
  for (const auto& [key, je] : j.at("elements").items()) {
    ElementPrediction ep;
    if (je.contains("divisionVector")) {
      auto v = je["divisionVector"].get<std::vector<double>>();
      std::copy(v.begin(), v.end(), ep.divisionVector.begin());
    }
    if (je.contains("dotsVector")) {
      auto v = je["dotsVector"].get<std::vector<double>>();
      std::copy(v.begin(), v.end(), ep.dotsVector.begin());
    }
    if (je.contains("tickEstimate") && !je["tickEstimate"].is_null()) {
      ep.tickEstimate = je["tickEstimate"].get<int>();
    }
    ep.grace = je.value("grace", 0.0);
    ep.timeWarped = je.value("timeWarped", 0.0);
    ep.fullMeasure = je.value("fullMeasure", 0.0);
    ep.fake = je.value("fake", 0.0);
    record.elements[std::stoi(key)] = ep;
  }
  return record;
}

json scoreTableToJson(const TablePicker::Table& table) {
  json j = json::object();
  for (const auto& [key, record] : table) {
    j[key] = predictionRecordToJson(record);
  }
  return j;
}

TablePicker::Table scoreTableFromJson(const json& j) {
  TablePicker::Table table;
  for (const auto& [key, value] : j.items()) {
    table[key] = predictionRecordFromJson(value);
  }
  return table;
}

json readFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  json j;
  in >> j;
  return j;
}

void writeFile(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(2) << "\n";
}

}  // namespace bead::io

namespace bead {

TablePicker TablePicker::fromFile(const std::string& path) {
  return TablePicker(io::scoreTableFromJson(io::readFile(path)));
}

}  // namespace bead
