#pragma once
// JSON readers/writers for the external file formats: measure clusters,
// solutions, fix patches, topology samples, and score tables.

#include <string>

#include <json.hpp>

#include "bead/model.hpp"
#include "bead/paraff.hpp"
#include "bead/picker.hpp"
#include "bead/quality.hpp"

namespace bead::io {

using nlohmann::json;

const char* beamName(BeamState b);
BeamState beamFromName(const std::string& name);
const char* stemName(StemDirection s);
StemDirection stemFromName(const std::string& name);

json rawMeasureToJson(const RawMeasure& raw);
RawMeasure rawMeasureFromJson(const json& j);

json solutionToJson(const RegulationSolution& solution);
RegulationSolution solutionFromJson(const json& j);

json topologyToJson(const paraff::TopologySample& sample);
paraff::TopologySample topologyFromJson(const json& j);

Patch patchFromJson(const json& j);

json predictionRecordToJson(const PredictionRecord& record);
PredictionRecord predictionRecordFromJson(const json& j);

json scoreTableToJson(const TablePicker::Table& table);
TablePicker::Table scoreTableFromJson(const json& j);

json readFile(const std::string& path);
void writeFile(const std::string& path, const json& j);

}  // namespace bead::io
