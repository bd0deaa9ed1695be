#include "calib/archive.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "calib/errors.hpp"

namespace calib {

namespace {

using nlohmann::json;

constexpr int kArchiveVersion = 1;

json matrixToJson(const MatrixXd& m) {
  json rows = json::array();
  for (int r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

MatrixXd matrixFromJson(const json& j) {
  const int rows = static_cast<int>(j.size());
  const int cols = rows > 0 ? static_cast<int>(j[0].size()) : 0;
  MatrixXd m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
  return m;
}

json vectorToJson(const VectorXd& v) {
  json out = json::array();
  for (int i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

VectorXd vectorFromJson(const json& j) {
  VectorXd v(j.size());
  for (size_t i = 0; i < j.size(); ++i) v[i] = j[i].get<double>();
  return v;
}

}  // namespace

std::string archiveToJson(const PosteriorArchive& a) {
  json j;
  j["version"] = kArchiveVersion;
  j["model"] = a.modelName;
  j["seed"] = a.seed;
  j["runCount"] = a.runCount;
  j["outputLength"] = a.outputLength;
  j["observationHash"] = a.observationHash;
  j["configHash"] = a.configHash;
  if (!a.manifestJson.empty()) j["manifest"] = json::parse(a.manifestJson);
  j["calibration"] = {{"names", a.calibrationNames},
                      {"samples", matrixToJson(a.calibrationSamples)},
                      {"logWeights", vectorToJson(a.calibrationLogWeights)},
                      {"logEvidence", a.logEvidenceCalibration},
                      {"replicates", a.calibrationReplicates}};
  j["discrepancy"] = {{"names", a.discrepancyNames},
                      {"samples", matrixToJson(a.discrepancySamples)},
                      {"logWeights", vectorToJson(a.discrepancyLogWeights)},
                      {"logEvidence", a.logEvidenceDiscrepancy},
                      {"replicates", a.discrepancyReplicates}};
  j["predictionMean"] = vectorToJson(a.predictionMean);
  j["parameterNames"] = a.parameterNames;
  j["scalingLo"] = vectorToJson(a.scalingLo);
  j["scalingHi"] = vectorToJson(a.scalingHi);
  return j.dump(1);
}

PosteriorArchive archiveFromJson(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw DataFormatError(std::string("archive parse error: ") + e.what());
  }
  if (!j.contains("version") || j["version"].get<int>() != kArchiveVersion)
    throw DataFormatError("unsupported archive version");

  PosteriorArchive a;
  a.modelName = j.value("model", "");
  a.seed = j.value("seed", std::uint64_t{0});
  a.runCount = j.value("runCount", 0);
  a.outputLength = j.value("outputLength", 0);
  a.observationHash = j.value("observationHash", "");
  a.configHash = j.value("configHash", "");
  if (j.contains("manifest")) a.manifestJson = j["manifest"].dump(1);
  const json& cal = j.at("calibration");
  a.calibrationNames = cal.at("names").get<std::vector<std::string>>();
  a.calibrationSamples = matrixFromJson(cal.at("samples"));
  a.calibrationLogWeights = vectorFromJson(cal.at("logWeights"));
  a.logEvidenceCalibration = cal.at("logEvidence").get<double>();
  a.calibrationReplicates = cal.at("replicates").get<std::vector<double>>();
  const json& dis = j.at("discrepancy");
  a.discrepancyNames = dis.at("names").get<std::vector<std::string>>();
  a.discrepancySamples = matrixFromJson(dis.at("samples"));
  a.discrepancyLogWeights = vectorFromJson(dis.at("logWeights"));
  a.logEvidenceDiscrepancy = dis.at("logEvidence").get<double>();
  a.discrepancyReplicates = dis.at("replicates").get<std::vector<double>>();
  a.predictionMean = vectorFromJson(j.at("predictionMean"));
  a.parameterNames = j.value("parameterNames", std::vector<std::string>{});
  if (j.contains("scalingLo")) a.scalingLo = vectorFromJson(j["scalingLo"]);
  if (j.contains("scalingHi")) a.scalingHi = vectorFromJson(j["scalingHi"]);
  return a;
}

void writeArchive(const std::string& path, const PosteriorArchive& archive) {
  std::ofstream out(path);
  if (!out) throw DataFormatError("cannot write '" + path + "'");
  out << archiveToJson(archive) << "\n";
  if (!out) throw DataFormatError("write failed for '" + path + "'");
}

PosteriorArchive readArchive(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataFormatError("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return archiveFromJson(ss.str());
}

std::string fnv1a64Hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string hashFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataFormatError("cannot open '" + path + "' for hashing");
  std::stringstream ss;
  ss << in.rdbuf();
  return fnv1a64Hex(ss.str());
}

}  // namespace calib
