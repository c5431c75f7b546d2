#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "lrot/clustering.hpp"
#include "lrot/core.hpp"
#include "lrot/solver.hpp"

namespace lrot {

using Json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

/// %.17g, enough to read back the identical double.
std::string FormatDouble(double value);

/// Comma-separated numbers, one row per line, no header. Blank lines are
/// skipped. Ragged rows and bad numbers raise ParseError naming the 1-based
/// line; a missing file raises UsageError naming the path.
Matrix ReadCsvMatrix(const std::filesystem::path& path);
Vector ReadCsvWeights(const std::filesystem::path& path);

void WriteCsvMatrix(const std::filesystem::path& path, const Matrix& m);
void WriteCsvVector(const std::filesystem::path& path, const Vector& v);
void WriteCsvLabels(const std::filesystem::path& path, const std::vector<int>& labels);

/// A point CSV (with optional weights CSV) or a JSON manifest
/// {"points": "p.csv", "weights": "w.csv" | null}; manifest paths are
/// relative to the manifest's directory.
DiscreteMeasure ReadMeasure(const std::filesystem::path& path,
                            const std::optional<std::filesystem::path>& weights = std::nullopt);

/// Writes points.csv, weights.csv and measure.json into `dir`.
void WriteMeasure(const std::filesystem::path& dir, const DiscreteMeasure& measure);

Json ReportToJson(const SolveReport& report, bool include_timing = false);
Json CouplingToJson(const LowRankCoupling& coupling);
Json MatrixToJson(const Matrix& m);
Json VectorToJson(const Vector& v);

/// Keys come out sorted, so equal reports serialize to equal bytes.
std::string DumpJson(const Json& j);
void WriteJson(const std::filesystem::path& path, const Json& j);

}  // namespace lrot
