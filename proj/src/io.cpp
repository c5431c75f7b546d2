#include "lrot/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace lrot {

namespace fs = std::filesystem;

std::string FormatDouble(double value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

namespace {

std::string_view Trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

[[noreturn]] void ParseFail(const fs::path& path, std::size_t line, const std::string& what) {
  throw Error(ErrorKind::kParseError, path.string() + ": line " + std::to_string(line) + ": " + what);
}

std::ifstream OpenInput(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kUsageError, "cannot open '" + path.string() + "'");
  return in;
}

std::ofstream OpenOutput(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::kUsageError, "cannot write '" + path.string() + "'");
  return out;
}

}  // namespace

Matrix ReadCsvMatrix(const fs::path& path) {
  std::ifstream in = OpenInput(path);
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string_view body = Trim(line);
    if (body.empty()) continue;
    std::vector<double> row;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = body.find(',', start);
      const std::string_view field =
          Trim(body.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
      if (field.empty() || ec != std::errc() || ptr != field.data() + field.size()) {
        ParseFail(path, lineno, "bad number '" + std::string(field) + "'");
      }
      row.push_back(v);
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      ParseFail(path, lineno,
                "expected " + std::to_string(rows.front().size()) + " fields, found " + std::to_string(row.size()));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) ParseFail(path, lineno, "no data rows");
  Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
  }
  return m;
}

Vector ReadCsvWeights(const fs::path& path) {
  const Matrix m = ReadCsvMatrix(path);
  if (m.cols() != 1) ParseFail(path, 1, "weights must be a single column");
  return m.col(0);
}

void WriteCsvMatrix(const fs::path& path, const Matrix& m) {
  std::ofstream out = OpenOutput(path);
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j > 0) out << ',';
      out << FormatDouble(m(i, j));
    }
    out << '\n';
  }
}

void WriteCsvVector(const fs::path& path, const Vector& v) {
  std::ofstream out = OpenOutput(path);
  for (Index i = 0; i < v.size(); ++i) out << FormatDouble(v[i]) << '\n';
}

void WriteCsvLabels(const fs::path& path, const std::vector<int>& labels) {
  std::ofstream out = OpenOutput(path);
  for (int l : labels) out << l << '\n';
}

DiscreteMeasure ReadMeasure(const fs::path& path, const std::optional<fs::path>& weights) {
  if (path.extension() != ".json") {
    Matrix points = ReadCsvMatrix(path);
    std::optional<Vector> w;
    if (weights) w = ReadCsvWeights(*weights);
    return DiscreteMeasure::Create(std::move(points), std::move(w));
  }
  std::ifstream in = OpenInput(path);
  Json manifest;
  try {
    manifest = Json::parse(in);
  } catch (const Json::parse_error& e) {
    // byte offsets are all the parser reports; convert to a line number
    std::ifstream again(path);
    std::size_t line = 1;
    char c = 0;
    for (std::size_t i = 0; i + 1 < e.byte && again.get(c); ++i) {
      if (c == '\n') ++line;
    }
    ParseFail(path, line, "malformed JSON");
  }
  if (!manifest.is_object() || !manifest.contains("points") || !manifest["points"].is_string()) {
    ParseFail(path, 1, "manifest needs a string field \"points\"");
  }
  const fs::path base = path.parent_path();
  Matrix points = ReadCsvMatrix(base / manifest["points"].get<std::string>());
  std::optional<Vector> w;
  if (weights) {
    w = ReadCsvWeights(*weights);
  } else if (manifest.contains("weights") && !manifest["weights"].is_null()) {
    if (!manifest["weights"].is_string()) ParseFail(path, 1, "\"weights\" must be a path or null");
    w = ReadCsvWeights(base / manifest["weights"].get<std::string>());
  }
  return DiscreteMeasure::Create(std::move(points), std::move(w));
}

void WriteMeasure(const fs::path& dir, const DiscreteMeasure& measure) {
  fs::create_directories(dir);
  WriteCsvMatrix(dir / "points.csv", measure.points());
  WriteCsvVector(dir / "weights.csv", measure.weights());
  WriteJson(dir / "measure.json", Json{{"points", "points.csv"}, {"weights", "weights.csv"}});
}

Json VectorToJson(const Vector& v) {
  Json out = Json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

Json MatrixToJson(const Matrix& m) {
  Json out = Json::array();
  for (Index i = 0; i < m.rows(); ++i) out.push_back(VectorToJson(m.row(i).transpose()));
  return out;
}

Json CouplingToJson(const LowRankCoupling& coupling) {
  return Json{{"q", MatrixToJson(coupling.q)}, {"r", MatrixToJson(coupling.r)}, {"g", VectorToJson(coupling.g)}};
}

Json ReportToJson(const SolveReport& report, bool include_timing) {
  Json j{
      {"cost_trace", report.cost_trace},
      {"delta_trace", report.delta_trace},
      {"gamma_trace", report.gamma_trace},
      {"op_count_trace", report.op_count_trace},
      {"inner_iters_trace", report.inner_iters_trace},
      {"converged", report.converged},
      {"iterations", report.iterations},
      {"inner_failures", report.inner_failures},
      {"max_inner_residual", report.max_inner_residual},
      {"kernel_floor_hits", report.kernel_floor_hits},
      {"min_kernel_entry", report.min_kernel_entry},
      {"zero_gradient_seen", report.zero_gradient_seen},
  };
  if (include_timing) j["metadata"] = Json{{"wall_time_seconds", report.wall_time_seconds}};
  return j;
}

std::string DumpJson(const Json& j) { return j.dump(2) + "\n"; }

void WriteJson(const fs::path& path, const Json& j) {
  std::ofstream out = OpenOutput(path);
  out << DumpJson(j);
}

}  // namespace lrot
