#include "lrot/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "lrot/clustering.hpp"
#include "lrot/divergences.hpp"
#include "lrot/experiments.hpp"
#include "lrot/gradient_flow.hpp"
#include "lrot/io.hpp"
#include "lrot/parallel.hpp"

namespace lrot {

namespace fs = std::filesystem;

namespace {

struct Shared {
  Index rank = 10;
  double gamma = 10.0;
  std::string gamma_mode = "adaptive";
  std::string init = "kmeans";
  double epsilon = 0.1;
  double tol = 1e-6;
  int max_iters = 2000;
  std::uint64_t seed = 0;
  std::string cost = "sqeucl";
  std::optional<double> bandwidth;
  std::string out_dir;
  bool json = false;
  int threads = 0;
  int restarts = 1;
  bool timing = false;
};

// Input and configuration problems exit with 2, everything numerical with 1.
bool IsUsageKind(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidArgument:
    case ErrorKind::kEmptyMeasure:
    case ErrorKind::kNonPositiveWeight:
    case ErrorKind::kWeightSumMismatch:
    case ErrorKind::kDimensionMismatch:
    case ErrorKind::kSizeCapExceeded:
    case ErrorKind::kRankTooSmall:
    case ErrorKind::kAsymmetricCost:
    case ErrorKind::kNonPositiveBandwidth:
    case ErrorKind::kUsageError:
    case ErrorKind::kParseError:
      return true;
    default:
      return false;
  }
}

void AddShared(CLI::App* app, Shared& s) {
  app->add_option("-r,--rank", s.rank, "Rank (cluster count for `cluster`)")->check(CLI::PositiveNumber);
  app->add_option("--gamma", s.gamma, "Initial mirror-descent step")->check(CLI::PositiveNumber);
  app->add_option("--gamma-mode", s.gamma_mode, "Step schedule")->check(CLI::IsMember({"fixed", "adaptive"}));
  app->add_option("--init", s.init, "Initializer")
      ->check(CLI::IsMember({"random", "rank2", "kmeans", "general-kmeans"}));
  app->add_option("--epsilon", s.epsilon, "Entropic weight of the kmeans initializer")->check(CLI::PositiveNumber);
  app->add_option("--tol", s.tol, "Threshold on the stopping statistic")->check(CLI::PositiveNumber);
  app->add_option("--max-iters", s.max_iters, "Outer iteration cap")->check(CLI::PositiveNumber);
  app->add_option("--seed", s.seed, "Random seed");
  app->add_option("--cost", s.cost, "sqeucl, graph or file:<path>");
  app->add_option("--bandwidth", s.bandwidth, "Graph kernel bandwidth (default: median distance)");
  app->add_option("--out", s.out_dir, "Output directory");
  app->add_flag("--json", s.json, "Print the report to stdout as JSON");
  app->add_option("--threads", s.threads, "Worker threads (default: logical cores)")->check(CLI::NonNegativeNumber);
  app->add_option("--restarts", s.restarts, "Restarts, best value kept")->check(CLI::PositiveNumber);
  app->add_flag("--timing", s.timing, "Include wall-clock times in reports");
}

SolverConfig MakeSolverConfig(const Shared& s) {
  SolverConfig cfg;
  cfg.rank = s.rank;
  cfg.gamma = s.gamma;
  cfg.gamma_mode = s.gamma_mode == "fixed" ? GammaMode::kFixed : GammaMode::kAdaptive;
  cfg.outer_tol = s.tol;
  cfg.max_outer_iters = s.max_iters;
  cfg.seed = s.seed;
  return cfg;
}

LotOptions MakeLotOptions(const Shared& s) {
  LotOptions o;
  o.solver = MakeSolverConfig(s);
  o.init.kind = ParseInitKind(s.init);
  o.init.epsilon = s.epsilon;
  o.restarts = s.restarts;
  return o;
}

Json SharedConfigJson(const Shared& s) {
  Json j{{"rank", s.rank},       {"gamma", s.gamma},         {"gamma_mode", s.gamma_mode},
         {"init", s.init},       {"epsilon", s.epsilon},     {"tol", s.tol},
         {"max_iters", s.max_iters}, {"seed", s.seed},       {"cost", s.cost},
         {"restarts", s.restarts}};
  j["bandwidth"] = s.bandwidth ? Json(*s.bandwidth) : Json(nullptr);
  return j;
}

enum class CostKind { kSqEucl, kGraph, kFile };

struct CostSpec {
  CostKind kind = CostKind::kSqEucl;
  fs::path file;
};

CostSpec ParseCostSpec(const std::string& text) {
  if (text == "sqeucl") return {CostKind::kSqEucl, {}};
  if (text == "graph") return {CostKind::kGraph, {}};
  if (text.rfind("file:", 0) == 0 && text.size() > 5) return {CostKind::kFile, fs::path(text.substr(5))};
  throw Error(ErrorKind::kUsageError, "--cost must be sqeucl, graph or file:<path>, got '" + text + "'");
}

Matrix Stack(const Matrix& top, const Matrix& bottom) {
  if (top.cols() != bottom.cols()) throw Error(ErrorKind::kDimensionMismatch, "point dimensions differ");
  Matrix out(top.rows() + bottom.rows(), top.cols());
  out << top, bottom;
  return out;
}

// Costs between and within two measures. Graph and file costs live on the
// union of both supports (x first) and are cut into blocks.
struct PairCosts {
  CostMatrix xy;
  CostMatrix xx;
  CostMatrix yy;
};

PairCosts BuildPairCosts(const Shared& s, const DiscreteMeasure& x, const DiscreteMeasure& y) {
  const CostSpec spec = ParseCostSpec(s.cost);
  const Index n = x.size();
  const Index m = y.size();
  if (spec.kind == CostKind::kSqEucl) {
    if (!x.has_points() || !y.has_points()) throw Error(ErrorKind::kUsageError, "sqeucl cost needs points");
    return {SqEuclideanFactored(x.points(), y.points()), SqEuclideanFactored(x.points(), x.points()),
            SqEuclideanFactored(y.points(), y.points())};
  }
  Matrix full;
  if (spec.kind == CostKind::kGraph) {
    full = ShortestPathCost(Stack(x.points(), y.points()), s.bandwidth).dense_entries();
  } else {
    full = ReadCsvMatrix(spec.file);
  }
  if (full.rows() != n + m || full.cols() != n + m) {
    throw Error(ErrorKind::kDimensionMismatch, "cost over the union of supports must be " + std::to_string(n + m) +
                                                   " x " + std::to_string(n + m));
  }
  return {CostMatrix::FromDense(full.block(0, 0, n, m)), CostMatrix::FromDense(full.block(0, 0, n, n)),
          CostMatrix::FromDense(full.block(n, n, m, m))};
}

// Writes report.json under --out and prints either the JSON or a summary.
struct Emitter {
  const Shared& shared;
  std::ostream& out;

  void Emit(const Json& report, const std::string& summary) const {
    if (!shared.out_dir.empty()) WriteJson(fs::path(shared.out_dir) / "report.json", report);
    if (shared.json) {
      out << DumpJson(report);
    } else {
      out << summary;
    }
  }
};

Json BaseReport(const std::string& command, const Shared& s) {
  return Json{{"schema_version", kSchemaVersion}, {"command", command}, {"config", SharedConfigJson(s)}};
}

std::string ValueLine(const std::string& name, double v) { return name + " " + FormatDouble(v) + "\n"; }

struct MeasureArgs {
  std::string x_path;
  std::string y_path;
  std::optional<std::string> x_weights;
  std::optional<std::string> y_weights;
};

void AddMeasureArgs(CLI::App* app, MeasureArgs& m, bool need_y) {
  app->add_option("x", m.x_path, "Source points CSV or manifest JSON")->required();
  if (need_y) app->add_option("y", m.y_path, "Target points CSV or manifest JSON")->required();
  app->add_option("--x-weights", m.x_weights, "Weights CSV for x");
  if (need_y) app->add_option("--y-weights", m.y_weights, "Weights CSV for y");
}

DiscreteMeasure LoadMeasure(const std::string& path, const std::optional<std::string>& weights) {
  std::optional<fs::path> w;
  if (weights) w = fs::path(*weights);
  return ReadMeasure(path, w);
}

Json InputsJson(const MeasureArgs& m) {
  Json j{{"x", m.x_path}};
  if (!m.y_path.empty()) j["y"] = m.y_path;
  if (m.x_weights) j["x_weights"] = *m.x_weights;
  if (m.y_weights) j["y_weights"] = *m.y_weights;
  return j;
}

void WriteCoupling(const Shared& s, const std::string& prefix, const LowRankCoupling& c) {
  if (s.out_dir.empty()) return;
  const fs::path dir(s.out_dir);
  WriteCsvMatrix(dir / (prefix + "q.csv"), c.q);
  WriteCsvMatrix(dir / (prefix + "r.csv"), c.r);
  WriteCsvVector(dir / (prefix + "g.csv"), c.g);
}

int RunSolve(const Shared& s, const MeasureArgs& m, std::ostream& out) {
  const DiscreteMeasure x = LoadMeasure(m.x_path, m.x_weights);
  const DiscreteMeasure y = LoadMeasure(m.y_path, m.y_weights);
  const PairCosts costs = BuildPairCosts(s, x, y);
  Json report = BaseReport("solve", s);
  report["inputs"] = InputsJson(m);
  const Emitter emit{s, out};
  try {
    const SolveResult res = SolveLot(costs.xy, x, y, MakeLotOptions(s));
    report["value"] = res.value;
    report["converged"] = res.report.converged;
    report["report"] = ReportToJson(res.report, s.timing);
    report["coupling"] = CouplingToJson(res.coupling);
    WriteCoupling(s, "", res.coupling);
    emit.Emit(report, ValueLine("value", res.value));
  } catch (const SolveError& e) {
    report["error"] = Json{{"kind", ErrorKindName(e.kind())}, {"message", e.message()}};
    report["report"] = ReportToJson(e.partial_report(), s.timing);
    emit.Emit(report, "");
    throw;
  }
  return 0;
}

int RunDivergence(const Shared& s, const MeasureArgs& m, std::ostream& out) {
  const DiscreteMeasure x = LoadMeasure(m.x_path, m.x_weights);
  const DiscreteMeasure y = LoadMeasure(m.y_path, m.y_weights);
  const PairCosts costs = BuildPairCosts(s, x, y);
  const DivergenceValue d = Dlot(x, y, costs.xy, costs.xx, costs.yy, MakeLotOptions(s));
  Json report = BaseReport("divergence", s);
  report["inputs"] = InputsJson(m);
  report["value"] = d.value;
  report["lot_xy"] = d.lot_xy;
  report["lot_xx"] = d.lot_xx;
  report["lot_yy"] = d.lot_yy;
  report["reports"] = Json{{"xy", ReportToJson(d.reports[0], s.timing)},
                           {"xx", ReportToJson(d.reports[1], s.timing)},
                           {"yy", ReportToJson(d.reports[2], s.timing)}};
  WriteCoupling(s, "xy_", d.couplings[0]);
  Emitter{s, out}.Emit(report, ValueLine("dlot", d.value));
  return 0;
}

int RunCluster(const Shared& s, const MeasureArgs& m, std::ostream& out) {
  const DiscreteMeasure x = LoadMeasure(m.x_path, m.x_weights);
  const CostSpec spec = ParseCostSpec(s.cost);
  CostMatrix cost = spec.kind == CostKind::kSqEucl ? SqEuclideanFactored(x.points(), x.points())
                    : spec.kind == CostKind::kGraph ? ShortestPathCost(x.points(), s.bandwidth)
                                                    : CostMatrix::FromDense(ReadCsvMatrix(spec.file));
  if (cost.rows() != x.size() || cost.cols() != x.size()) {
    throw Error(ErrorKind::kDimensionMismatch, "cluster cost must be n x n");
  }
  const double scale = cost.max_abs() > 0.0 ? cost.max_abs() : 1.0;
  ClusterOptions opts;
  opts.solver = MakeSolverConfig(s);
  opts.restarts = s.restarts;
  const ClusterResult res = LotCluster(cost.Scaled(1.0 / scale), x.weights(), s.rank, opts);
  Json report = BaseReport("cluster", s);
  report["inputs"] = InputsJson(m);
  report["objective"] = res.objective * scale;
  report["labels"] = res.labels;
  report["q"] = MatrixToJson(res.q);
  report["g"] = VectorToJson(res.g);
  report["winning_seed"] = res.seed;
  report["report"] = ReportToJson(res.report, s.timing);
  if (!s.out_dir.empty()) WriteCsvLabels(fs::path(s.out_dir) / "labels.csv", res.labels);
  Emitter{s, out}.Emit(report, ValueLine("objective", res.objective * scale));
  return 0;
}

struct FlowArgs {
  int steps = 300;
  double learning_rate = 0.1;
  std::string objective = "dlot";
  int snapshot_every = 0;
  int solver_iters = 0;
};

Json FlowTraceJson(const FlowTrace& t) {
  Json j{{"loss_trace", t.loss_trace}, {"grad_norm_trace", t.grad_norm_trace}, {"steps_done", t.steps_done}};
  Json steps = Json::array();
  for (const auto& [step, pts] : t.snapshots) steps.push_back(step);
  j["snapshot_steps"] = steps;
  return j;
}

void WriteSnapshots(const Shared& s, const FlowTrace& t) {
  if (s.out_dir.empty()) return;
  for (const auto& [step, pts] : t.snapshots) {
    std::ostringstream name;
    name << "snapshot_" << std::setw(5) << std::setfill('0') << step << ".csv";
    WriteCsvMatrix(fs::path(s.out_dir) / name.str(), pts);
  }
}

int RunFlow(const Shared& s, const MeasureArgs& m, const FlowArgs& f, std::ostream& out) {
  const DiscreteMeasure x = LoadMeasure(m.x_path, std::nullopt);
  const DiscreteMeasure y = LoadMeasure(m.y_path, m.y_weights);
  if (ParseCostSpec(s.cost).kind != CostKind::kSqEucl) {
    throw Error(ErrorKind::kUsageError, "flow supports the sqeucl cost only");
  }
  FlowConfig cfg;
  cfg.rank = s.rank;
  cfg.steps = f.steps;
  cfg.learning_rate = f.learning_rate;
  cfg.objective = ParseFlowObjective(f.objective);
  cfg.snapshot_every = f.snapshot_every;
  cfg.lot = MakeLotOptions(s);
  if (f.solver_iters > 0) cfg.lot.solver.max_outer_iters = f.solver_iters;

  Json report = BaseReport("flow", s);
  report["inputs"] = InputsJson(m);
  report["flow"] = Json{{"steps", f.steps},
                        {"learning_rate", f.learning_rate},
                        {"objective", f.objective},
                        {"snapshot_every", f.snapshot_every},
                        {"solver_iters", cfg.lot.solver.max_outer_iters},
                        {"scale_by_mass", cfg.scale_by_mass}};
  const Emitter emit{s, out};
  try {
    const FlowTrace t = FlowRun(x.points(), y, cfg);
    report["trace"] = FlowTraceJson(t);
    report["final_loss"] = t.loss_trace.back();
    WriteSnapshots(s, t);
    if (!s.out_dir.empty()) WriteCsvMatrix(fs::path(s.out_dir) / "final_points.csv", t.final_points);
    emit.Emit(report, ValueLine("final_loss", t.loss_trace.back()));
  } catch (const FlowError& e) {
    report["error"] = Json{{"kind", ErrorKindName(e.kind())}, {"message", e.message()}};
    report["trace"] = FlowTraceJson(e.partial_trace());
    WriteSnapshots(s, e.partial_trace());
    emit.Emit(report, "");
    throw;
  }
  return 0;
}

struct RatesArgs {
  std::vector<Index> dims{5, 10};
  std::vector<Index> sizes{100, 200, 400, 800, 1600, 3200};
  std::vector<Index> ranks{1, 5};
  int trials = 10;
};

Json ExperimentManifest(const std::string& name, const Shared& s, Json config, Json metrics) {
  Json j{{"schema_version", kSchemaVersion}, {"experiment", name}, {"version", kVersion},
         {"seed", s.seed}, {"config", std::move(config)}, {"metrics", std::move(metrics)}};
  j["config"]["solver"] = SharedConfigJson(s);
  return j;
}

void WriteExperimentCsv(const Shared& s, const std::string& file, const std::string& body) {
  if (s.out_dir.empty()) return;
  const fs::path path = fs::path(s.out_dir) / file;
  fs::create_directories(path.parent_path());
  std::ofstream(path) << body;
}

int RunRates(const Shared& s, const RatesArgs& a, std::ostream& out) {
  RateGrid grid;
  grid.dims = a.dims;
  grid.sample_sizes = a.sizes;
  grid.ranks = a.ranks;
  grid.trials = a.trials;
  grid.seed = s.seed;
  const std::vector<RateRow> rows = RatesExperiment(grid, MakeLotOptions(s));
  const std::vector<RateSlope> slopes = RateSlopes(grid, rows);

  std::ostringstream csv;
  csv << "d,n,r,trial,dlot\n";
  for (const auto& row : rows) {
    csv << row.d << ',' << row.n << ',' << row.r << ',' << row.trial << ',' << FormatDouble(row.value) << '\n';
  }
  Json metrics = Json::array();
  std::string summary;
  for (const auto& sl : slopes) {
    metrics.push_back(Json{{"d", sl.d}, {"r", sl.r}, {"slope", sl.slope}, {"medians", sl.medians}});
    summary += "d=" + std::to_string(sl.d) + " r=" + std::to_string(sl.r) + " slope " + FormatDouble(sl.slope) + "\n";
  }
  Json config{{"dims", a.dims}, {"sample_sizes", a.sizes}, {"ranks", a.ranks}, {"trials", a.trials},
              {"mixture", Json{{"components", 10},
                               {"mean_range", Json::array({-grid.mixture.mean_half_width, grid.mixture.mean_half_width})},
                               {"variance_range", Json::array({grid.mixture.variance_min, grid.mixture.variance_max})}}}};
  WriteExperimentCsv(s, "rates/rates.csv", csv.str());
  Json manifest = ExperimentManifest("rates", s, std::move(config), Json{{"slopes", metrics}});
  if (!s.out_dir.empty()) WriteJson(fs::path(s.out_dir) / "rates" / "manifest.json", manifest);
  out << (s.json ? DumpJson(manifest) : summary);
  return 0;
}

int RunApproxGap(const Shared& s, Index n, const std::vector<Index>& ranks, std::ostream& out) {
  LotOptions opts = MakeLotOptions(s);
  const GapResult res = ApproxGapExperiment(n, ranks, opts, s.seed);
  std::ostringstream csv;
  csv << "r,lot,ot,bound,cost_max\n";
  Json rows = Json::array();
  std::string summary;
  for (const auto& row : res.rows) {
    csv << row.r << ',' << FormatDouble(row.lot_value) << ',' << FormatDouble(row.ot_value) << ','
        << FormatDouble(row.bound) << ',' << FormatDouble(row.cost_max) << '\n';
    rows.push_back(Json{{"r", row.r}, {"lot", row.lot_value}, {"ot", row.ot_value}, {"bound", row.bound},
                        {"cost_max", row.cost_max}});
    summary += "r=" + std::to_string(row.r) + " gap " + FormatDouble(row.lot_value - row.ot_value) + " bound " +
               FormatDouble(row.bound) + "\n";
  }
  summary += std::string("bound holds: ") + (res.bound_holds ? "yes" : "no") + "\n";
  WriteExperimentCsv(s, "approx_gap/gap.csv", csv.str());
  Json manifest = ExperimentManifest("approx-gap", s, Json{{"n", n}, {"ranks", ranks}},
                                     Json{{"rows", rows}, {"bound_holds", res.bound_holds}});
  if (!s.out_dir.empty()) WriteJson(fs::path(s.out_dir) / "approx_gap" / "manifest.json", manifest);
  out << (s.json ? DumpJson(manifest) : summary);
  return res.bound_holds ? 0 : 1;
}

int RunInitCompare(const Shared& s, Index points, const std::vector<Index>& ranks, std::ostream& out) {
  const InitComparisonData data = MakeInitSurrogate(points, s.seed);
  const std::vector<InitTrace> traces = InitComparisonExperiment(data, ranks, MakeSolverConfig(s), s.epsilon);
  std::ostringstream csv;
  csv << "init,rank,iteration,op_count,cost,delta\n";
  Json metrics = Json::array();
  std::string summary;
  for (const auto& t : traces) {
    const std::string name(InitKindName(t.init));
    for (std::size_t k = 0; k < t.cost_trace.size(); ++k) {
      csv << name << ',' << t.rank << ',' << k + 1 << ',' << t.op_count_trace[k] << ','
          << FormatDouble(t.cost_trace[k]) << ',' << FormatDouble(t.delta_trace[k]) << '\n';
    }
    metrics.push_back(Json{{"init", name},
                           {"rank", t.rank},
                           {"final_cost", t.final_cost},
                           {"init_ops", t.init_ops},
                           {"stop_iteration", t.stop_iteration}});
    summary += name + " r=" + std::to_string(t.rank) + " final " + FormatDouble(t.final_cost) + " stop " +
               std::to_string(t.stop_iteration) + "\n";
  }
  WriteExperimentCsv(s, "init_compare/traces.csv", csv.str());
  Json manifest = ExperimentManifest(
      "init-compare", s,
      Json{{"points", points}, {"ranks", ranks}, {"dim", 50}, {"cost", "squared Euclidean, divided by its maximum"}},
      Json{{"runs", metrics}});
  if (!s.out_dir.empty()) WriteJson(fs::path(s.out_dir) / "init_compare" / "manifest.json", manifest);
  out << (s.json ? DumpJson(manifest) : summary);
  return 0;
}

int ResolveThreads(int flag) {
  if (const char* env = std::getenv("LOWRANK_OT_THREADS"); env != nullptr && *env != '\0') {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (*end != '\0' || v < 1) throw Error(ErrorKind::kUsageError, "LOWRANK_OT_THREADS must be a positive integer");
    return static_cast<int>(v);
  }
  if (flag > 0) return flag;
  return std::max(1U, std::thread::hardware_concurrency());
}

}  // namespace

int RunCli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Low-rank optimal transport toolkit", "lowrank-ot"};
  app.require_subcommand(1, 1);
  app.set_version_flag("--version", kVersion);

  Shared shared;
  MeasureArgs measures;
  FlowArgs flow;
  RatesArgs rates;
  Index gap_n = 64;
  std::vector<Index> gap_ranks{2, 4, 8, 16, 32, 64};
  Index init_points = 250;
  std::vector<Index> init_ranks{10, 50};

  CLI::App* solve = app.add_subcommand("solve", "LOT value between two measures");
  AddShared(solve, shared);
  AddMeasureArgs(solve, measures, true);

  CLI::App* divergence = app.add_subcommand("divergence", "Debiased LOT between two measures");
  AddShared(divergence, shared);
  AddMeasureArgs(divergence, measures, true);

  CLI::App* cluster = app.add_subcommand("cluster", "Generalized k-means with --rank clusters");
  AddShared(cluster, shared);
  AddMeasureArgs(cluster, measures, false);

  CLI::App* flow_cmd = app.add_subcommand("flow", "Particle flow from x towards y");
  AddShared(flow_cmd, shared);
  AddMeasureArgs(flow_cmd, measures, true);
  flow_cmd->add_option("--steps", flow.steps, "Gradient steps")->check(CLI::PositiveNumber);
  flow_cmd->add_option("--lr", flow.learning_rate, "Learning rate")->check(CLI::PositiveNumber);
  flow_cmd->add_option("--objective", flow.objective, "dlot or lot")->check(CLI::IsMember({"dlot", "lot"}));
  flow_cmd->add_option("--snapshot-every", flow.snapshot_every, "Snapshot period (0: first and last)")
      ->check(CLI::NonNegativeNumber);
  flow_cmd->add_option("--solver-iters", flow.solver_iters, "Outer iterations per solve (0: --max-iters)")
      ->check(CLI::NonNegativeNumber);

  CLI::App* rates_cmd = app.add_subcommand("rates", "Sample-complexity experiment");
  AddShared(rates_cmd, shared);
  rates_cmd->add_option("--dims", rates.dims, "Dimensions")->delimiter(',');
  rates_cmd->add_option("--sizes", rates.sizes, "Sample sizes")->delimiter(',');
  rates_cmd->add_option("--ranks", rates.ranks, "Ranks")->delimiter(',');
  rates_cmd->add_option("--trials", rates.trials, "Trials per cell");

  CLI::App* gap_cmd = app.add_subcommand("approx-gap", "LOT versus exact OT across ranks");
  AddShared(gap_cmd, shared);
  gap_cmd->add_option("--n", gap_n, "Points per measure (<= 128)");
  gap_cmd->add_option("--ranks", gap_ranks, "Ranks (>= 2)")->delimiter(',');

  CLI::App* init_cmd = app.add_subcommand("init-compare", "Initializer comparison on a synthetic surrogate");
  AddShared(init_cmd, shared);
  init_cmd->add_option("--points", init_points, "Points per measure");
  init_cmd->add_option("--ranks", init_ranks, "Ranks")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    SetThreadCount(ResolveThreads(shared.threads));
    if (!shared.out_dir.empty()) fs::create_directories(shared.out_dir);
    if (solve->parsed()) return RunSolve(shared, measures, out);
    if (divergence->parsed()) return RunDivergence(shared, measures, out);
    if (cluster->parsed()) return RunCluster(shared, measures, out);
    if (flow_cmd->parsed()) return RunFlow(shared, measures, flow, out);
    if (rates_cmd->parsed()) return RunRates(shared, rates, out);
    if (gap_cmd->parsed()) return RunApproxGap(shared, gap_n, gap_ranks, out);
    if (init_cmd->parsed()) return RunInitCompare(shared, init_points, init_ranks, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return IsUsageKind(e.kind()) ? 2 : 1;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}

}  // namespace lrot
