#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "fixpoint/body.hpp"
#include "fixpoint/certify.hpp"
#include "fixpoint/contraction.hpp"
#include "fixpoint/errors.hpp"
#include "fixpoint/finite.hpp"
#include "fixpoint/map_expr.hpp"
#include "fixpoint/norms.hpp"
#include "fixpoint/retraction.hpp"
#include "fixpoint/tchebyshev.hpp"
#include "scenario.hpp"

namespace fpcli {
namespace {

using fixpoint::ConvexBody;
using fixpoint::InputError;
using fixpoint::MapExpr;
using fixpoint::NormSpec;
using fixpoint::Vector;

constexpr const char* kVersion = "1.0.0";

struct Options {
  std::string scenarioPath, outPath, tracePath;
  std::optional<long long> seed;
  std::optional<double> tol;
  bool verbose = false;
  std::string forcedTask;          // empty: take the task from the scenario
  std::string pointsFile;          // center
  std::string norm = "euclidean";  // center without a scenario space
  bool checkInvariance = false;
  bool opCore = false, opGamma = false, opIsometry = false, opPipeline = false;
  std::string gridOut;  // retract
  double gridRes = 0.0;
};

struct TaskResult {
  bool pass = true;
  std::string trace;  // CSV; empty = nothing to write
};

void note(const Options& opt, const std::string& msg) {
  if (opt.verbose) std::cerr << "note: " << msg << "\n";
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path);
  out << text;
}

const ConvexBody& need_body(const Scenario& sc) {
  if (!sc.body) throw InputError("task \"" + sc.task + "\" requires a body");
  return *sc.body;
}

const NormSpec& need_space(const Scenario& sc) {
  if (sc.space.dimension < 1) throw InputError("task \"" + sc.task + "\" requires a space");
  return sc.space;
}

const Vector& need_anchor(const Scenario& sc) {
  if (sc.anchor.size() == 0) throw InputError("task \"" + sc.task + "\" requires an anchor point");
  if (sc.body && !sc.body->contains(sc.anchor, 1e-9))
    throw InputError("the anchor lies outside the body");
  return sc.anchor;
}

const MapExpr& need_target(const Scenario& sc) {
  if (!sc.target.empty()) return sc.mapNamed(sc.target);
  if (sc.family.size() == 1) return sc.mapNamed(sc.family.front());
  throw InputError("task \"" + sc.task + "\" needs a target map (or a one-member family)");
}

std::string csv_stabilization(const std::vector<fixpoint::StabilizationRecord>& records) {
  std::ostringstream os;
  os.precision(17);
  os << "stage,s,maxProbeDelta\n";
  for (const auto& r : records)
    for (std::size_t i = 0; i < r.sTried.size(); ++i)
      os << r.stage << ',' << r.sTried[i] << ',' << r.maxProbeDelta[i] << '\n';
  return os.str();
}

std::string csv_apfs(const fixpoint::ApfsCertificate& c) {
  std::ostringstream os;
  os.precision(17);
  os << "s,residual,bound\n";
  for (std::size_t i = 0; i < c.sValues.size(); ++i)
    os << c.sValues[i] << ',' << c.residuals[i] << ',' << c.bounds[i] << '\n';
  return os.str();
}

TaskResult run_certify(const Scenario& sc, Json& report) {
  const auto& body = need_body(sc);
  const auto& space = need_space(sc);
  if (sc.family.empty()) throw InputError("task \"certify\" requires a non-empty family");
  if (sc.checkFirm && !space.euclidean())
    throw InputError("firm-nonexpansivity certificates are euclidean-only");
  TaskResult res;
  Json certs = Json::array();
  auto record = [&](const fixpoint::PropertyCertificate& c, const std::string& subject) {
    res.pass = res.pass && c.passed();
    certs.push_back(to_json(c, subject));
  };
  for (const auto& name : sc.family) {
    const auto& expr = sc.mapNamed(name);
    record(fixpoint::certify_self_map(expr, body, sc.sampleCount, sc.certificateTol, sc.seed),
           name);
    record(fixpoint::certify_nonexpansive(expr, body, space, sc.sampleCount, sc.certificateTol,
                                          sc.seed),
           name);
    if (sc.checkFirm)
      record(fixpoint::certify_firmly_nonexpansive(expr, body, sc.sampleCount, {},
                                                   sc.certificateTol, sc.seed),
             name);
  }
  if (sc.family.size() >= 2)
    record(fixpoint::certify_commuting(sc.familyExprs(), body, space, sc.sampleCount,
                                       sc.certificateTol, sc.seed),
           "family");
  report["certificates"] = std::move(certs);
  return res;
}

TaskResult run_retract(const Scenario& sc, const Options& opt, Json& report) {
  const auto& body = need_body(sc);
  const auto& space = need_space(sc);
  if (sc.checkFirm && !space.euclidean())
    throw InputError("firm-nonexpansivity certificates are euclidean-only");
  note(opt, "building the retraction (" + std::to_string(sc.family.size()) + " family members)");
  auto model = fixpoint::build_retraction(sc.familyExprs(), body, space, sc.sSchedule,
                                          sc.stabilizationTol, sc.probeCount);
  // Certify against the level the construction actually guarantees.
  const double tol = std::max(sc.certificateTol, model.rangeBound());
  note(opt, "certifying at tolerance " + std::to_string(tol));
  auto cert = fixpoint::certify_retraction(model, sc.familyExprs(), body, space, sc.sampleCount,
                                           tol, sc.checkFirm);
  TaskResult res;
  res.pass = cert.pass();
  report["stages"] = model.stage();
  report["rangeBound"] = model.rangeBound();
  report["retraction"] = to_json(cert);
  res.trace = csv_stabilization(cert.stabilization);
  if (!opt.gridOut.empty()) {
    const double spacing = opt.gridRes > 0 ? opt.gridRes : sc.gridResolution;
    std::ostringstream os;
    os.precision(17);
    for (fixpoint::Index i = 0; i < body.dim(); ++i) os << "x" << i << ',';
    for (fixpoint::Index i = 0; i < body.dim(); ++i)
      os << "r" << i << (i + 1 < body.dim() ? "," : "\n");
    for (const auto& x : fixpoint::body_grid(body, spacing)) {
      const Vector rx = model(x);
      for (fixpoint::Index i = 0; i < x.size(); ++i) os << x[i] << ',';
      for (fixpoint::Index i = 0; i < rx.size(); ++i)
        os << rx[i] << (i + 1 < rx.size() ? "," : "\n");
    }
    write_text(opt.gridOut, os.str());
  }
  return res;
}

TaskResult run_resolvent(const Scenario& sc, const Options& opt, Json& report) {
  const auto& body = need_body(sc);
  const auto& space = need_space(sc);
  const auto& t = need_target(sc);
  const auto& x = need_anchor(sc);
  if (sc.s < 1) throw InputError("task \"resolvent\" requires an s >= 1");
  fixpoint::MapFn r = [](const Vector& v) { return v; };
  if (!sc.family.empty()) {
    note(opt, "building the inner retraction first");
    r = fixpoint::build_retraction(sc.familyExprs(), body, space, sc.sSchedule,
                                   sc.stabilizationTol, sc.probeCount)
            .asFn();
  }
  const double solveTol = std::max(1e-12, sc.certificateTol * 1e-2);
  fixpoint::ContractionSolveReport solve;
  const Vector f = fixpoint::resolvent(t, r, sc.s, x, body, solveTol, &solve);
  const double residual = norm_of(space.kind, t(r(f)) - f);
  const double bound = body.diameter(space).value / static_cast<double>(sc.s);
  report["s"] = sc.s;
  report["fixedPoint"] = to_json(f);
  report["residual"] = residual;
  report["bound"] = bound;
  report["solve"] = to_json(solve);
  TaskResult res;
  res.pass = residual <= bound + std::max(sc.certificateTol, 10 * solveTol);
  std::ostringstream os;
  os.precision(17);
  os << "s,residual,bound\n" << sc.s << ',' << residual << ',' << bound << '\n';
  res.trace = os.str();
  return res;
}

TaskResult run_apfs(const Scenario& sc, const Options& opt, Json& report) {
  const auto& body = need_body(sc);
  const auto& space = need_space(sc);
  const auto& t = need_target(sc);
  const auto& x = need_anchor(sc);
  auto model = sc.family.empty()
                   ? fixpoint::RetractionModel::identityOn(body, space)
                   : fixpoint::build_retraction(sc.familyExprs(), body, space, sc.sSchedule,
                                                sc.stabilizationTol, sc.probeCount);
  note(opt, "sweeping the s schedule");
  auto cert = fixpoint::apfs_certify(t, model.asFn(), x, body, space, sc.sSchedule,
                                     sc.certificateTol);
  report["apfs"] = to_json(cert);
  TaskResult res;
  res.pass = cert.pass;
  if (!sc.family.empty()) {
    fixpoint::ApfsTransferData data;
    auto transfer = fixpoint::apfs_transfer_check(t, sc.familyExprs(), model, body, space, x,
                                                  sc.sSchedule, sc.apfsTol, &data);
    report["transfer"] = to_json(transfer, "");
    report["transferData"] = to_json(data, sc.family);
    res.pass = res.pass && transfer.passed();
  }
  res.trace = csv_apfs(cert);
  return res;
}

TaskResult run_center(const Scenario& sc, Json& report) {
  const auto& space = need_space(sc);
  if (sc.points.empty())
    throw InputError("task \"center\" requires points (inline, pointsFile or --points-file)");
  auto center = fixpoint::chebyshev_center(sc.points, space, sc.certificateTol);
  report["pointCount"] = sc.points.size();
  report["center"] = to_json(center);
  TaskResult res;
  if (sc.checkInvariance) {
    if (sc.family.empty()) throw InputError("checkInvariance needs a family of maps");
    Json certs = Json::array();
    for (const auto& name : sc.family) {
      auto cert = fixpoint::invariance_check(sc.mapNamed(name), sc.points, space,
                                             sc.certificateTol);
      res.pass = res.pass && cert.passed();
      certs.push_back(to_json(cert, name));
    }
    report["certificates"] = std::move(certs);
  }
  return res;
}

TaskResult run_pipeline(const Scenario& sc, Json& report) {
  const auto& space = need_space(sc);
  if (sc.points.empty()) throw InputError("task \"pipeline\" requires points");
  if (sc.family.empty()) throw InputError("task \"pipeline\" requires a family");
  TaskResult res;
  Json certs = Json::array();
  auto fp = fixpoint::fixed_point_in_center(sc.familyExprs(), sc.points, space,
                                            sc.certificateTol);
  report["center"] = to_json(fp.center);
  report["fixedPoint"] = to_json(fp.point);
  for (const auto& name : sc.family) {
    auto inv = fixpoint::invariance_check(sc.mapNamed(name), sc.points, space, sc.certificateTol);
    res.pass = res.pass && inv.passed();
    certs.push_back(to_json(inv, name));
  }
  res.pass = res.pass && fp.certificate.passed();
  certs.push_back(to_json(fp.certificate, "fixedPoint"));
  report["certificates"] = std::move(certs);
  return res;
}

TaskResult run_finite(const Scenario& sc, const Options& opt, Json& report) {
  if (!sc.finite) throw InputError("task \"finite\" requires a finite system");
  const auto& sys = *sc.finite;
  std::vector<int> subset;
  std::vector<std::string> subjects;
  if (sc.mapSubset.empty()) {
    subjects = sys.mapNames;
  } else {
    for (const auto& name : sc.mapSubset) {
      auto it = std::find(sys.mapNames.begin(), sys.mapNames.end(), name);
      if (it == sys.mapNames.end())
        throw InputError("finite map \"" + name + "\" is not defined");
      subset.push_back(static_cast<int>(it - sys.mapNames.begin()));
      subjects.push_back(name);
    }
  }
  std::vector<std::string> ops;
  if (opt.opCore) ops.push_back("core");
  if (opt.opGamma) ops.push_back("gamma");
  if (opt.opIsometry) ops.push_back("isometry");
  if (opt.opPipeline) ops.push_back("pipeline");
  if (ops.empty()) ops = sc.finiteOps;
  if (ops.empty()) ops = {"pipeline"};

  TaskResult res;
  auto wants = [&](const char* op) {
    return std::find(ops.begin(), ops.end(), op) != ops.end();
  };
  if (wants("core")) report["core"] = to_json(fixpoint::eventual_core(sys, subset));
  if (wants("gamma")) {
    Json g;
    g["indices"] = fixpoint::gamma_set(sys, subset);
    auto cert = fixpoint::gamma_properties_check(sys, subset);
    res.pass = res.pass && cert.passed();
    g["certificate"] = to_json(cert, "");
    report["gamma"] = std::move(g);
  }
  if (wants("isometry")) {
    Json arr = Json::array();
    std::vector<int> indices = subset;
    if (indices.empty()) {
      indices.resize(sys.maps.size());
      std::iota(indices.begin(), indices.end(), 0);
    }
    std::vector<int> allPoints(sys.size());
    std::iota(allPoints.begin(), allPoints.end(), 0);
    for (std::size_t k = 0; k < indices.size(); ++k) {
      auto cert = fixpoint::isometry_check(sys, indices[k], allPoints);
      res.pass = res.pass && cert.passed();
      arr.push_back(to_json(cert, subjects[k]));
    }
    report["isometries"] = std::move(arr);
  }
  if (wants("pipeline")) {
    const auto embeddingNorm =
        sc.space.dimension >= 1 ? sc.space.kind : fixpoint::NormKind::Euclidean;
    auto rep = fixpoint::finite_pipeline(sys, subset, embeddingNorm);
    for (const auto& c : rep.isometries) res.pass = res.pass && c.passed();
    report["pipeline"] = to_json(rep, subjects);
  }
  return res;
}

void emit_report(const Options& opt, const Scenario& sc, const Json& report) {
  const std::string path = !opt.outPath.empty() ? opt.outPath : sc.outPath;
  const std::string text = report.dump(2) + "\n";
  if (path.empty())
    std::cout << text;
  else
    write_text(path, text);
}

int execute(const Options& opt) {
  Scenario sc;
  if (!opt.scenarioPath.empty())
    sc = parse_scenario_file(opt.scenarioPath);
  else if (opt.forcedTask == "center" && !opt.pointsFile.empty())
    sc.task = "center";
  else
    throw InputError("--scenario is required");

  if (!opt.forcedTask.empty()) {
    if (!sc.task.empty() && sc.task != opt.forcedTask)
      throw fixpoint::ConfigError("the scenario names task \"" + sc.task +
                                  "\" but the \"" + opt.forcedTask +
                                  "\" subcommand was invoked");
    sc.task = opt.forcedTask;
  }
  if (sc.task.empty())
    throw InputError("the scenario has no \"task\" field; add one or invoke a named subcommand");
  if (opt.seed) {
    if (*opt.seed < 0) throw InputError("--seed must be >= 0");
    sc.seed = static_cast<unsigned>(*opt.seed);
  }
  if (opt.tol) {
    if (!(*opt.tol > 0)) throw InputError("--tol must be > 0");
    sc.certificateTol = *opt.tol;
  }
  if (!opt.pointsFile.empty()) sc.points = parse_points_csv(opt.pointsFile);
  if (opt.checkInvariance) sc.checkInvariance = true;
  if (sc.space.dimension < 1 && !sc.points.empty())
    sc.space = NormSpec(fixpoint::norm_kind_from_string(opt.norm), sc.points.front().size());

  const auto t0 = std::chrono::steady_clock::now();
  Json report;
  report["schema"] = 1;
  report["version"] = kVersion;
  report["task"] = sc.task;
  report["seed"] = sc.seed;
  Json tols;
  tols["certificate"] = sc.certificateTol;
  tols["apfs"] = sc.apfsTol;
  tols["stabilization"] = sc.stabilizationTol;
  tols["grid"] = sc.gridResolution;
  report["tolerances"] = std::move(tols);

  TaskResult res;
  if (sc.task == "certify")
    res = run_certify(sc, report);
  else if (sc.task == "retract")
    res = run_retract(sc, opt, report);
  else if (sc.task == "resolvent")
    res = run_resolvent(sc, opt, report);
  else if (sc.task == "apfs")
    res = run_apfs(sc, opt, report);
  else if (sc.task == "center")
    res = run_center(sc, report);
  else if (sc.task == "pipeline")
    res = run_pipeline(sc, report);
  else if (sc.task == "finite")
    res = run_finite(sc, opt, report);
  else
    throw fixpoint::ConfigError("unknown task \"" + sc.task + "\"");

  report["pass"] = res.pass;
  report["timingMs"] =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  emit_report(opt, sc, report);
  const std::string tracePath = !opt.tracePath.empty() ? opt.tracePath : sc.tracePath;
  if (!tracePath.empty() && !res.trace.empty()) write_text(tracePath, res.trace);
  note(opt, res.pass ? "all certificates pass" : "at least one certificate FAILED");
  return res.pass ? 0 : 1;
}

void emit_error(const Options& opt, const char* kind, int exitCode, const std::string& message,
                const char* extraKey = nullptr, const std::string& extra = {}) {
  std::cerr << "error: " << message << "\n";
  Json j;
  j["schema"] = 1;
  j["version"] = kVersion;
  Json e;
  e["kind"] = kind;
  e["exitCode"] = exitCode;
  e["message"] = message;
  if (extraKey != nullptr && !extra.empty()) e[extraKey] = extra;
  j["error"] = std::move(e);
  const std::string text = j.dump(2) + "\n";
  if (opt.outPath.empty()) {
    std::cout << text;
  } else {
    std::ofstream out(opt.outPath);
    if (out) out << text;
  }
}

int guarded_execute(const Options& opt) {
  try {
    return execute(opt);
  } catch (const fixpoint::FalsificationError& e) {
    emit_error(opt, "falsification", 1, e.what(), "bundle", e.bundle());
    return 1;
  } catch (const fixpoint::SolverError& e) {
    emit_error(opt, "solver", 3, e.what(), "trace", e.trace());
    if (!opt.tracePath.empty() && !e.trace().empty()) {
      std::ofstream out(opt.tracePath);
      if (out) out << e.trace();
    }
    return 3;
  } catch (const fixpoint::InputError& e) {
    emit_error(opt, "input", 2, e.what());
    return 2;
  } catch (const nlohmann::json::exception& e) {
    emit_error(opt, "input", 2, e.what());
    return 2;
  } catch (const std::exception& e) {
    emit_error(opt, "internal", 3, e.what());
    return 3;
  }
}

int run_main(int argc, char** argv) {
  CLI::App app{
      "Constructive fixed-point toolkit: retractions onto common fixed-point sets of "
      "commuting nonexpansive families, resolvent sweeps, enclosing-ball centers and "
      "finite metric diagnostics. One scenario = one task; reports are deterministic "
      "JSON (schema 1), traces are CSV."};
  app.require_subcommand(1);
  Options opt;

  auto common = [&](CLI::App* sub, bool scenarioRequired) {
    auto* s = sub->add_option("--scenario", opt.scenarioPath, "Scenario JSON file (schema 1)");
    if (scenarioRequired) s->required();
    sub->add_option("--out", opt.outPath, "Write the report JSON here (default: stdout)");
    sub->add_option("--trace", opt.tracePath, "Write the CSV trace here");
    sub->add_option("--seed", opt.seed, "Override the scenario seed");
    sub->add_option("--tol", opt.tol, "Override the certificate tolerance");
    sub->add_flag("--verbose", opt.verbose, "Progress notes on stderr");
    return sub;
  };

  common(app.add_subcommand("run", "Execute the task named inside the scenario"), true);
  common(app.add_subcommand("certify",
                            "Self-map, nonexpansivity and commutation certificates for the "
                            "family (firm nonexpansivity with checkFirm)"),
         true);
  auto* retract = common(
      app.add_subcommand("retract", "Build and certify the retraction onto the family's "
                                    "common fixed-point set"),
      true);
  retract->add_option("--grid-out", opt.gridOut,
                      "Also evaluate the retraction on a body grid, written as CSV");
  retract->add_option("--grid-res", opt.gridRes,
                      "Grid spacing for --grid-out (default: the scenario grid tolerance)");
  common(app.add_subcommand("resolvent", "Solve one resolvent F_s at the anchor point"), true);
  common(app.add_subcommand("apfs", "Approximate-fixed-point sweep along the s schedule"), true);
  auto* center =
      common(app.add_subcommand("center", "Smallest enclosing ball of a point set"), false);
  center->add_option("--points-file", opt.pointsFile,
                     "CSV points, one per row (alternative to scenario points)");
  center->add_option("--norm", opt.norm, "Norm when no scenario space is given: euclidean|sum|max")
      ->capture_default_str();
  center->add_flag("--check-invariance", opt.checkInvariance,
                   "Certify that every family map sends the center to a center");
  auto* finite = common(app.add_subcommand("finite", "Finite metric system diagnostics"), true);
  finite->add_flag("--core", opt.opCore, "Stable set of the image-intersection iteration");
  finite->add_flag("--gamma", opt.opGamma,
                   "Commuting locus of the generated semigroup, with its invariance certificate");
  finite->add_flag("--isometry", opt.opIsometry,
                   "Per-map nonexpansive-surjection isometry certificates");
  finite->add_flag("--pipeline", opt.opPipeline,
                   "Chain the commuting locus, the core, per-map isometries and the embedded "
                   "center");
  common(app.add_subcommand("pipeline", "Center invariance and a common fixed point for a "
                                        "family preserving a finite point set"),
         true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  for (const auto* sub : app.get_subcommands())
    if (sub->get_name() != "run") opt.forcedTask = sub->get_name();
  return guarded_execute(opt);
}

}  // namespace
}  // namespace fpcli

int main(int argc, char** argv) { return fpcli::run_main(argc, argv); }
