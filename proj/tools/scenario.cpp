#include "scenario.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "fixpoint/errors.hpp"

namespace fpcli {

using fixpoint::ConfigError;
using fixpoint::ConvexBody;
using fixpoint::Halfspace;
using fixpoint::InputError;
using fixpoint::MapExpr;
using fixpoint::Matrix;
using fixpoint::Vector;

namespace {

[[noreturn]] void fail(const std::string& msg) { throw InputError("scenario: " + msg); }

const Json& member(const Json& j, const char* key, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end()) fail(where + " is missing the \"" + key + "\" field");
  return *it;
}

void check_keys(const Json& j, const std::string& where,
                std::initializer_list<const char*> allowed) {
  for (const auto& item : j.items()) {
    bool known = std::any_of(allowed.begin(), allowed.end(),
                             [&](const char* k) { return item.key() == k; });
    if (!known) fail("unknown field \"" + item.key() + "\" in " + where);
  }
}

double as_number(const Json& j, const std::string& where) {
  if (!j.is_number()) fail(where + " must be a number");
  return j.get<double>();
}

long long as_integer(const Json& j, const std::string& where) {
  if (!j.is_number_integer()) fail(where + " must be an integer");
  return j.get<long long>();
}

std::string as_string(const Json& j, const std::string& where) {
  if (!j.is_string()) fail(where + " must be a string");
  return j.get<std::string>();
}

Vector as_vector(const Json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) fail(where + " must be a non-empty array of numbers");
  Vector v(static_cast<fixpoint::Index>(j.size()));
  fixpoint::Index k = 0;
  for (const auto& e : j) v[k++] = as_number(e, where + " entry");
  fixpoint::require_finite(v, where.c_str());
  return v;
}

std::vector<Vector> as_point_list(const Json& j, const std::string& where) {
  if (!j.is_array()) fail(where + " must be an array of points");
  std::vector<Vector> pts;
  pts.reserve(j.size());
  for (const auto& e : j) pts.push_back(as_vector(e, where + " point"));
  return pts;
}

Matrix as_matrix(const Json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) fail(where + " must be a non-empty array of rows");
  const auto rows = static_cast<fixpoint::Index>(j.size());
  fixpoint::Index cols = -1;
  Matrix m;
  fixpoint::Index r = 0;
  for (const auto& row : j) {
    Vector v = as_vector(row, where + " row");
    if (cols < 0) {
      cols = v.size();
      m.resize(rows, cols);
    } else if (v.size() != cols) {
      fail(where + " rows have mixed lengths");
    }
    m.row(r++) = v.transpose();
  }
  return m;
}

ConvexBody parse_body(const Json& j) {
  if (!j.is_object()) fail("body must be an object with a \"shape\" field");
  const std::string shape = as_string(member(j, "shape", "body"), "body.shape");
  if (shape == "box") {
    check_keys(j, "body (box)", {"shape", "lo", "hi"});
    return ConvexBody::box(as_vector(member(j, "lo", "box body"), "body.lo"),
                           as_vector(member(j, "hi", "box body"), "body.hi"));
  }
  if (shape == "ball") {
    check_keys(j, "body (ball)", {"shape", "center", "radius"});
    return ConvexBody::ball(as_vector(member(j, "center", "ball body"), "body.center"),
                            as_number(member(j, "radius", "ball body"), "body.radius"));
  }
  if (shape == "hull") {
    check_keys(j, "body (hull)", {"shape", "points"});
    return ConvexBody::hull(as_point_list(member(j, "points", "hull body"), "body.points"));
  }
  if (shape == "polytope") {
    check_keys(j, "body (polytope)", {"shape", "halfspaces"});
    const Json& hs = member(j, "halfspaces", "polytope body");
    if (!hs.is_array() || hs.empty()) fail("body.halfspaces must be a non-empty array");
    std::vector<Halfspace> list;
    for (const auto& h : hs) {
      check_keys(h, "halfspace", {"normal", "offset"});
      list.push_back({as_vector(member(h, "normal", "halfspace"), "halfspace.normal"),
                      as_number(member(h, "offset", "halfspace"), "halfspace.offset")});
    }
    return ConvexBody::polytope(std::move(list));
  }
  fail("unknown body shape \"" + shape + "\"");
}

using NamedMaps = std::map<std::string, MapExpr>;

MapExpr parse_map(const Json& j, const NamedMaps& defined);

std::vector<MapExpr> parse_map_list(const Json& j, const NamedMaps& defined,
                                    const std::string& where) {
  if (!j.is_array() || j.empty()) fail(where + " must be a non-empty array");
  std::vector<MapExpr> out;
  out.reserve(j.size());
  for (const auto& e : j) out.push_back(parse_map(e, defined));
  return out;
}

MapExpr parse_map(const Json& j, const NamedMaps& defined) {
  if (j.is_string()) {
    auto it = defined.find(j.get<std::string>());
    if (it == defined.end())
      fail("map reference \"" + j.get<std::string>() + "\" is not defined (maps are "
           "resolved in declaration order)");
    return it->second;
  }
  if (!j.is_object()) fail("a map must be an object with a \"map\" field or a name string");
  const std::string kind = as_string(member(j, "map", "map"), "map kind");
  if (kind == "affine") {
    check_keys(j, "map (affine)", {"map", "matrix", "offset"});
    return MapExpr::affine(as_matrix(member(j, "matrix", "affine map"), "affine.matrix"),
                           as_vector(member(j, "offset", "affine map"), "affine.offset"));
  }
  if (kind == "projectOnto") {
    check_keys(j, "map (projectOnto)", {"map", "body"});
    return MapExpr::projectOnto(parse_body(member(j, "body", "projectOnto map")));
  }
  if (kind == "rotation") {
    check_keys(j, "map (rotation)", {"map", "plane", "angle"});
    const Json& plane = member(j, "plane", "rotation map");
    if (!plane.is_array() || plane.size() != 2) fail("rotation.plane must be [i, j]");
    return MapExpr::rotation(static_cast<fixpoint::Index>(as_integer(plane[0], "rotation.plane")),
                             static_cast<fixpoint::Index>(as_integer(plane[1], "rotation.plane")),
                             as_number(member(j, "angle", "rotation map"), "rotation.angle"));
  }
  if (kind == "constant") {
    check_keys(j, "map (constant)", {"map", "point"});
    return MapExpr::constant(as_vector(member(j, "point", "constant map"), "constant.point"));
  }
  if (kind == "compose") {
    check_keys(j, "map (compose)", {"map", "of"});
    return MapExpr::compose(parse_map_list(member(j, "of", "compose map"), defined, "compose.of"));
  }
  if (kind == "convexCombo") {
    check_keys(j, "map (convexCombo)", {"map", "of", "weights"});
    const Json& w = member(j, "weights", "convexCombo map");
    if (!w.is_array()) fail("convexCombo.weights must be an array of numbers");
    std::vector<double> weights;
    for (const auto& e : w) weights.push_back(as_number(e, "convexCombo.weights entry"));
    return MapExpr::convexCombo(
        std::move(weights),
        parse_map_list(member(j, "of", "convexCombo map"), defined, "convexCombo.of"));
  }
  if (kind == "identity") {
    check_keys(j, "map (identity)", {"map"});
    return MapExpr::identity();
  }
  fail("unknown map kind \"" + kind + "\"");
}

fixpoint::FiniteSystem parse_finite(const Json& j, std::vector<std::string>* names) {
  if (!j.is_object()) fail("finite must be an object");
  check_keys(j, "finite", {"distance", "maps", "embedding"});
  Matrix d = as_matrix(member(j, "distance", "finite"), "finite.distance");
  const Json& maps = member(j, "maps", "finite");
  if (!maps.is_object() || maps.empty()) fail("finite.maps must be a non-empty object");
  std::vector<std::pair<std::string, fixpoint::IndexMap>> named;
  for (const auto& item : maps.items()) {
    const Json& arr = item.value();
    if (!arr.is_array()) fail("finite.maps." + item.key() + " must be an index array");
    fixpoint::IndexMap m;
    for (const auto& e : arr)
      m.push_back(static_cast<int>(as_integer(e, "finite.maps." + item.key() + " entry")));
    named.emplace_back(item.key(), std::move(m));
    names->push_back(item.key());
  }
  std::vector<Vector> embedding;
  if (auto it = j.find("embedding"); it != j.end())
    embedding = as_point_list(*it, "finite.embedding");
  return fixpoint::FiniteSystem::create(std::move(d), std::move(named), std::move(embedding));
}

}  // namespace

const MapExpr& Scenario::mapNamed(const std::string& name) const {
  for (const auto& [n, expr] : maps)
    if (n == name) return expr;
  fail("map \"" + name + "\" is not defined");
}

std::vector<MapExpr> Scenario::familyExprs() const {
  std::vector<MapExpr> out;
  out.reserve(family.size());
  for (const auto& name : family) out.push_back(mapNamed(name));
  return out;
}

std::vector<Vector> parse_points_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open points file: " + path);
  std::vector<Vector> pts;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (line[line.find_first_not_of(" \t")] == '#') continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
        while (used < cell.size() && std::isspace(static_cast<unsigned char>(cell[used]))) ++used;
        if (used != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw InputError("points file " + path + ": cannot parse \"" + cell + "\" as a number");
      }
    }
    Vector v(static_cast<fixpoint::Index>(row.size()));
    for (std::size_t i = 0; i < row.size(); ++i) v[static_cast<fixpoint::Index>(i)] = row[i];
    if (!pts.empty() && v.size() != pts.front().size())
      throw InputError("points file " + path + ": rows have mixed widths");
    fixpoint::require_finite(v, "points file row");
    pts.push_back(std::move(v));
  }
  if (pts.empty()) throw InputError("points file " + path + " holds no points");
  return pts;
}

Scenario parse_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open scenario file: " + path);
  Json j;
  try {
    j = Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw InputError("scenario " + path + " is not valid JSON: " + e.what());
  }
  return parse_scenario(j, std::filesystem::path(path).parent_path().string());
}

Scenario parse_scenario(const Json& j, const std::string& baseDir) {
  if (!j.is_object()) fail("top level must be a JSON object");
  check_keys(j, "the scenario",
             {"schema", "task", "space", "body", "maps", "family", "target", "anchor", "s",
              "sSchedule", "tolerances", "probeCount", "sampleCount", "seed", "checkFirm",
              "checkInvariance", "points", "pointsFile", "finite", "mapSubset", "finiteOps",
              "output"});
  const long long schema = as_integer(member(j, "schema", "the scenario"), "schema");
  if (schema != 1) fail("unsupported schema " + std::to_string(schema) + " (this tool reads 1)");

  Scenario sc;
  if (auto it = j.find("task"); it != j.end()) sc.task = as_string(*it, "task");

  if (auto it = j.find("space"); it != j.end()) {
    check_keys(*it, "space", {"norm", "dimension"});
    const auto kind = fixpoint::norm_kind_from_string(as_string(member(*it, "norm", "space"), "space.norm"));
    const long long dim = as_integer(member(*it, "dimension", "space"), "space.dimension");
    if (dim < 1) fail("space.dimension must be >= 1");
    sc.space = fixpoint::NormSpec(kind, static_cast<fixpoint::Index>(dim));
  }
  if (auto it = j.find("body"); it != j.end()) sc.body = parse_body(*it);

  NamedMaps defined;
  if (auto it = j.find("maps"); it != j.end()) {
    if (!it->is_object()) fail("maps must be an object of named map expressions");
    for (const auto& item : it->items()) {
      MapExpr expr = parse_map(item.value(), defined);
      defined.emplace(item.key(), expr);
      sc.maps.emplace_back(item.key(), std::move(expr));
    }
  }
  if (auto it = j.find("family"); it != j.end()) {
    if (!it->is_array()) fail("family must be an array of map names");
    for (const auto& e : it->items()) {
      sc.family.push_back(as_string(e.value(), "family entry"));
      sc.mapNamed(sc.family.back());  // resolves or throws
    }
  }
  if (auto it = j.find("target"); it != j.end()) {
    sc.target = as_string(*it, "target");
    sc.mapNamed(sc.target);
  }
  if (auto it = j.find("anchor"); it != j.end()) sc.anchor = as_vector(*it, "anchor");
  if (auto it = j.find("s"); it != j.end()) {
    sc.s = as_integer(*it, "s");
    if (sc.s < 1) fail("s must be >= 1");
  }
  if (auto it = j.find("sSchedule"); it != j.end()) {
    if (!it->is_array()) fail("sSchedule must be an array of integers");
    for (const auto& e : it->items()) sc.sSchedule.push_back(as_integer(e.value(), "sSchedule entry"));
  }
  if (auto it = j.find("tolerances"); it != j.end()) {
    check_keys(*it, "tolerances", {"certificate", "apfs", "stabilization", "grid"});
    if (auto t = it->find("certificate"); t != it->end())
      sc.certificateTol = as_number(*t, "tolerances.certificate");
    if (auto t = it->find("apfs"); t != it->end()) sc.apfsTol = as_number(*t, "tolerances.apfs");
    if (auto t = it->find("stabilization"); t != it->end())
      sc.stabilizationTol = as_number(*t, "tolerances.stabilization");
    if (auto t = it->find("grid"); t != it->end())
      sc.gridResolution = as_number(*t, "tolerances.grid");
  }
  if (auto it = j.find("probeCount"); it != j.end())
    sc.probeCount = static_cast<int>(as_integer(*it, "probeCount"));
  if (auto it = j.find("sampleCount"); it != j.end())
    sc.sampleCount = static_cast<int>(as_integer(*it, "sampleCount"));
  if (auto it = j.find("seed"); it != j.end()) {
    const long long seed = as_integer(*it, "seed");
    if (seed < 0) fail("seed must be >= 0");
    sc.seed = static_cast<unsigned>(seed);
  }
  if (auto it = j.find("checkFirm"); it != j.end()) {
    if (!it->is_boolean()) fail("checkFirm must be a boolean");
    sc.checkFirm = it->get<bool>();
  }
  if (auto it = j.find("checkInvariance"); it != j.end()) {
    if (!it->is_boolean()) fail("checkInvariance must be a boolean");
    sc.checkInvariance = it->get<bool>();
  }
  if (auto it = j.find("points"); it != j.end()) sc.points = as_point_list(*it, "points");
  if (auto it = j.find("pointsFile"); it != j.end()) {
    if (!sc.points.empty()) fail("give either points or pointsFile, not both");
    const auto rel = std::filesystem::path(as_string(*it, "pointsFile"));
    const auto resolved = rel.is_absolute() ? rel : std::filesystem::path(baseDir) / rel;
    sc.points = parse_points_csv(resolved.string());
  }
  if (auto it = j.find("finite"); it != j.end()) {
    std::vector<std::string> names;
    sc.finite = parse_finite(*it, &names);
  }
  if (auto it = j.find("mapSubset"); it != j.end()) {
    if (!it->is_array()) fail("mapSubset must be an array of map names");
    for (const auto& e : it->items()) sc.mapSubset.push_back(as_string(e.value(), "mapSubset entry"));
  }
  if (auto it = j.find("finiteOps"); it != j.end()) {
    if (!it->is_array()) fail("finiteOps must be an array");
    for (const auto& e : it->items()) {
      const std::string op = as_string(e.value(), "finiteOps entry");
      if (op != "core" && op != "gamma" && op != "isometry" && op != "pipeline")
        fail("unknown finite op \"" + op + "\"");
      sc.finiteOps.push_back(op);
    }
  }
  if (auto it = j.find("output"); it != j.end()) {
    check_keys(*it, "output", {"report", "trace"});
    if (auto o = it->find("report"); o != it->end()) sc.outPath = as_string(*o, "output.report");
    if (auto o = it->find("trace"); o != it->end()) sc.tracePath = as_string(*o, "output.trace");
  }
  return sc;
}

Json to_json(const Vector& v) {
  Json a = Json::array();
  for (fixpoint::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Json to_json(const fixpoint::Witness& w) {
  Json j;
  Json pts = Json::array();
  for (const auto& p : w.points) pts.push_back(to_json(p));
  j["points"] = std::move(pts);
  if (w.a >= 0.0) j["a"] = w.a;
  if (w.mapI >= 0) j["mapI"] = w.mapI;
  if (w.mapJ >= 0) j["mapJ"] = w.mapJ;
  j["measured"] = w.measured;
  j["bound"] = w.bound;
  return j;
}

Json to_json(const fixpoint::PropertyCertificate& c, const std::string& subject) {
  Json j;
  if (!subject.empty()) j["subject"] = subject;
  j["property"] = to_string(c.property);
  j["verdict"] = to_string(c.verdict);
  j["pass"] = c.passed();
  j["sampleCount"] = c.sampleCount;
  j["checksPerformed"] = c.checksPerformed;
  j["tolerance"] = c.tolerance;
  if (!c.note.empty()) j["note"] = c.note;
  Json ws = Json::array();
  for (const auto& w : c.witnesses) ws.push_back(to_json(w));
  j["witnesses"] = std::move(ws);
  return j;
}

Json to_json(const fixpoint::StabilizationRecord& r) {
  Json j;
  j["stage"] = r.stage;
  j["sTried"] = r.sTried;
  j["maxProbeDelta"] = r.maxProbeDelta;
  j["sStar"] = r.sStar;
  j["stabilized"] = r.stabilized;
  return j;
}

Json to_json(const fixpoint::RetractionCertificate& c) {
  Json j;
  j["rangeInFix"] = c.rangeInFix;
  j["rangeResidual"] =
      c.rangeInFix.empty() ? 0.0 : *std::max_element(c.rangeInFix.begin(), c.rangeInFix.end());
  j["idempotenceResidual"] = c.idempotenceResidual;
  j["nonexpansiveSlack"] = c.nonexpansiveSlack;
  j["checkedFirm"] = c.checkedFirm;
  if (c.checkedFirm) {
    j["firmWorstViolation"] = c.firmWorstViolation;
    j["firmWorstA"] = c.firmWorstA;
  }
  Json stab = Json::array();
  for (const auto& r : c.stabilization) stab.push_back(to_json(r));
  j["stabilization"] = std::move(stab);
  j["rangePass"] = c.rangePass;
  j["idempotencePass"] = c.idempotencePass;
  j["nonexpansivePass"] = c.nonexpansivePass;
  if (c.checkedFirm) j["firmPass"] = c.firmPass;
  j["tolerance"] = c.tolerance;
  j["sampleCount"] = c.sampleCount;
  j["pass"] = c.pass();
  return j;
}

Json to_json(const fixpoint::ContractionSolveReport& r) {
  Json j;
  j["fixedPoint"] = to_json(r.fixedPoint);
  j["iterations"] = r.iterations;
  j["contractionFactor"] = r.contractionFactor;
  j["aPrioriBound"] = r.aPrioriBound;
  j["aPosterioriResidual"] = r.aPosterioriResidual;
  j["hitNumericalFloor"] = r.hitNumericalFloor;
  return j;
}

Json to_json(const fixpoint::ApfsCertificate& c) {
  Json j;
  j["sValues"] = c.sValues;
  j["residuals"] = c.residuals;
  j["bounds"] = c.bounds;
  j["identityGaps"] = c.identityGaps;
  j["diameter"] = c.diameter;
  j["diameterExact"] = c.diameterExact;
  j["tolerance"] = c.tolerance;
  j["pass"] = c.pass;
  j["failures"] = c.failures;
  return j;
}

Json to_json(const fixpoint::ApfsTransferData& d, const std::vector<std::string>& memberNames) {
  Json j;
  j["sValues"] = d.sValues;
  Json fam;
  for (std::size_t i = 0; i < d.familyResiduals.size(); ++i) {
    const std::string key =
        i < memberNames.size() ? memberNames[i] : "member" + std::to_string(i);
    fam[key] = d.familyResiduals[i];
  }
  j["familyResiduals"] = std::move(fam);
  j["retractionResiduals"] = d.retractionResiduals;
  j["mapResiduals"] = d.mapResiduals;
  j["fittedC"] = d.fittedC;
  j["diameter"] = d.diameter;
  return j;
}

Json to_json(const fixpoint::CenterResult& c) {
  Json j;
  j["radius"] = c.radius;
  j["center"] = to_json(c.center);
  if (c.boxLo.size() > 0) {
    j["boxLo"] = to_json(c.boxLo);
    j["boxHi"] = to_json(c.boxHi);
  }
  j["enclosureResidual"] = c.enclosureResidual;
  j["optimalityGap"] = c.optimalityGap;
  j["exact"] = c.exact;
  j["method"] = c.method;
  j["norm"] = to_string(c.norm);
  return j;
}

Json to_json(const fixpoint::CoreResult& c) {
  Json j;
  j["indices"] = c.indices;
  j["commutingHypothesisHeld"] = c.commutingHypothesisHeld;
  j["iterations"] = c.iterations;
  return j;
}

Json to_json(const fixpoint::FinitePipelineReport& r, const std::vector<std::string>& subjects) {
  Json j;
  j["gamma"] = r.gamma;
  j["somewhereCommuting"] = r.somewhereCommuting;
  j["core"] = to_json(r.core);
  Json iso = Json::array();
  for (std::size_t i = 0; i < r.isometries.size(); ++i)
    iso.push_back(to_json(r.isometries[i], i < subjects.size() ? subjects[i] : ""));
  j["isometries"] = std::move(iso);
  j["embeddingPresent"] = r.embeddingPresent;
  j["embeddingConsistent"] = r.embeddingConsistent;
  if (r.center.center.size() > 0) j["center"] = to_json(r.center);
  j["note"] = r.note;
  return j;
}

}  // namespace fpcli
