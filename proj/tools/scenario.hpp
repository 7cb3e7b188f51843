#pragma once

#include <json.hpp>

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fixpoint/body.hpp"
#include "fixpoint/contraction.hpp"
#include "fixpoint/finite.hpp"
#include "fixpoint/map_expr.hpp"
#include "fixpoint/norms.hpp"
#include "fixpoint/retraction.hpp"
#include "fixpoint/tchebyshev.hpp"

namespace fpcli {

using Json = nlohmann::ordered_json;

/// One scenario = one task. Parsed, name-resolved and validated; the
/// executor only has to look at the fields its task needs.
struct Scenario {
  std::string task;
  fixpoint::NormSpec space;  // dimension 0 = absent
  std::optional<fixpoint::ConvexBody> body;
  std::vector<std::pair<std::string, fixpoint::MapExpr>> maps;  // declaration order
  std::vector<std::string> family;
  std::string target;       // distinguished map for resolvent / apfs
  fixpoint::Vector anchor;  // size 0 = absent
  long long s = 0;
  std::vector<long long> sSchedule;
  double stabilizationTol = 1e-6;
  int probeCount = 32;
  int sampleCount = 200;
  double gridResolution = 0.05;
  double certificateTol = 1e-9;
  double apfsTol = 1e-6;
  bool checkFirm = false;
  bool checkInvariance = false;
  unsigned seed = 0;
  std::vector<fixpoint::Vector> points;
  std::optional<fixpoint::FiniteSystem> finite;
  std::vector<std::string> mapSubset;   // finite map names
  std::vector<std::string> finiteOps;   // core, gamma, isometry, pipeline
  std::string outPath, tracePath;

  const fixpoint::MapExpr& mapNamed(const std::string& name) const;
  std::vector<fixpoint::MapExpr> familyExprs() const;
};

/// Throws InputError/ConfigError on anything malformed, including JSON
/// syntax errors; the exit-code contract maps those to 2.
Scenario parse_scenario_file(const std::string& path);
Scenario parse_scenario(const Json& j, const std::string& baseDir);

/// One point per row, comma separated; blank lines and #-comments skipped.
std::vector<fixpoint::Vector> parse_points_csv(const std::string& path);

// Report fragments. Doubles are emitted as JSON numbers; the serializer
// prints the shortest digit string that round-trips, so identical values
// are identical bytes and reports diff cleanly.
Json to_json(const fixpoint::Vector& v);
Json to_json(const fixpoint::Witness& w);
Json to_json(const fixpoint::PropertyCertificate& c, const std::string& subject);
Json to_json(const fixpoint::StabilizationRecord& r);
Json to_json(const fixpoint::RetractionCertificate& c);
Json to_json(const fixpoint::ContractionSolveReport& r);
Json to_json(const fixpoint::ApfsCertificate& c);
Json to_json(const fixpoint::ApfsTransferData& d, const std::vector<std::string>& memberNames);
Json to_json(const fixpoint::CenterResult& c);
Json to_json(const fixpoint::CoreResult& c);
Json to_json(const fixpoint::FinitePipelineReport& r, const std::vector<std::string>& subjects);

}  // namespace fpcli
