#pragma once

// JSON form of cluster shapes and the number format shared by CSV and JSON output.

#include <iomanip>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "frozenperc/error.hpp"
#include "frozenperc/treecomb.hpp"

namespace frozenperc {

// {"anchor": "ROOT", "vertices": [0, 1, 2]}
inline nlohmann::json to_json(const ClusterShape& c) {
  return {{"anchor", to_string(c.anchor())},
          {"vertices", std::vector<Vertex>(c.vertices().begin(), c.vertices().end())}};
}

inline ClusterShape cluster_from_json(const nlohmann::json& j) {
  const std::string anchor = j.at("anchor").get<std::string>();
  if (anchor != "ROOT" && anchor != "CHILD") throw DomainError("anchor must be ROOT or CHILD");
  return ClusterShape::from_vertices(anchor == "ROOT" ? Anchor::Root : Anchor::Child,
                                     j.at("vertices").get<std::vector<Vertex>>());
}

// 12 significant digits, '.' decimal separator regardless of locale.
inline std::string format_number(double v) {
  if (v == std::numeric_limits<double>::infinity()) return "inf";
  if (v == -std::numeric_limits<double>::infinity()) return "-inf";
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os << std::setprecision(12) << v;
  return os.str();
}

}  // namespace frozenperc
