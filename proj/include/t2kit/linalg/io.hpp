#pragma once

#include <json.hpp>

#include "t2kit/linalg/rellich.hpp"

#include <string>

// Matrix files and decomposition reports. An entry is either an exact
// rational written "p/q" (or a bare integer), an exact dyadic written
// {"dyadic": [mantissa, exponent]} with the mantissa as a decimal string, or
// a reference into the Rellich family, {"rellich": {"eps": "p/q",
// "cell": [i, j]}}.

namespace t2k::la {

using json = nlohmann::json;

inline json dyadic_to_json(const Dyadic& d) { return json::array({d.m.str(), d.e}); }

inline Dyadic dyadic_from_json(const json& j) {
  if (!j.is_array() || j.size() != 2)
    throw std::invalid_argument("dyadic: expected [mantissa, exponent]");
  Int m = j[0].is_string() ? Int(j[0].get<std::string>()) : Int(j[0].get<long long>());
  return Dyadic(m, j[1].get<long>());
}

inline json interval_to_json(const DyadicInterval& iv) {
  return json{{"lo", dyadic_to_json(iv.lo)}, {"hi", dyadic_to_json(iv.hi)}};
}

inline IntervalReal entry_from_json(const json& j) {
  if (j.is_number_integer()) return IntervalReal::exact(Rational(j.get<long long>()));
  if (j.is_string()) return IntervalReal::exact(Rational(j.get<std::string>()));
  if (j.is_object() && j.contains("dyadic"))
    return IntervalReal::of_dyadic(dyadic_from_json(j.at("dyadic")));
  if (j.is_object() && j.contains("rellich")) {
    const json& r = j.at("rellich");
    Rational eps(r.at("eps").get<std::string>());
    if (eps < 0 || eps > 1) throw std::invalid_argument("rellich entry: eps outside [0,1]");
    long ci = r.at("cell").at(0).get<long>();
    long cj = r.at("cell").at(1).get<long>();
    if (ci < 0 || ci > 1 || cj < 0 || cj > 1)
      throw std::invalid_argument("rellich entry: cell outside 2x2");
    return rellich_matrix(IntervalReal::exact(eps)).cell[ci][cj];
  }
  throw std::invalid_argument("matrix entry: unrecognized form");
}

inline Mat mat_from_json(const json& j) {
  long rows = j.at("rows").get<long>();
  long cols = j.at("cols").get<long>();
  const json& entries = j.at("entries");
  if (static_cast<long>(entries.size()) != rows)
    throw std::invalid_argument("matrix: row count mismatch");
  Mat A(rows, cols);
  for (long i = 0; i < rows; ++i) {
    if (static_cast<long>(entries[i].size()) != cols)
      throw std::invalid_argument("matrix: column count mismatch");
    for (long jj = 0; jj < cols; ++jj) A.at(i, jj) = entry_from_json(entries[i][jj]);
  }
  return A;
}

inline json lu_to_json(const RobustLU& lu) {
  json L = json::array(), U = json::array();
  for (long i = 0; i < lu.rows; ++i) {
    json lrow = json::array(), urow = json::array();
    for (long j = 0; j < lu.rows; ++j) lrow.push_back(dyadic_to_json(lu.L[i][j]));
    for (long j = 0; j < lu.cols; ++j) urow.push_back(dyadic_to_json(lu.U[i][j]));
    L.push_back(std::move(lrow));
    U.push_back(std::move(urow));
  }
  return json{{"rows", lu.rows},
              {"cols", lu.cols},
              {"P", lu.P},
              {"Q", lu.Q},
              {"L", std::move(L)},
              {"U", std::move(U)},
              {"certificate", dyadic_to_json(lu.certificate)},
              {"precision_bits", lu.precision_bits},
              {"tol_bits", lu.tol_bits},
              {"pivot_rounds", lu.pivot_rounds}};
}

inline json report_to_json(const LuReport& rep) {
  json blocks = json::array();
  for (const auto& b : rep.blocks) blocks.push_back(report_to_json(b));
  return json{{"pass", rep.pass},
              {"perms_ok", rep.perms_ok},
              {"unit_diag_ok", rep.unit_diag_ok},
              {"lower_bound_ok", rep.lower_bound_ok},
              {"echelon_ok", rep.echelon_ok},
              {"residual_ok", rep.residual_ok},
              {"residual", dyadic_to_json(rep.residual)},
              {"profile", rep.profile},
              {"split", rep.split},
              {"blocks", std::move(blocks)}};
}

}  // namespace t2k::la
