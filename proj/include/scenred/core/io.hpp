#pragma once

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "scenred/core/types.hpp"
#include "scenred/mip/problem.hpp"

namespace scenred {

using Json = nlohmann::json;

namespace detail {

// Infinite bounds are stored as null; everything else as shortest
// round-trip decimal.
inline Json number_to_json(double v) {
  if (std::isinf(v)) return v > 0 ? Json(nullptr) : Json("-inf");
  return Json(v);
}

inline double number_from_json(const Json& j, double null_value) {
  if (j.is_null()) return null_value;
  if (j.is_string()) {
    if (j.get<std::string>() == "-inf") return -kInfinity;
    if (j.get<std::string>() == "inf") return kInfinity;
    throw std::invalid_argument("instance file: unexpected string '" + j.get<std::string>() + "'");
  }
  return j.get<double>();
}

inline Json matrix_to_json(const Matrix& m) {
  Json out = Json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (std::size_t j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    out.push_back(std::move(row));
  }
  return out;
}

inline Matrix matrix_from_json(const Json& j, std::size_t rows, std::size_t cols, const char* what) {
  if (!j.is_array() || j.size() != rows)
    throw std::invalid_argument(std::string("instance file: ") + what + " has wrong row count");
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    if (j[i].size() != cols) throw std::invalid_argument(std::string("instance file: ") + what + " has wrong width");
    for (std::size_t c = 0; c < cols; ++c) m(i, c) = j[i][c].get<double>();
  }
  return m;
}

inline const char* kind_code(VarKind k) {
  switch (k) {
    case VarKind::kContinuous: return "C";
    case VarKind::kBinary: return "B";
    case VarKind::kInteger: return "I";
  }
  return "C";
}

inline VarKind kind_from_code(const std::string& s) {
  if (s == "C") return VarKind::kContinuous;
  if (s == "B") return VarKind::kBinary;
  if (s == "I") return VarKind::kInteger;
  throw std::invalid_argument("instance file: unknown variable kind '" + s + "'");
}

inline Json domain_to_json(const std::vector<VarKind>& kinds, const std::vector<VarBounds>& bounds, Json& kinds_out) {
  kinds_out = Json::array();
  Json out = Json::array();
  for (std::size_t j = 0; j < kinds.size(); ++j) {
    kinds_out.push_back(kind_code(kinds[j]));
    out.push_back(Json::array({number_to_json(bounds[j].lo), number_to_json(bounds[j].hi)}));
  }
  return out;
}

inline void domain_from_json(const Json& kinds_j, const Json& bounds_j, std::size_t n, std::vector<VarKind>& kinds,
                             std::vector<VarBounds>& bounds) {
  if (kinds_j.size() != n || bounds_j.size() != n)
    throw std::invalid_argument("instance file: kinds/bounds length mismatch");
  kinds.clear();
  bounds.clear();
  for (std::size_t j = 0; j < n; ++j) {
    kinds.push_back(kind_from_code(kinds_j[j].get<std::string>()));
    bounds.push_back({number_from_json(bounds_j[j].at(0), -kInfinity), number_from_json(bounds_j[j].at(1), kInfinity)});
  }
}

}  // namespace detail

inline Json instance_to_json(const SpInstance& inst) {
  Json j;
  j["family"] = std::string(to_string(inst.meta.family));
  j["seed"] = inst.meta.seed;
  j["n1"] = inst.n1();
  j["n2"] = inst.n2();
  j["m1"] = inst.m1();
  j["m2"] = inst.m2();
  const FirstStage& fs = inst.first_stage;
  Json first;
  first["c"] = fs.c;
  first["A"] = detail::matrix_to_json(fs.A);
  first["b"] = fs.b;
  Json kinds;
  first["bounds"] = detail::domain_to_json(fs.kinds, fs.bounds, kinds);
  first["kinds"] = kinds;
  j["firstStage"] = first;
  Json scs = Json::array();
  for (const Scenario& sc : inst.scenarios) {
    Json s;
    s["prob"] = sc.prob;
    s["q"] = sc.q;
    s["W"] = detail::matrix_to_json(sc.W);
    s["h"] = sc.h;
    s["T"] = detail::matrix_to_json(sc.T);
    Json yk;
    s["yBounds"] = detail::domain_to_json(sc.y_kinds, sc.y_bounds, yk);
    s["yKinds"] = yk;
    scs.push_back(std::move(s));
  }
  j["scenarios"] = std::move(scs);
  if (inst.cached_optimum) j["optimum"] = {{"v", inst.cached_optimum->value}, {"x", inst.cached_optimum->x}};
  return j;
}

inline SpInstance instance_from_json(const Json& j) {
  SpInstance inst;
  inst.meta.family = family_from_string(j.at("family").get<std::string>());
  inst.meta.seed = j.at("seed").get<std::uint64_t>();
  const auto n1 = j.at("n1").get<std::size_t>();
  const auto n2 = j.at("n2").get<std::size_t>();
  const auto m1 = j.at("m1").get<std::size_t>();
  const auto m2 = j.at("m2").get<std::size_t>();
  const Json& f = j.at("firstStage");
  FirstStage& fs = inst.first_stage;
  fs.c = f.at("c").get<std::vector<double>>();
  fs.A = detail::matrix_from_json(f.at("A"), m1, n1, "A");
  fs.b = f.at("b").get<std::vector<double>>();
  detail::domain_from_json(f.at("kinds"), f.at("bounds"), n1, fs.kinds, fs.bounds);
  for (const Json& s : j.at("scenarios")) {
    Scenario sc;
    sc.prob = s.at("prob").get<double>();
    sc.q = s.at("q").get<std::vector<double>>();
    sc.W = detail::matrix_from_json(s.at("W"), m2, n2, "W");
    sc.h = s.at("h").get<std::vector<double>>();
    sc.T = detail::matrix_from_json(s.at("T"), m2, n1, "T");
    detail::domain_from_json(s.at("yKinds"), s.at("yBounds"), n2, sc.y_kinds, sc.y_bounds);
    inst.scenarios.push_back(std::move(sc));
  }
  if (j.contains("optimum"))
    inst.cached_optimum = Optimum{j["optimum"].at("v").get<double>(), j["optimum"].at("x").get<std::vector<double>>()};
  validate(inst);
  return inst;
}

// Debug dump of a MIP in the same conventions as instance files: rows with
// a sense code ("<=", "=", ">="), bounds as [lo, hi] with null for infinity.
inline Json problem_to_json(const mip::MipProblem& p) {
  Json j;
  j["c"] = p.objective;
  j["A"] = detail::matrix_to_json(p.rows);
  j["b"] = p.rhs;
  Json sense = Json::array();
  for (auto s : p.sense) sense.push_back(s == mip::Sense::kLe ? "<=" : s == mip::Sense::kEq ? "=" : ">=");
  j["sense"] = std::move(sense);
  Json kinds = Json::array(), bounds = Json::array();
  for (std::size_t v = 0; v < p.num_vars(); ++v) {
    kinds.push_back(p.integral[v] ? "I" : "C");
    bounds.push_back(Json::array({detail::number_to_json(p.lower[v]), detail::number_to_json(p.upper[v])}));
  }
  j["kinds"] = std::move(kinds);
  j["bounds"] = std::move(bounds);
  return j;
}

inline std::string instance_to_string(const SpInstance& inst) { return instance_to_json(inst).dump(1) + "\n"; }

inline void write_instance(const std::string& path, const SpInstance& inst) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << instance_to_string(inst);
  if (!out) throw std::runtime_error("write failed: " + path);
}

inline Json read_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

inline SpInstance read_instance(const std::string& path) { return instance_from_json(read_json_file(path)); }

}  // namespace scenred
