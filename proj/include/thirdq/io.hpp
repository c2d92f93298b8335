// io.hpp — model files (JSON) and tabular output (CSV or JSON).
//
// Complex numbers are [re, im] pairs; a bare number is read as real. Matrices are row-major,
// either nested ([[z, z], [z, z]]) or flat ([z, z, z, z]).

#pragma once

#include "thirdq/model.hpp"
#include "thirdq/spectral.hpp"
#include "thirdq/superop.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

namespace thirdq {

using json = nlohmann::ordered_json;

// Shortest round-trip decimal form, fixed for byte-identical output across runs.
inline std::string format_double(double x) {
  if (x == 0.0) return "0";
  char buf[40];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, x);
    if (std::strtod(buf, nullptr) == x) break;
  }
  return buf;
}

inline json to_json(cplx z) { return json::array({z.real() + 0.0, z.imag() + 0.0}); }

inline json to_json(const CVec& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(to_json(v[i]));
  return out;
}

inline json to_json(const RVec& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i] + 0.0);
  return out;
}

inline json to_json(const CMat& m) {
  json out = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(to_json(m(i, j)));
    out.push_back(std::move(row));
  }
  return out;
}

inline cplx complex_from_json(const json& j, const std::string& what) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
    return {j[0].get<double>(), j[1].get<double>()};
  throw ModelError(what + ": expected a number or an [re, im] pair");
}

inline CVec vector_from_json(const json& j, int n, const std::string& what) {
  if (!j.is_array() || j.size() != static_cast<std::size_t>(n))
    throw ModelError(what + ": expected " + std::to_string(n) + " entries");
  CVec v(n);
  for (int i = 0; i < n; ++i) v[i] = complex_from_json(j[static_cast<std::size_t>(i)], what);
  return v;
}

inline CMat matrix_from_json(const json& j, Eigen::Index rows, Eigen::Index cols, const std::string& what) {
  if (!j.is_array()) throw ModelError(what + ": expected an array");
  CMat m(rows, cols);
  const auto r = static_cast<std::size_t>(rows), c = static_cast<std::size_t>(cols);
  bool nested = j.size() == r;
  for (std::size_t i = 0; nested && i < r; ++i) nested = j[i].is_array() && j[i].size() == c;
  if (nested) {
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t k = 0; k < c; ++k)
        m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = complex_from_json(j[i][k], what);
    return m;
  }
  if (j.size() == r * c) {
    for (std::size_t i = 0; i < r * c; ++i)
      m(static_cast<Eigen::Index>(i / c), static_cast<Eigen::Index>(i % c)) = complex_from_json(j[i], what);
    return m;
  }
  throw ModelError(what + ": expected a " + std::to_string(rows) + "x" + std::to_string(cols) + " matrix");
}

inline ModelSpec model_from_json(const json& j) {
  if (!j.is_object()) throw ModelError("model file must hold a JSON object");
  if (!j.contains("n") || !j["n"].is_number_integer() || j["n"].get<int>() < 1)
    throw ModelError("model needs a positive integer n");
  const int n = j["n"].get<int>();
  ModelSpec spec = ModelSpec::empty(n);
  if (j.contains("H")) spec.H = matrix_from_json(j["H"], n, n, "H");
  if (j.contains("K")) spec.K = matrix_from_json(j["K"], n, n, "K");
  if (j.contains("Omega")) spec.Omega = matrix_from_json(j["Omega"], n, n, "Omega");
  if (j.contains("jumps")) {
    if (!j["jumps"].is_array()) throw ModelError("jumps must be an array");
    for (const auto& jump : j["jumps"]) {
      if (!jump.is_object()) throw ModelError("each jump must be an object with l, k, w");
      auto part = [&](const char* key) {
        return jump.contains(key) ? vector_from_json(jump[key], n, std::string("jump ") + key) : CVec(CVec::Zero(n));
      };
      spec.add_jump(part("l"), part("k"), part("w"));
    }
  }
  if (j.contains("spin_spectra")) {
    if (!j["spin_spectra"].is_array()) throw ModelError("spin_spectra must be an array of arrays");
    spec.spin_spectra.clear();
    for (const auto& s : j["spin_spectra"]) {
      if (!s.is_array()) throw ModelError("spin_spectra must be an array of arrays");
      std::vector<double> vals;
      for (const auto& x : s) {
        if (!x.is_number()) throw ModelError("spin spectra must be real numbers");
        vals.push_back(x.get<double>());
      }
      spec.spin_spectra.push_back(std::move(vals));
    }
  }
  return spec;
}

inline ModelSpec load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ModelError("cannot open model file " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ModelError("model file " + path + ": " + e.what());
  }
  auto spec = model_from_json(j);
  require_valid(spec);
  return spec;
}

inline json model_to_json(const ModelSpec& spec) {
  json j;
  j["n"] = spec.n;
  j["H"] = to_json(spec.H);
  j["K"] = to_json(spec.K);
  j["Omega"] = to_json(spec.Omega);
  j["jumps"] = json::array();
  for (const auto& jump : spec.jumps) j["jumps"].push_back({{"l", to_json(jump.l)}, {"k", to_json(jump.k)}, {"w", to_json(jump.w)}});
  j["spin_spectra"] = spec.spin_spectra;
  return j;
}

// ---------------------------------------------------------------- tables

struct Table {
  using Cell = std::variant<double, long long, std::string>;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  void add(std::vector<Cell> row) { rows.push_back(std::move(row)); }
};

inline std::string cell_text(const Table::Cell& c) {
  if (const auto* d = std::get_if<double>(&c)) return format_double(*d);
  if (const auto* i = std::get_if<long long>(&c)) return std::to_string(*i);
  return std::get<std::string>(c);
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) out += ch == '"' ? std::string("\"\"") : std::string(1, ch);
  return out + "\"";
}

inline void write_csv(std::ostream& os, const Table& t) {
  for (std::size_t i = 0; i < t.columns.size(); ++i) os << (i ? "," : "") << csv_field(t.columns[i]);
  os << '\n';
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << csv_field(cell_text(row[i]));
    os << '\n';
  }
}

inline json table_to_json(const Table& t) {
  json rows = json::array();
  for (const auto& row : t.rows) {
    json r = json::array();
    for (const auto& c : row) std::visit([&r](const auto& v) { r.push_back(v); }, c);
    rows.push_back(std::move(r));
  }
  return {{"columns", t.columns}, {"rows", std::move(rows)}};
}

// Minimal CSV reader for the files written above (no embedded newlines).
inline Table read_csv(std::istream& is) {
  Table t;
  std::string line;
  auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
      const char ch = s[i];
      if (quoted) {
        if (ch == '"' && i + 1 < s.size() && s[i + 1] == '"') cur += s[++i];
        else if (ch == '"') quoted = false;
        else cur += ch;
      } else if (ch == '"') {
        quoted = true;
      } else if (ch == ',') {
        out.push_back(cur);
        cur.clear();
      } else {
        cur += ch;
      }
    }
    out.push_back(cur);
    return out;
  };
  if (!std::getline(is, line)) return t;
  t.columns = split(line);
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<Table::Cell> row;
    for (auto& f : split(line)) row.emplace_back(std::move(f));
    t.rows.push_back(std::move(row));
  }
  return t;
}

// ---------------------------------------------------------------- dumps

inline json quadratic_form_to_json(const QuadraticForm& qf, const SpectralData& sd, const std::vector<SectorShift>& shifts) {
  json j;
  j["n"] = qf.n;
  j["X"] = to_json(qf.X);
  j["Y"] = to_json(qf.Y);
  j["S"] = to_json(qf.S);
  j["G"] = to_json(qf.G);
  j["betas"] = to_json(sd.betas);
  j["P"] = to_json(sd.P);
  j["Z"] = to_json(sd.Z);
  j["stable"] = sd.stable;
  j["sectors"] = json::array();
  for (const auto& sh : shifts) {
    j["sectors"].push_back({{"sector", sh.sector.label()},
                            {"sigma_tilde", to_json(RVec(sigma_tilde(sh.sector).real()))},
                            {"d", to_json(sh.d)},
                            {"S0", to_json(sh.S0)},
                            {"normal_constant", to_json(sh.normal_constant)},
                            {"residual", shift_residual(qf, sh)}});
  }
  return j;
}

}  // namespace thirdq
