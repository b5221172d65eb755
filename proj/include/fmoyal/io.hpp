#pragma once

// Text formats: SymbolField CSV (q,p,re,im) with a JSON sidecar, kernel
// triples JSON, kernel batch CSV and NonlinearityFunction JSON. Numbers are
// written with std::to_chars (shortest round-trip form), so equal inputs give
// byte-identical files.

#include <charconv>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "fmoyal/foscillator.hpp"
#include "fmoyal/kernels.hpp"
#include "fmoyal/types.hpp"
#include "fmoyal/weyl.hpp"

namespace fmoyal::io {

using json = nlohmann::ordered_json;

inline std::string format_double(double v) {
  if (v == 0.0) return "0";  // folds -0
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s, const std::string& where) {
  double v = 0.0;
  const auto* first = s.data();
  const auto* last = s.data() + s.size();
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc{} || res.ptr != last) {
    throw ValidationError(where + ": cannot parse number '" + std::string(s) + "'");
  }
  return v;
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

inline json parse_json(const std::string& text, const std::string& where) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(where + ": " + e.what());
  }
}

inline void reject_unknown_keys(const json& obj, std::initializer_list<std::string_view> allowed,
                                const std::string& where) {
  if (!obj.is_object()) throw ValidationError(where + ": expected a JSON object");
  for (const auto& [key, value] : obj.items()) {
    bool known = false;
    for (auto a : allowed) known = known || key == a;
    if (!known) throw ValidationError(where + ": unknown key '" + key + "'");
  }
}

inline double require_number(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key)) throw ValidationError(where + ": missing key '" + key + "'");
  const auto& v = obj.at(key);
  if (!v.is_number()) throw ValidationError(where + ": '" + key + "' must be a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw ValidationError(where + ": '" + key + "' is not finite");
  return d;
}

// --- symbol fields ----------------------------------------------------------

inline json grid_to_json(const PhaseGrid& g) {
  return json{{"q_min", g.q_min()}, {"q_max", g.q_max()}, {"p_min", g.p_min()},
              {"p_max", g.p_max()}, {"nq", g.nq()},       {"np", g.np()}};
}

inline PhaseGrid grid_from_json(const json& j, const std::string& where) {
  reject_unknown_keys(j, {"q_min", "q_max", "p_min", "p_max", "nq", "np"}, where);
  for (const char* k : {"nq", "np"}) {
    if (!j.contains(k) || !j.at(k).is_number_unsigned()) {
      throw ValidationError(where + ": '" + k + "' must be a non-negative integer");
    }
  }
  return PhaseGrid(require_number(j, "q_min", where), require_number(j, "q_max", where),
                   require_number(j, "p_min", where), require_number(j, "p_max", where),
                   j.at("nq").get<std::size_t>(), j.at("np").get<std::size_t>());
}

inline std::string symbol_csv(const SymbolField& f) {
  std::string out = "q,p,re,im\n";
  for (std::size_t i = 0; i < f.grid.nq(); ++i) {
    for (std::size_t j = 0; j < f.grid.np(); ++j) {
      const cd v = f.at(i, j);
      out += format_double(f.grid.q(i)) + ',' + format_double(f.grid.p(j)) + ',' +
             format_double(v.real()) + ',' + format_double(v.imag()) + '\n';
    }
  }
  return out;
}

inline json symbol_sidecar(const SymbolField& f) {
  json j;
  j["grid"] = grid_to_json(f.grid);
  j["real_valued"] = f.real_valued;
  j["imaginary_valued"] = f.imaginary_valued;
  j["tolerance"] = f.tolerance;
  j["masked_points"] = f.masked_count();
  j["normalization"] = f.normalization ? json(*f.normalization) : json(nullptr);
  j["warnings"] = f.warnings;
  return j;
}

/// Sidecar path: the CSV path with its extension replaced by ".json".
inline std::filesystem::path sidecar_path(std::filesystem::path csv) {
  return csv.replace_extension(".json");
}

inline void save_symbol_field(const SymbolField& f, const std::filesystem::path& csv) {
  write_text_file(csv, symbol_csv(f));
  write_text_file(sidecar_path(csv), symbol_sidecar(f).dump(2) + "\n");
}

inline SymbolField load_symbol_field(const std::filesystem::path& csv) {
  const json meta = parse_json(read_text_file(sidecar_path(csv)), sidecar_path(csv).string());
  if (!meta.contains("grid")) throw ValidationError(csv.string() + ": sidecar has no grid");
  SymbolField f(grid_from_json(meta.at("grid"), "grid"));
  if (meta.contains("normalization") && meta.at("normalization").is_number()) {
    f.normalization = meta.at("normalization").get<double>();
  }
  if (meta.contains("warnings")) f.warnings = meta.at("warnings").get<std::vector<std::string>>();

  std::istringstream in(read_text_file(csv));
  std::string line;
  if (!std::getline(in, line) || line != "q,p,re,im") {
    throw ValidationError(csv.string() + ": header must be q,p,re,im");
  }
  std::size_t row = 0;
  const double tol_q = 1e-9 * std::max(1.0, f.grid.dq());
  const double tol_p = 1e-9 * std::max(1.0, f.grid.dp());
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (row >= f.grid.size()) throw ShapeError(csv.string() + ": more rows than the grid holds");
    std::vector<std::string_view> cells;
    std::string_view rest(line);
    for (std::size_t pos; (pos = rest.find(',')) != std::string_view::npos;) {
      cells.push_back(rest.substr(0, pos));
      rest.remove_prefix(pos + 1);
    }
    cells.push_back(rest);
    const std::string where = csv.string() + " row " + std::to_string(row + 2);
    if (cells.size() != 4) throw ValidationError(where + ": expected 4 columns");
    const std::size_t i = row / f.grid.np(), j = row % f.grid.np();
    if (std::abs(parse_double(cells[0], where) - f.grid.q(i)) > tol_q ||
        std::abs(parse_double(cells[1], where) - f.grid.p(j)) > tol_p) {
      throw ShapeError(where + ": coordinates do not match the sidecar grid");
    }
    f.at(i, j) = {parse_double(cells[2], where), parse_double(cells[3], where)};
    ++row;
  }
  if (row != f.grid.size()) throw ShapeError(csv.string() + ": fewer rows than the grid holds");
  f.classify();
  return f;
}

// --- kernel triples -----------------------------------------------------------

struct Triple {
  PhasePoint x1, x2, x;
};

inline Triple triple_from_json(const json& t, const std::string& where) {
  reject_unknown_keys(t, {"q1", "p1", "q2", "p2", "q", "p"}, where);
  return {{require_number(t, "q1", where), require_number(t, "p1", where)},
          {require_number(t, "q2", where), require_number(t, "p2", where)},
          {require_number(t, "q", where), require_number(t, "p", where)}};
}

inline json triple_to_json(const Triple& t) {
  return json{{"q1", t.x1.q}, {"p1", t.x1.p}, {"q2", t.x2.q},
              {"p2", t.x2.p}, {"q", t.x.q},   {"p", t.x.p}};
}

/// Accepts {"triples": [...]} or a bare array.
inline std::vector<Triple> parse_triples(const std::string& text, const std::string& where) {
  const json doc = parse_json(text, where);
  const json* arr = &doc;
  if (doc.is_object()) {
    reject_unknown_keys(doc, {"triples"}, where);
    if (!doc.contains("triples")) throw ValidationError(where + ": missing key 'triples'");
    arr = &doc.at("triples");
  }
  if (!arr->is_array()) throw ValidationError(where + ": triples must be an array");
  std::vector<Triple> out;
  for (std::size_t k = 0; k < arr->size(); ++k) {
    out.push_back(triple_from_json(arr->at(k), where + " triple " + std::to_string(k)));
  }
  return out;
}

inline std::string kernel_csv(const std::vector<KernelSample>& samples) {
  std::string out = "q1,p1,q2,p2,q,p,re,im,err\n";
  for (const auto& s : samples) {
    for (double v : {s.x1.q, s.x1.p, s.x2.q, s.x2.p, s.x_out.q, s.x_out.p, s.value.real(),
                     s.value.imag()}) {
      out += format_double(v) + ',';
    }
    out += format_double(s.error_estimate) + '\n';
  }
  return out;
}

// --- nonlinearity functions ----------------------------------------------------

inline json nonlinearity_to_json(const NonlinearityFunction& f) {
  json j{{"kind", NonlinearityFunction::kind_name(f.kind())}};
  switch (f.kind()) {
    case NonlinearityFunction::Kind::q_exact:
    case NonlinearityFunction::Kind::q_quadratic:
      j["lambda"] = f.lambda();
      break;
    case NonlinearityFunction::Kind::table:
      j["values"] = f.table_values();
      break;
    case NonlinearityFunction::Kind::identity:
      break;
  }
  return j;
}

inline NonlinearityFunction nonlinearity_from_json(const json& j, const std::string& where) {
  if (!j.is_object() || !j.contains("kind") || !j.at("kind").is_string()) {
    throw ValidationError(where + ": nonlinearity needs a string 'kind'");
  }
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "identity") {
    reject_unknown_keys(j, {"kind"}, where);
    return NonlinearityFunction::identity();
  }
  if (kind == "q_exact" || kind == "q_quadratic") {
    reject_unknown_keys(j, {"kind", "lambda"}, where);
    const double lambda = require_number(j, "lambda", where);
    return kind == "q_exact" ? NonlinearityFunction::q_exact(lambda)
                             : NonlinearityFunction::q_quadratic(lambda);
  }
  if (kind == "table") {
    reject_unknown_keys(j, {"kind", "values"}, where);
    if (!j.contains("values") || !j.at("values").is_array()) {
      throw ValidationError(where + ": table nonlinearity needs a 'values' array");
    }
    std::vector<double> values;
    for (const auto& v : j.at("values")) {
      if (!v.is_number()) throw ValidationError(where + ": table values must be numbers");
      values.push_back(v.get<double>());
    }
    return NonlinearityFunction::table(std::move(values));
  }
  throw ValidationError(where + ": unknown nonlinearity kind '" + kind + "'");
}

}  // namespace fmoyal::io
