#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "drbench/common.hpp"
#include "drbench/datasets.hpp"
#include "drbench/hyperparams.hpp"
#include "drbench/reducers/embedding.hpp"

namespace drbench {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

inline std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot open '", path.string(), "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail("cannot open '", path.string(), "' for writing");
  out << text;
  if (!out) fail("failed writing '", path.string(), "'");
}

namespace detail {

inline void dump_json_into(std::string& out, const json& j, int indent, int depth) {
  const auto newline = [&](int d) {
    if (indent < 0) return;
    out += '\n';
    out.append(static_cast<std::size_t>(indent * d), ' ');
  };
  switch (j.type()) {
    case json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += '{';
      bool first = true;
      for (const auto& [k, v] : j.items()) {
        if (!first) out += ',';
        first = false;
        newline(depth + 1);
        out += json(k).dump();
        out += indent < 0 ? ":" : ": ";
        dump_json_into(out, v, indent, depth + 1);
      }
      newline(depth);
      out += '}';
      return;
    }
    case json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      out += '[';
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) out += ',';
        newline(depth + 1);
        dump_json_into(out, j[i], indent, depth + 1);
      }
      newline(depth);
      out += ']';
      return;
    }
    case json::value_t::number_float: {
      const double v = j.get<double>();
      if (!std::isfinite(v)) {
        out += "null";
        return;
      }
      std::string s = format_double(v);
      // Keep reals distinguishable from integers on the way back in.
      if (s.find_first_of(".eE") == std::string::npos) s += ".0";
      out += s;
      return;
    }
    default:
      out += j.dump();
  }
}

}  // namespace detail

/// Serializes like json::dump but writes every real with 17 significant
/// digits. indent < 0 gives a single line.
inline std::string dump_json(const json& j, int indent = -1) {
  std::string out;
  detail::dump_json_into(out, j, indent, 0);
  return out;
}

// foo/bar.csv -> foo/bar.json
inline fs::path sidecar_path(const fs::path& csv) {
  fs::path p = csv;
  p.replace_extension(".json");
  return p;
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    std::string field = line.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    while (!field.empty() && (field.back() == ' ' || field.back() == '\r' || field.back() == '\t')) field.pop_back();
    std::size_t lead = 0;
    while (lead < field.size() && (field[lead] == ' ' || field[lead] == '\t')) ++lead;
    out.push_back(field.substr(lead));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

inline std::optional<double> parse_number(const std::string& s) {
  if (s.empty()) return std::nullopt;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size()) return std::nullopt;
  return v;
}

struct CsvTable {
  std::vector<std::string> header;  // empty when the file has none
  std::vector<std::vector<double>> rows;
};

// A first line with any non-numeric field is treated as a header.
inline CsvTable read_numeric_csv(const fs::path& path) {
  std::istringstream in(read_text(path));
  CsvTable t;
  std::string line;
  std::size_t line_no = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    if (t.rows.empty() && t.header.empty()) {
      bool numeric = true;
      for (const auto& f : fields) numeric = numeric && parse_number(f).has_value();
      if (!numeric) {
        t.header = std::move(fields);
        width = t.header.size();
        continue;
      }
    }
    if (width == 0) width = fields.size();
    if (fields.size() != width) {
      fail(path.string(), ": line ", line_no, " has ", fields.size(), " fields, expected ", width);
    }
    std::vector<double> row;
    row.reserve(fields.size());
    for (const auto& f : fields) {
      const auto v = parse_number(f);
      if (!v) fail(path.string(), ": line ", line_no, ": '", f, "' is not a number");
      row.push_back(*v);
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

}  // namespace detail

inline std::string pointset_csv(const PointSet& ps) {
  std::string out;
  for (Eigen::Index c = 0; c < ps.dim(); ++c) out += (c ? ",x" : "x") + std::to_string(c + 1);
  if (ps.labels) out += ",label";
  out += '\n';
  for (Eigen::Index i = 0; i < ps.n(); ++i) {
    for (Eigen::Index c = 0; c < ps.dim(); ++c) {
      if (c) out += ',';
      out += format_double(ps.points(i, c));
    }
    if (ps.labels) out += "," + std::to_string((*ps.labels)[static_cast<std::size_t>(i)]);
    out += '\n';
  }
  return out;
}

inline json pointset_meta(const PointSet& ps) {
  json j;
  j["generator"] = ps.generator;
  j["n"] = ps.n();
  j["dim"] = ps.dim();
  j["seed"] = ps.seed;
  j["variant"] = ps.variant;
  j["labels"] = ps.labels.has_value();
  return j;
}

inline void write_pointset(const fs::path& csv, const PointSet& ps) {
  write_text(csv, pointset_csv(ps));
  write_text(sidecar_path(csv), dump_json(pointset_meta(ps), 2) + "\n");
}

/// Reads a dataset CSV. A header row names columns; a column titled "label"
/// becomes the class labels. Meta comes from the sidecar when present.
inline PointSet read_pointset(const fs::path& csv) {
  const auto t = detail::read_numeric_csv(csv);
  if (t.rows.empty()) fail(csv.string(), ": no data rows");
  std::optional<std::size_t> label_col;
  for (std::size_t c = 0; c < t.header.size(); ++c) {
    if (t.header[c] == "label") label_col = c;
  }
  const std::size_t width = t.rows.front().size();
  const std::size_t dim = width - (label_col ? 1 : 0);
  if (dim == 0) fail(csv.string(), ": no coordinate columns");
  PointSet ps;
  ps.points.resize(static_cast<Eigen::Index>(t.rows.size()), static_cast<Eigen::Index>(dim));
  if (label_col) ps.labels = std::vector<int>(t.rows.size());
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    std::size_t c_out = 0;
    for (std::size_t c = 0; c < width; ++c) {
      const double v = t.rows[i][c];
      if (label_col && c == *label_col) {
        (*ps.labels)[i] = static_cast<int>(v);
        continue;
      }
      if (!std::isfinite(v)) fail(csv.string(), ": non-finite value at row ", i, ", column ", c);
      ps.points(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c_out++)) = v;
    }
  }
  const auto meta = sidecar_path(csv);
  if (fs::exists(meta)) {
    const auto j = json::parse(read_text(meta));
    ps.generator = j.value("generator", "");
    ps.variant = j.value("variant", "");
    ps.seed = j.value("seed", std::uint64_t{0});
  }
  return ps;
}

inline json params_to_json(const HyperparamAssignment& params) {
  json j = json::object();
  for (const auto& [name, v] : params.entries()) {
    std::visit([&](const auto& x) { j[name] = x; }, v);
  }
  return j;
}

inline HyperparamAssignment params_from_json(const json& j) {
  HyperparamAssignment out;
  for (const auto& [name, v] : j.items()) {
    if (v.is_number_integer()) out.set(name, v.get<std::int64_t>());
    else if (v.is_number()) out.set(name, v.get<double>());
    else if (v.is_string()) out.set(name, v.get<std::string>());
    else fail("hyperparameter '", name, "' must be a number or string");
  }
  return out;
}

inline json provenance_to_json(const Provenance& p) {
  json j;
  j["algorithm"] = p.algorithm;
  j["params"] = params_to_json(p.params);
  j["seed"] = p.seed;
  j["iterations"] = p.iterations;
  j["objective"] = p.objective;
  j["converged"] = p.converged;
  return j;
}

inline std::string matrix_csv(const Matrix& m) {
  std::string out;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c) out += ',';
      out += format_double(m(i, c));
    }
    out += '\n';
  }
  return out;
}

inline void write_embedding(const fs::path& csv, const Embedding& e) {
  write_text(csv, matrix_csv(e.points));
  write_text(sidecar_path(csv), dump_json(provenance_to_json(e.provenance), 2) + "\n");
}

/// Loads an embedding produced elsewhere (e.g. UMAP): n rows, p columns, no
/// header. Provenance params come from a sidecar JSON if one exists.
inline Embedding load_external_embedding(const fs::path& csv, std::size_t expected_n) {
  const auto t = detail::read_numeric_csv(csv);
  if (t.rows.size() != expected_n) {
    fail<DimensionMismatch>(csv.string(), ": expected ", expected_n, " rows, found ", t.rows.size());
  }
  if (t.rows.empty()) fail(csv.string(), ": no data rows");
  Embedding e;
  const auto p = static_cast<Eigen::Index>(t.rows.front().size());
  e.points.resize(static_cast<Eigen::Index>(t.rows.size()), p);
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    for (Eigen::Index c = 0; c < p; ++c) {
      const double v = t.rows[i][static_cast<std::size_t>(c)];
      if (!std::isfinite(v)) fail(csv.string(), ": non-finite value at row ", i, ", column ", c);
      e.points(static_cast<Eigen::Index>(i), c) = v;
    }
  }
  e.provenance.algorithm = "external";
  const auto meta = sidecar_path(csv);
  if (fs::exists(meta)) {
    const auto j = json::parse(read_text(meta));
    if (j.contains("params")) e.provenance.params = params_from_json(j["params"]);
    e.provenance.seed = j.value("seed", std::uint64_t{0});
    e.provenance.objective = j.value("objective", 0.0);
    e.provenance.iterations = j.value("iterations", 0);
  }
  return e;
}

}  // namespace drbench
