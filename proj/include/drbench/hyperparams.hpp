#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "drbench/common.hpp"

namespace drbench {

using ParamValue = std::variant<double, std::int64_t, std::string>;

struct ParamSpec {
  enum class Kind { real, integer, categorical };

  std::string name;
  Kind kind = Kind::real;
  double lo = 0.0;  // inclusive bounds for real/integer
  double hi = 0.0;
  ParamValue fallback;
  std::vector<std::string> choices;  // categorical only
};

inline std::string param_to_string(const ParamValue& v) {
  if (const auto* d = std::get_if<double>(&v)) return format_double(*d);
  if (const auto* i = std::get_if<std::int64_t>(&v)) return std::to_string(*i);
  return std::get<std::string>(v);
}

/// Named, typed hyperparameter values for one algorithm run. Entries keep the
/// order of the algorithm's schema so printing is stable.
class HyperparamAssignment {
 public:
  using Entry = std::pair<std::string, ParamValue>;

  HyperparamAssignment() = default;

  const std::vector<Entry>& entries() const { return entries_; }
  bool empty() const { return entries_.empty(); }

  bool contains(const std::string& name) const { return find(name) != nullptr; }

  void set(const std::string& name, ParamValue v) {
    for (auto& e : entries_) {
      if (e.first == name) {
        e.second = std::move(v);
        return;
      }
    }
    entries_.emplace_back(name, std::move(v));
  }

  double real(const std::string& name) const {
    const auto& v = at(name);
    if (const auto* d = std::get_if<double>(&v)) return *d;
    if (const auto* i = std::get_if<std::int64_t>(&v)) return static_cast<double>(*i);
    fail("hyperparameter '", name, "' is not numeric");
  }

  std::int64_t integer(const std::string& name) const {
    const auto& v = at(name);
    if (const auto* i = std::get_if<std::int64_t>(&v)) return *i;
    fail("hyperparameter '", name, "' is not an integer");
  }

  const std::string& categorical(const std::string& name) const {
    const auto& v = at(name);
    if (const auto* s = std::get_if<std::string>(&v)) return *s;
    fail("hyperparameter '", name, "' is not categorical");
  }

  // "name=value,name=value" in entry order; empty string when no entries.
  std::string to_string() const {
    std::string out;
    for (const auto& [name, v] : entries_) {
      if (!out.empty()) out += ',';
      out += name + "=" + param_to_string(v);
    }
    return out;
  }

  bool operator==(const HyperparamAssignment&) const = default;

 private:
  const ParamValue* find(const std::string& name) const {
    for (const auto& e : entries_) {
      if (e.first == name) return &e.second;
    }
    return nullptr;
  }

  const ParamValue& at(const std::string& name) const {
    const auto* v = find(name);
    if (!v) fail("hyperparameter '", name, "' is not set");
    return *v;
  }

  std::vector<Entry> entries_;
};

// Coerces v to the declared kind and checks bounds.
inline ParamValue coerce_param(const ParamSpec& spec, const ParamValue& v) {
  switch (spec.kind) {
    case ParamSpec::Kind::real: {
      double d;
      if (const auto* x = std::get_if<double>(&v)) d = *x;
      else if (const auto* i = std::get_if<std::int64_t>(&v)) d = static_cast<double>(*i);
      else fail("hyperparameter '", spec.name, "' expects a real value, got '", std::get<std::string>(v), "'");
      if (!std::isfinite(d) || d < spec.lo || d > spec.hi) {
        fail("hyperparameter '", spec.name, "' = ", format_double(d), " is outside [", format_double(spec.lo), ", ",
             format_double(spec.hi), "]");
      }
      return d;
    }
    case ParamSpec::Kind::integer: {
      std::int64_t i;
      if (const auto* x = std::get_if<std::int64_t>(&v)) i = *x;
      else if (const auto* d = std::get_if<double>(&v); d && std::floor(*d) == *d) i = static_cast<std::int64_t>(*d);
      else fail("hyperparameter '", spec.name, "' expects an integer value, got '", param_to_string(v), "'");
      if (static_cast<double>(i) < spec.lo || static_cast<double>(i) > spec.hi) {
        fail("hyperparameter '", spec.name, "' = ", i, " is outside [", spec.lo, ", ", spec.hi, "]");
      }
      return i;
    }
    case ParamSpec::Kind::categorical: {
      const auto* s = std::get_if<std::string>(&v);
      if (!s) fail("hyperparameter '", spec.name, "' expects one of its named choices");
      for (const auto& c : spec.choices) {
        if (c == *s) return *s;
      }
      fail("hyperparameter '", spec.name, "' = '", *s, "' is not a valid choice");
    }
  }
  fail("unhandled parameter kind");
}

/// Validates `given` against `schema` and fills in defaults. The result lists
/// every schema parameter in schema order.
inline HyperparamAssignment resolve_params(const std::string& algorithm, const std::vector<ParamSpec>& schema,
                                           const HyperparamAssignment& given) {
  for (const auto& [name, v] : given.entries()) {
    bool known = false;
    for (const auto& s : schema) known = known || s.name == name;
    if (!known) fail(algorithm, ": unknown hyperparameter '", name, "'");
  }
  HyperparamAssignment out;
  for (const auto& spec : schema) {
    bool found = false;
    for (const auto& [name, v] : given.entries()) {
      if (name == spec.name) {
        out.set(spec.name, coerce_param(spec, v));
        found = true;
      }
    }
    if (!found) out.set(spec.name, spec.fallback);
  }
  return out;
}

// Parses a scalar from text: integer if it looks like one, then real, then
// a categorical string.
inline ParamValue parse_param_value(const std::string& text) {
  if (text.empty()) fail("empty hyperparameter value");
  std::size_t pos = 0;
  try {
    const long long i = std::stoll(text, &pos);
    if (pos == text.size()) return static_cast<std::int64_t>(i);
  } catch (const std::exception&) {
  }
  try {
    const double d = std::stod(text, &pos);
    if (pos == text.size()) return d;
  } catch (const std::exception&) {
  }
  return text;
}

/// Parses "a=1,b=0.5,mode=x".
inline HyperparamAssignment parse_params(const std::string& text) {
  HyperparamAssignment out;
  std::size_t start = 0;
  while (start < text.size()) {
    const auto end = std::min(text.find(',', start), text.size());
    const std::string item = text.substr(start, end - start);
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) fail("malformed hyperparameter '", item, "' (expected name=value)");
    out.set(item.substr(0, eq), parse_param_value(item.substr(eq + 1)));
    start = end + 1;
  }
  return out;
}

}  // namespace drbench
