#pragma once

// Plain-text run configuration: one `key = value` per line, `#` starts a
// comment, `[section]` prefixes the following keys with "section.".

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "vhj/errors.hpp"
#include "vhj/expression.hpp"
#include "vhj/grid.hpp"
#include "vhj/model.hpp"
#include "vhj/scheme.hpp"

namespace vhj {

class Config {
public:
  struct Entry {
    std::string value;
    std::string where;  // "file:line"
  };

  static Config parse(std::istream &in, const std::string &origin = "<config>") {
    Config c;
    c.origin_ = origin;
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const std::string where = origin + ":" + std::to_string(lineno);
      if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      line = trim(line);
      if (line.empty()) continue;
      if (line.front() == '[') {
        if (line.back() != ']') throw ConfigurationError(where + ": unterminated section header");
        section = trim(line.substr(1, line.size() - 2));
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw ConfigurationError(where + ": expected 'key = value'");
      std::string key = trim(line.substr(0, eq));
      if (key.empty()) throw ConfigurationError(where + ": empty key");
      if (!section.empty()) key = section + "." + key;
      if (c.entries_.count(key)) throw ConfigurationError(where + ": duplicate key '" + key + "'");
      c.entries_[key] = {trim(line.substr(eq + 1)), where};
      c.order_.push_back(key);
    }
    return c;
  }

  static Config from_string(const std::string &text, const std::string &origin = "<string>") {
    std::istringstream is(text);
    return parse(is, origin);
  }

  static Config load(const std::string &path) {
    std::ifstream in(path);
    if (!in) throw ConfigurationError(path + ": cannot open config file");
    return parse(in, path);
  }

  bool has(const std::string &key) const { return entries_.count(key) > 0; }
  const std::string &origin() const { return origin_; }
  const std::vector<std::string> &keys() const { return order_; }

  void set(const std::string &key, const std::string &value) {
    if (!has(key)) order_.push_back(key);
    entries_[key] = {value, "<override>"};
  }

  std::string str(const std::string &key) const { return require(key).value; }
  std::string str(const std::string &key, const std::string &fallback) const {
    return has(key) ? entries_.at(key).value : fallback;
  }

  double real(const std::string &key) const {
    const Entry &e = require(key);
    return to_real(e.value, e.where, key);
  }
  double real(const std::string &key, double fallback) const { return has(key) ? real(key) : fallback; }

  long integer(const std::string &key) const {
    const double v = real(key);
    if (v != double(long(v))) throw ConfigurationError(require(key).where + ": key '" + key + "' must be an integer");
    return long(v);
  }
  long integer(const std::string &key, long fallback) const { return has(key) ? integer(key) : fallback; }

  bool boolean(const std::string &key, bool fallback) const {
    if (!has(key)) return fallback;
    const Entry &e = entries_.at(key);
    if (e.value == "true" || e.value == "yes" || e.value == "1") return true;
    if (e.value == "false" || e.value == "no" || e.value == "0") return false;
    throw ConfigurationError(e.where + ": key '" + key + "' must be true or false");
  }

  /// Comma separated reals.
  std::vector<double> reals(const std::string &key) const {
    const Entry &e = require(key);
    std::vector<double> out;
    for (const std::string &part : split(e.value, ',')) out.push_back(to_real(part, e.where, key));
    return out;
  }
  std::vector<double> reals(const std::string &key, std::vector<double> fallback) const {
    return has(key) ? reals(key) : fallback;
  }
  std::vector<std::string> strings(const std::string &key) const { return split(require(key).value, ','); }

  const Entry &require(const std::string &key) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) throw ConfigurationError(origin_ + ": missing required key '" + key + "'");
    return it->second;
  }

  std::string where(const std::string &key) const { return has(key) ? entries_.at(key).where : origin_; }

  /// Ordered (key, value) pairs for echoing into outputs.
  std::vector<std::pair<std::string, std::string>> items() const {
    std::vector<std::pair<std::string, std::string>> out;
    for (const std::string &k : order_) out.emplace_back(k, entries_.at(k).value);
    return out;
  }

private:
  static std::string trim(const std::string &s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  }
  static std::vector<std::string> split(const std::string &s, char sep) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream is(s);
    while (std::getline(is, item, sep)) {
      item = trim(item);
      if (!item.empty()) out.push_back(item);
    }
    return out;
  }
  static double to_real(const std::string &s, const std::string &where, const std::string &key) {
    const std::string t = trim(s);
    double v = 0.0;
    const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || p != t.data() + t.size() || t.empty())
      throw ConfigurationError(where + ": key '" + key + "' expects a number, got '" + t + "'");
    return v;
  }

  std::string origin_;
  std::map<std::string, Entry> entries_;
  std::vector<std::string> order_;
};

namespace detail {

inline RadialSeries series_from(const std::vector<double> &v, const std::string &where, const std::string &key) {
  if (v.empty() || v.size() % 2 != 0)
    throw ConfigurationError(where + ": key '" + key + "' expects coefficient, exponent pairs");
  RadialSeries s;
  for (std::size_t k = 0; k < v.size(); k += 2) {
    s.coeffs.push_back(v[k]);
    s.exponents.push_back(v[k + 1]);
  }
  return s;
}

} // namespace detail

/// Problem from the keys m, dim, radius, source.*, initial.*, envelope.*.
inline ProblemSpec problem_from(const Config &c) {
  ProblemSpec p;
  p.m = c.real("m");
  p.dim = int(c.integer("dim", 1));
  p.radius = c.real("radius");
  p.validate();

  const std::string sf = c.str("source.family");
  if (sf == "radial-power") {
    const auto v = c.reals("source.params");
    if (v.size() != 3)
      throw ConfigurationError(c.where("source.params") + ": radial-power expects a, alpha, b");
    p.source = SourceTerm::radial_power(v[0], v[1], v[2], c.real("source.eps", 0.0));
  } else if (sf == "constant") {
    p.source = SourceTerm::constant(c.real("source.params"));
  } else if (sf == "manufactured") {
    p.source = manufacture_source(detail::series_from(c.reals("source.params"), c.where("source.params"),
                                                      "source.params"),
                                  c.real("source.lambda"), p.m, p.dim);
  } else if (sf == "expression") {
    p.source = SourceTerm::expression(Expression::parse(c.str("source.expr")));
  } else {
    throw ConfigurationError(c.where("source.family") + ": unknown source family '" + sf + "'");
  }

  const std::string inf = c.str("initial.family", "zero");
  if (inf == "zero") {
    p.initial = InitialData::zero();
  } else if (inf == "constant") {
    p.initial = InitialData::constant(c.real("initial.params"));
  } else if (inf == "polynomial") {
    p.initial = InitialData::polynomial(
        detail::series_from(c.reals("initial.params"), c.where("initial.params"), "initial.params"));
  } else if (inf == "exponential") {
    const auto v = c.reals("initial.params");
    if (v.size() != 2 && v.size() != 3)
      throw ConfigurationError(c.where("initial.params") + ": exponential expects a, b[, c]");
    p.initial = InitialData::exponential(v[0], v[1], v.size() == 3 ? v[2] : 0.0);
  } else if (inf == "shifted-ergodic") {
    p.initial = InitialData::shifted_ergodic(
        detail::series_from(c.reals("initial.params"), c.where("initial.params"), "initial.params"),
        c.real("initial.shift", 0.0));
  } else if (inf == "expression") {
    p.initial = InitialData::expression(Expression::parse(c.str("initial.expr")));
  } else {
    throw ConfigurationError(c.where("initial.family") + ": unknown initial family '" + inf + "'");
  }

  if (c.has("envelope.alpha")) {
    const double a = c.real("envelope.alpha"), phi0 = c.real("envelope.phi0"), f0 = c.real("envelope.f0");
    if (c.has("envelope.expr"))
      p.envelope = GrowthEnvelope::expression(a, phi0, f0, Expression::parse(c.str("envelope.expr")));
    else
      p.envelope = GrowthEnvelope::monomial(a, phi0, f0);
  }
  return p;
}

inline double spacing_from(const Config &c) { return c.real("grid.h"); }

/// Scheme from scheme.{mode, dt, T, snapshots, boundary, safety}.
inline SchemeConfig scheme_from(const Config &c) {
  const std::string mode = c.str("scheme.mode", "explicit");
  StepMode sm;
  if (mode == "explicit") sm = StepMode::Explicit;
  else if (mode == "imex") sm = StepMode::Imex;
  else throw ConfigurationError(c.where("scheme.mode") + ": scheme.mode must be explicit or imex");
  SchemeConfig s = SchemeConfig::uniform(c.real("scheme.T"), int(c.integer("scheme.snapshots", 40)), sm);
  s.safety = c.real("scheme.safety", s.safety);
  if (c.has("scheme.dt")) {
    s.dt_policy = DtPolicy::Fixed;
    s.dt = c.real("scheme.dt");
  }
  const std::string b = c.str("scheme.boundary", "drop");
  if (b == "drop") s.boundary = BoundaryLaplacian::Drop;
  else if (b == "one-sided") s.boundary = BoundaryLaplacian::OneSided;
  else throw ConfigurationError(c.where("scheme.boundary") + ": scheme.boundary must be drop or one-sided");
  s.validate();
  return s;
}

} // namespace vhj
