#include "ldalg/specfile.hpp"

#include <fstream>
#include <regex>
#include <sstream>

#include "ldalg/errors.hpp"
#include "ldalg/geometry.hpp"

namespace ldalg {

namespace {

struct SectionRule {
  const char* name;
  const char* keys;  // regex over the whole key
};

const SectionRule kRules[] = {
    {"algebroid", R"(n|m|rho\.\d+\.\d+|C\.\d+\.\d+\.\d+)"},
    {"nconnection", R"(N\.\d+\.\d+)"},
    {"metric", R"((h|v)\.\d+\.\d+|eps)"},
    {"lagrangian", R"(L|box)"},
    {"grid", R"(box|res|rule|points)"},
    {"flow", R"(f|mode|steps|dchi|tau|evolve_f|squared_gradient)"},
    {"geodesic", R"(x|y|steps|dtau)"},
    {"soliton",
     R"(lambda|eps|Phi|h4_0|n[12]\.[12]|n_potential|A_tilde|class|kappa|kappa_const|psi|psi\.(box|res|boundary|form)|y3|y3_samples|y0|nodes)"},
};

const SectionRule* rule_for(std::string_view name) {
  for (const auto& r : kRules)
    if (name == r.name) return &r;
  return nullptr;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::string strip_comment(const std::string& line) {
  bool quoted = false;
  for (std::size_t k = 0; k < line.size(); ++k) {
    if (line[k] == '"' && (k == 0 || line[k - 1] != '\\')) quoted = !quoted;
    if (line[k] == '#' && !quoted) return line.substr(0, k);
  }
  return line;
}

// Splits "a.b.c" into integer components after the first; SpecError on bad indices.
std::vector<int> key_indices(const std::string& key, const std::string& loc) {
  std::vector<int> out;
  std::size_t pos = key.find('.');
  while (pos != std::string::npos) {
    const std::size_t next = key.find('.', pos + 1);
    out.push_back(std::stoi(key.substr(pos + 1, next - pos - 1)));
    pos = next;
  }
  for (int v : out)
    if (v < 1) throw SpecError("indices are 1-based", loc);
  return out;
}

}  // namespace

SpecFile SpecFile::parse(std::string_view text, const std::string& name) {
  SpecFile f;
  f.name_ = name;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line = 0;
  const std::regex key_re(R"([A-Za-z_][A-Za-z0-9_]*(\.[A-Za-z0-9_]+)*)");
  while (std::getline(in, raw)) {
    ++line;
    const std::string loc = name + ":" + std::to_string(line);
    const std::string s = trim(strip_comment(raw));
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') throw SpecError("section header needs a closing ]", loc);
      const std::string sec = trim(std::string_view(s).substr(1, s.size() - 2));
      if (!rule_for(sec)) throw SpecError("unknown section [" + sec + "]", loc);
      if (f.section(sec)) throw SpecError("duplicate section [" + sec + "]", loc);
      f.sections_.push_back({sec, line, {}});
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw SpecError("expected key = value", loc);
    if (f.sections_.empty()) throw SpecError("entry before any [section]", loc);
    Section& sec = f.sections_.back();
    const std::string key = trim(std::string_view(s).substr(0, eq));
    const std::string val = trim(std::string_view(s).substr(eq + 1));
    if (!std::regex_match(key, key_re)) throw SpecError("malformed key '" + key + "'", loc);
    if (!std::regex_match(key, std::regex(rule_for(sec.name)->keys)))
      throw SpecError("key '" + key + "' is not allowed in [" + sec.name + "]", loc);
    for (const auto& e : sec.entries)
      if (e.key == key) throw SpecError("duplicate key '" + key + "'", loc);
    if (val.empty()) throw SpecError("missing value for '" + key + "'", loc);
    nlohmann::json v = nlohmann::json::parse(val, nullptr, false);
    if (v.is_discarded()) v = val;
    sec.entries.push_back({key, std::move(v), line});
  }
  return f;
}

SpecFile SpecFile::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SpecError("cannot read spec file", path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path);
}

bool SpecFile::has(std::string_view s) const { return section(s) != nullptr; }

const SpecFile::Section* SpecFile::section(std::string_view name) const {
  for (const auto& s : sections_)
    if (s.name == name) return &s;
  return nullptr;
}

const SpecFile::Entry* SpecFile::find(std::string_view sec, std::string_view key) const {
  const Section* s = section(sec);
  if (!s) return nullptr;
  for (const auto& e : s->entries)
    if (e.key == key) return &e;
  return nullptr;
}

std::string SpecFile::location(std::string_view sec, std::string_view key) const {
  if (const Entry* e = key.empty() ? nullptr : find(sec, key)) return name_ + ":" + std::to_string(e->line);
  if (const Section* s = section(sec)) return name_ + ":" + std::to_string(s->line);
  return name_ + ": [" + std::string(sec) + "]";
}

namespace {

[[noreturn]] void missing(const SpecFile& f, std::string_view sec, std::string_view key) {
  throw SpecError("missing key '" + std::string(key) + "' in [" + std::string(sec) + "]", f.location(sec));
}

}  // namespace

double SpecFile::number(std::string_view sec, std::string_view key, std::optional<double> fallback) const {
  const Entry* e = find(sec, key);
  if (!e) {
    if (fallback) return *fallback;
    missing(*this, sec, key);
  }
  if (!e->value.is_number()) throw SpecError("'" + std::string(key) + "' must be a number", location(sec, key));
  return e->value.get<double>();
}

int SpecFile::integer(std::string_view sec, std::string_view key, std::optional<int> fallback) const {
  const Entry* e = find(sec, key);
  if (!e) {
    if (fallback) return *fallback;
    missing(*this, sec, key);
  }
  if (!e->value.is_number_integer()) throw SpecError("'" + std::string(key) + "' must be an integer", location(sec, key));
  return e->value.get<int>();
}

bool SpecFile::boolean(std::string_view sec, std::string_view key, std::optional<bool> fallback) const {
  const Entry* e = find(sec, key);
  if (!e) {
    if (fallback) return *fallback;
    missing(*this, sec, key);
  }
  if (!e->value.is_boolean()) throw SpecError("'" + std::string(key) + "' must be true or false", location(sec, key));
  return e->value.get<bool>();
}

std::string SpecFile::text(std::string_view sec, std::string_view key, std::optional<std::string> fallback) const {
  const Entry* e = find(sec, key);
  if (!e) {
    if (fallback) return *fallback;
    missing(*this, sec, key);
  }
  if (e->value.is_string()) return e->value.get<std::string>();
  if (e->value.is_number() || e->value.is_boolean()) return e->value.dump();
  throw SpecError("'" + std::string(key) + "' must be a scalar", location(sec, key));
}

Expr SpecFile::expr(std::string_view sec, std::string_view key, const Coords& coords,
                    std::optional<std::string> fallback) const {
  const std::string t = text(sec, key, std::move(fallback));
  try {
    return ldalg::parse(t, coords);
  } catch (const ParseError& err) {
    throw SpecError(err.what(), location(sec, key));
  }
}

std::vector<double> SpecFile::numbers(std::string_view sec, std::string_view key) const {
  const Entry* e = find(sec, key);
  if (!e) missing(*this, sec, key);
  std::vector<double> out;
  if (!e->value.is_array()) throw SpecError("'" + std::string(key) + "' must be a list of numbers", location(sec, key));
  for (const auto& v : e->value) {
    if (!v.is_number()) throw SpecError("'" + std::string(key) + "' must be a list of numbers", location(sec, key));
    out.push_back(v.get<double>());
  }
  return out;
}

std::vector<int> SpecFile::integers(std::string_view sec, std::string_view key) const {
  const Entry* e = find(sec, key);
  if (!e) missing(*this, sec, key);
  std::vector<int> out;
  if (!e->value.is_array()) throw SpecError("'" + std::string(key) + "' must be a list of integers", location(sec, key));
  for (const auto& v : e->value) {
    if (!v.is_number_integer()) throw SpecError("'" + std::string(key) + "' must be a list of integers", location(sec, key));
    out.push_back(v.get<int>());
  }
  return out;
}

std::vector<std::pair<double, double>> SpecFile::box(std::string_view sec, std::string_view key) const {
  const Entry* e = find(sec, key);
  if (!e) missing(*this, sec, key);
  std::vector<std::pair<double, double>> out;
  const auto bad = [&] { return SpecError("'" + std::string(key) + "' must be [[lo, hi], ...] with lo < hi", location(sec, key)); };
  if (!e->value.is_array()) throw bad();
  for (const auto& v : e->value) {
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) throw bad();
    out.push_back({v[0].get<double>(), v[1].get<double>()});
    if (!(out.back().first < out.back().second)) throw bad();
  }
  return out;
}

LieAlgebroid spec_algebroid(const SpecFile& s) {
  if (!s.has("algebroid")) throw SpecError("missing [algebroid] section", s.name());
  const int n = s.integer("algebroid", "n"), m = s.integer("algebroid", "m");
  LieAlgebroid alg = [&] {
    try {
      return LieAlgebroid(n, m);
    } catch (const SpecError& e) {
      throw SpecError(e.what(), s.location("algebroid", "n"));
    }
  }();
  for (const auto& e : s.section("algebroid")->entries) {
    const std::string loc = s.location("algebroid", e.key);
    if (e.key.rfind("rho.", 0) == 0) {
      const auto ix = key_indices(e.key, loc);
      if (ix[0] > n || ix[1] > m) throw SpecError("rho index out of range", loc);
      alg.set_rho(ix[0] - 1, ix[1] - 1, s.expr("algebroid", e.key, alg.coords()));
    } else if (e.key.rfind("C.", 0) == 0) {
      const auto ix = key_indices(e.key, loc);
      if (ix[0] > m || ix[1] > m || ix[2] > m) throw SpecError("C index out of range", loc);
      if (!(ix[1] < ix[2])) throw SpecError("give C.f.a.b with a < b; antisymmetry supplies the rest", loc);
      alg.set_C(ix[0] - 1, ix[1] - 1, ix[2] - 1, s.expr("algebroid", e.key, alg.coords()));
    }
  }
  try {
    alg.validate();
  } catch (const SpecError& e) {
    throw SpecError(e.what(), s.location("algebroid"));
  }
  return alg;
}

NConnection spec_nconnection(const SpecFile& s, const LieAlgebroid& alg) {
  NConnection N(alg.n(), alg.m());
  if (!s.has("nconnection")) return N;
  for (const auto& e : s.section("nconnection")->entries) {
    const std::string loc = s.location("nconnection", e.key);
    const auto ix = key_indices(e.key, loc);
    if (ix[0] > alg.m() || ix[1] > alg.m()) throw SpecError("N index out of range", loc);
    N(ix[0] - 1, ix[1] - 1) = s.expr("nconnection", e.key, alg.coords());
  }
  return N;
}

DMetric spec_metric(const SpecFile& s, const LieAlgebroid& alg) {
  if (!s.has("metric")) throw SpecError("missing [metric] section", s.name());
  const int m = alg.m();
  DMetric g(m);
  for (const auto& e : s.section("metric")->entries) {
    if (e.key == "eps") continue;
    const std::string loc = s.location("metric", e.key);
    const auto ix = key_indices(e.key, loc);
    if (ix[0] > m || ix[1] > m) throw SpecError("metric index out of range", loc);
    const std::string mirror = e.key.substr(0, 1) + "." + std::to_string(ix[1]) + "." + std::to_string(ix[0]);
    if (ix[0] != ix[1] && s.find("metric", mirror) && ix[0] > ix[1])
      throw SpecError("give each off-diagonal metric entry once", loc);
    const Expr v = s.expr("metric", e.key, alg.coords());
    if (e.key[0] == 'h')
      g.set_h(ix[0] - 1, ix[1] - 1, v);
    else
      g.set_v(ix[0] - 1, ix[1] - 1, v);
  }
  if (s.find("metric", "eps")) {
    const auto eps = s.integers("metric", "eps");
    if (static_cast<int>(eps.size()) != 2 * m) throw SpecError("eps needs 2m entries", s.location("metric", "eps"));
    for (int v : eps)
      if (v != 1 && v != -1) throw SpecError("eps entries must be +1 or -1", s.location("metric", "eps"));
    g.eps = eps;
  }
  return g;
}

Lagrangian spec_lagrangian(const SpecFile& s, const LieAlgebroid& alg) {
  if (!s.has("lagrangian")) throw SpecError("missing [lagrangian] section", s.name());
  Lagrangian L;
  L.n = alg.n();
  L.m = alg.m();
  L.L = s.expr("lagrangian", "L", alg.coords());
  if (s.find("lagrangian", "box")) {
    L.box = s.box("lagrangian", "box");
    if (static_cast<int>(L.box.size()) != alg.n() + alg.m())
      throw SpecError("box needs n + m intervals", s.location("lagrangian", "box"));
  }
  return L;
}

SpecGeometry spec_geometry(const SpecFile& s) {
  SpecGeometry geo;
  geo.alg = spec_algebroid(s);
  const bool metric = s.has("metric"), lag = s.has("lagrangian");
  if (metric == lag) throw SpecError("give exactly one of [metric] and [lagrangian]", s.name());
  if (metric) {
    geo.N = spec_nconnection(s, geo.alg);
    geo.g = spec_metric(s, geo.alg);
    return geo;
  }
  if (s.has("nconnection"))
    throw SpecError("[nconnection] conflicts with [lagrangian], which fixes the canonical N-connection",
                    s.location("nconnection"));
  geo.lagrangian = spec_lagrangian(s, geo.alg);
  geo.N = canonical_n_connection(*geo.lagrangian, geo.alg);
  geo.g = sasaki_dmetric(*geo.lagrangian);
  return geo;
}

GridSpec spec_grid(const SpecFile& s, int dim, std::size_t cap) {
  if (!s.has("grid")) throw SpecError("missing [grid] section", s.name());
  GridSpec g;
  g.box = s.box("grid", "box");
  if (static_cast<int>(g.box.size()) != dim)
    throw SpecError("grid box needs " + std::to_string(dim) + " intervals", s.location("grid", "box"));
  g.resolution = s.integers("grid", "res");
  const std::string rule = s.text("grid", "rule", "midpoint");
  if (rule == "midpoint")
    g.rule = Quadrature::Midpoint;
  else if (rule == "trapezoid")
    g.rule = Quadrature::Trapezoid;
  else
    throw SpecError("rule must be midpoint or trapezoid", s.location("grid", "rule"));
  g.cap = cap;
  try {
    g.validate();
  } catch (const SpecError& e) {
    throw SpecError(e.what(), s.location("grid"));
  }
  return g;
}

std::vector<std::pair<double, double>> spec_sample_box(const SpecFile& s, int dim) {
  std::vector<std::pair<double, double>> b;
  if (s.find("grid", "box"))
    b = s.box("grid", "box");
  else if (s.find("lagrangian", "box"))
    b = s.box("lagrangian", "box");
  else
    throw SpecError("sample points need [grid] box or [lagrangian] box", s.name());
  if (static_cast<int>(b.size()) != dim) throw SpecError("sample box needs n + m intervals", s.name());
  return b;
}

}  // namespace ldalg
