#pragma once

#include <json.hpp>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ldalg/flow.hpp"
#include "ldalg/lagrangian.hpp"
#include "ldalg/metric.hpp"

namespace ldalg {

// Line-oriented geometry spec: "[section]" headers, "key = value" entries with
// dotted keys, "#" comments outside quotes. A value is any JSON value or, when
// it does not parse as JSON, bare expression text.
class SpecFile {
 public:
  struct Entry {
    std::string key;
    nlohmann::json value;
    int line = 0;
  };
  struct Section {
    std::string name;
    int line = 0;
    std::vector<Entry> entries;
  };

  // Throws SpecError with "name:line" for malformed lines, duplicate keys,
  // duplicate or unknown sections and keys not allowed in their section.
  static SpecFile parse(std::string_view text, const std::string& name = "<spec>");
  static SpecFile load(const std::string& path);

  const std::string& name() const { return name_; }
  bool has(std::string_view section) const;
  const Section* section(std::string_view name) const;
  const Entry* find(std::string_view section, std::string_view key) const;
  std::string location(std::string_view section, std::string_view key = {}) const;

  // Typed access; SpecError with location on a type mismatch or a missing
  // required key.
  double number(std::string_view section, std::string_view key, std::optional<double> fallback = std::nullopt) const;
  int integer(std::string_view section, std::string_view key, std::optional<int> fallback = std::nullopt) const;
  bool boolean(std::string_view section, std::string_view key, std::optional<bool> fallback = std::nullopt) const;
  std::string text(std::string_view section, std::string_view key,
                   std::optional<std::string> fallback = std::nullopt) const;
  // Expression from a string or number; parse errors carry the entry location.
  Expr expr(std::string_view section, std::string_view key, const Coords& coords,
            std::optional<std::string> fallback = std::nullopt) const;
  std::vector<double> numbers(std::string_view section, std::string_view key) const;
  std::vector<int> integers(std::string_view section, std::string_view key) const;
  std::vector<std::pair<double, double>> box(std::string_view section, std::string_view key) const;

 private:
  std::string name_;
  std::vector<Section> sections_;
};

// Domain objects from a spec. Dimensions come from [algebroid] (n, m);
// indices in keys are 1-based.
LieAlgebroid spec_algebroid(const SpecFile& s);
NConnection spec_nconnection(const SpecFile& s, const LieAlgebroid& alg);
DMetric spec_metric(const SpecFile& s, const LieAlgebroid& alg);
Lagrangian spec_lagrangian(const SpecFile& s, const LieAlgebroid& alg);

// Geometry for the tensor commands: [metric] with [nconnection], or
// [lagrangian] with its canonical N-connection and Sasaki d-metric.
struct SpecGeometry {
  LieAlgebroid alg;
  NConnection N;
  DMetric g;
  std::optional<Lagrangian> lagrangian;
};
// SpecError unless exactly one of [metric], [lagrangian] is present.
SpecGeometry spec_geometry(const SpecFile& s);

// [grid] box, res, rule; cap from the caller.
GridSpec spec_grid(const SpecFile& s, int dim, std::size_t cap);
// Box for random sample points: [grid] box, else [lagrangian] box.
std::vector<std::pair<double, double>> spec_sample_box(const SpecFile& s, int dim);

}  // namespace ldalg
