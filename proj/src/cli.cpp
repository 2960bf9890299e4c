#include "ldalg/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>

#include "ldalg/errors.hpp"
#include "ldalg/geometry.hpp"
#include "ldalg/mechanics.hpp"
#include "ldalg/soliton.hpp"
#include "ldalg/specfile.hpp"

namespace ldalg::cli {

using Json = nlohmann::ordered_json;

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12e", v);
  return buf;
}

namespace {

void write_json(const Json& j, std::ostream& os, int depth) {
  const std::string pad(2 * (depth + 1), ' '), close(2 * depth, ' ');
  switch (j.type()) {
    case Json::value_t::object: {
      if (j.empty()) {
        os << "{}";
        return;
      }
      os << "{\n";
      bool first = true;
      for (const auto& [k, v] : j.items()) {
        if (!first) os << ",\n";
        first = false;
        os << pad << Json(k).dump() << ": ";
        write_json(v, os, depth + 1);
      }
      os << "\n" << close << "}";
      return;
    }
    case Json::value_t::array: {
      if (j.empty()) {
        os << "[]";
        return;
      }
      os << "[\n";
      for (std::size_t k = 0; k < j.size(); ++k) {
        if (k) os << ",\n";
        os << pad;
        write_json(j[k], os, depth + 1);
      }
      os << "\n" << close << "]";
      return;
    }
    case Json::value_t::number_float: {
      const double v = j.get<double>();
      os << (std::isfinite(v) ? format_double(v) : "null");
      return;
    }
    default:
      os << j.dump();
  }
}

}  // namespace

std::string dump_json(const Json& j) {
  std::ostringstream os;
  write_json(j, os, 0);
  os << "\n";
  return os.str();
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

namespace {

struct Options {
  std::string command;
  std::string spec, json, csv, metric_out;
  double tol = 0.0;
  bool tol_set = false;
  unsigned long long seed = 0;
  std::size_t grid_cap = 1000000;
  int steps = 0;
  bool steps_set = false;
  double dchi = 0.0, tau = 0.0, dtau = 0.0;
  bool dchi_set = false, tau_set = false, dtau_set = false;
  std::string mode;
  std::vector<double> x, y;
  std::vector<std::string> tensors;
};

class Report {
 public:
  Json checks = Json::object();
  Json results = Json::object();
  Json artifacts = Json::array();
  Json notes = Json::array();

  // A diagnostic is reported but never fails the command; NaN fails an enforced check.
  void check(const std::string& name, double value, double tol, bool enforced = true) {
    const bool ok = !enforced || value <= tol;
    checks[name] = Json{{"max_residual", value}, {"tolerance", tol}, {"pass", ok}, {"enforced", enforced}};
    pass_ = pass_ && ok;
  }
  void note(const std::string& s) { notes.push_back(s); }
  bool pass() const { return pass_; }

 private:
  bool pass_ = true;
};

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  std::string text() const {
    std::string s;
    for (std::size_t k = 0; k < header.size(); ++k) s += (k ? "," : "") + csv_field(header[k]);
    s += "\r\n";
    for (const auto& r : rows) {
      for (std::size_t k = 0; k < r.size(); ++k) s += (k ? "," : "") + csv_field(format_double(r[k]));
      s += "\r\n";
    }
    return s;
  }
};

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw SpecError("cannot write output file", path);
  f << text;
  if (!f) throw SpecError("write failed", path);
}

struct Context {
  const Options& opt;
  const SpecFile& spec;
  Report& rep;
  std::ostream& out;
  std::optional<Table> csv;
  std::vector<std::pair<std::string, std::string>> files;  // extra artifacts: path, text

  double tol(double fallback) const { return opt.tol_set ? opt.tol : fallback; }
};

Json numbers_json(const std::vector<double>& v) {
  Json a = Json::array();
  for (double x : v) a.push_back(x);
  return a;
}

PointList sample_points(const Context& c, int dim) {
  const auto box = spec_sample_box(c.spec, dim);
  const int count = c.spec.integer("grid", "points", 30);
  if (count < 1) throw SpecError("points must be positive", c.spec.location("grid", "points"));
  return random_points(box, count, c.opt.seed);
}

// Canonical torsion prescriptions and metric compatibility at the points.
void connection_checks(Context& c, const GeometrySource& src, int m, const PointList& pts) {
  const int D = 2 * m;
  const auto conn = canonical_dconnection();
  double thh = 0.0, tvv = 0.0, comp = 0.0;
  for (const auto& p : pts) {
    FrameData fd(src(p));
    const Conn G = conn(fd);
    const auto T = torsion(G, fd);
    const auto& C = fd.geometry().C;
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b)
        for (int f = 0; f < m; ++f) {
          thh = std::max(thh, std::fabs(T[idx3(D, a, b, f)] - C[(a * m + b) * m + f].v));
          tvv = std::max(tvv, std::fabs(T[idx3(D, m + a, m + b, m + f)]));
        }
    comp = std::max(comp, max_abs(metric_derivative(G, fd)));
  }
  c.rep.check("torsion_hh_minus_C", thh, c.tol(1e-10));
  c.rep.check("torsion_vv", tvv, c.tol(1e-10));
  c.rep.check("metric_compatibility", comp, c.tol(1e-9));
}

void describe_geometry(Context& c, const SpecGeometry& geo) {
  c.rep.results["n"] = geo.alg.n();
  c.rep.results["m"] = geo.alg.m();
  c.rep.results["source"] = geo.lagrangian ? "lagrangian" : "metric";
}

// ---- verify ----

void cmd_verify(Context& c) {
  const SpecGeometry geo = spec_geometry(c.spec);
  const int n = geo.alg.n(), m = geo.alg.m();
  describe_geometry(c, geo);
  const PointList pts = sample_points(c, n + m);
  c.rep.results["points"] = pts.size();
  c.rep.results["seed"] = c.opt.seed;

  const auto sr = verify_structure(geo.alg, pts, c.tol(1e-9));
  c.rep.check("anchor_identity", sr.anchor_residual, c.tol(1e-9));
  c.rep.check("jacobi_identity", sr.jacobi_residual, c.tol(1e-9));
  c.rep.results["min_block_det"] = geo.g.check_nondegenerate(pts);

  connection_checks(c, symbolic_source(geo.alg, geo.N, geo.g), m, pts);

  if (geo.lagrangian) {
    const Lagrangian& L = *geo.lagrangian;
    c.rep.results["min_hessian_det"] = check_regular(L, pts);
    const auto k = kahler_check(L, geo.alg, pts, c.tol(1e-8));
    c.rep.check("kahler_theta_minus_domega", k.theta_minus_domega, c.tol(1e-8));
    c.rep.check("kahler_dtheta", k.dtheta, c.tol(1e-8));
    c.rep.check("kahler_antisymmetry", k.asymmetry, c.tol(1e-8), false);
    const auto phi = semispray(L, geo.alg);
    c.rep.check("semispray", semispray_residual(L, geo.alg, phi, pts), c.tol(1e-9));
  }
}

// ---- derive ----

struct BlockStats {
  double max = 0.0, sum = 0.0;
  std::size_t count = 0;
  void add(double v) {
    max = std::max(max, std::fabs(v));
    sum += std::fabs(v);
    ++count;
  }
};

// Block label of a flat frame index of the given rank: one h/v letter per slot.
std::string block_label(std::size_t flat, int rank, int D, int m) {
  std::string s(rank, 'h');
  for (int k = rank - 1; k >= 0; --k) {
    if (static_cast<int>(flat % D) >= m) s[k] = 'v';
    flat /= D;
  }
  return s;
}

const std::vector<std::string>& known_tensors() {
  static const std::vector<std::string> t{"torsion", "curvature", "ricci", "scalar", "einstein", "metric_derivative",
                                          "distortion"};
  return t;
}

void cmd_derive(Context& c) {
  const SpecGeometry geo = spec_geometry(c.spec);
  const int n = geo.alg.n(), m = geo.alg.m(), D = 2 * m;
  describe_geometry(c, geo);
  std::vector<std::string> wanted = c.opt.tensors;
  if (wanted.empty()) wanted = {"torsion", "curvature", "ricci", "scalar", "einstein"};
  for (const auto& t : wanted)
    if (std::find(known_tensors().begin(), known_tensors().end(), t) == known_tensors().end())
      throw SpecError("unknown tensor '" + t + "'", "--tensors");

  const GridSpec grid = spec_grid(c.spec, n + m, c.opt.grid_cap);
  PointList nodes(grid.total());
  for (std::size_t q = 0; q < nodes.size(); ++q) nodes[q] = grid.point(q);
  c.rep.results["nodes"] = nodes.size();
  c.rep.results["min_block_det"] = geo.g.check_nondegenerate(nodes);

  const auto want = [&](const char* t) { return std::find(wanted.begin(), wanted.end(), t) != wanted.end(); };
  std::map<std::string, std::map<std::string, BlockStats>> stats;
  const auto add_all = [&](const std::string& name, const std::vector<double>& v, int rank) {
    for (std::size_t k = 0; k < v.size(); ++k) stats[name][block_label(k, rank, D, m)].add(v[k]);
  };
  const auto src = symbolic_source(geo.alg, geo.N, geo.g);
  const auto conn = canonical_dconnection();
  const auto lc = levi_civita();
  for (const auto& p : nodes) {
    FrameData fd(src(p));
    const Conn G = conn(fd);
    if (want("torsion")) add_all("torsion", torsion(G, fd), 3);
    if (want("metric_derivative")) add_all("metric_derivative", metric_derivative(G, fd), 3);
    if (want("curvature") || want("ricci") || want("scalar") || want("einstein")) {
      const auto R = curvature(G, fd);
      if (want("curvature")) add_all("curvature", R, 4);
      const auto ric = ricci(R, D);
      if (want("ricci")) add_all("ricci", ric, 2);
      const double sR = scalar_curvature(ric, fd);
      if (want("scalar")) stats["scalar"]["value"].add(sR);
      if (want("einstein")) add_all("einstein", einstein(ric, sR, fd), 2);
    }
    if (want("distortion")) {
      const Conn Z = distortion(lc(fd), G);
      std::vector<double> z(Z.size());
      for (std::size_t k = 0; k < Z.size(); ++k) z[k] = Z[k].v;
      add_all("distortion", z, 3);
    }
  }
  Json tensors = Json::object();
  for (const auto& t : wanted) {
    Json blocks = Json::object();
    for (const auto& [label, st] : stats[t])
      blocks[label] = Json{{"max_abs", st.max}, {"mean_abs", st.count ? st.sum / st.count : 0.0}};
    tensors[t] = blocks;
  }
  c.rep.results["connection"] = "canonical";
  c.rep.results["tensors"] = tensors;
  connection_checks(c, src, m, nodes);
}

// ---- geodesic ----

void cmd_geodesic(Context& c) {
  const SpecGeometry geo = spec_geometry(c.spec);
  if (!geo.lagrangian) throw SpecError("geodesic needs a [lagrangian] section", c.spec.name());
  const Lagrangian& L = *geo.lagrangian;
  const int n = geo.alg.n(), m = geo.alg.m();
  describe_geometry(c, geo);
  PathState init;
  init.x = !c.opt.x.empty() ? c.opt.x : c.spec.numbers("geodesic", "x");
  init.y = !c.opt.y.empty() ? c.opt.y : c.spec.numbers("geodesic", "y");
  if (static_cast<int>(init.x.size()) != n) throw SpecError("initial x needs n = " + std::to_string(n) + " entries", "--x");
  if (static_cast<int>(init.y.size()) != m) throw SpecError("initial y needs m = " + std::to_string(m) + " entries", "--y");
  const int steps = c.opt.steps_set ? c.opt.steps : c.spec.integer("geodesic", "steps", 1000);
  const double dtau = c.opt.dtau_set ? c.opt.dtau : c.spec.number("geodesic", "dtau", 1e-3);
  if (steps < 2) throw SpecError("geodesic needs at least 2 steps", "--steps");
  if (!(dtau > 0)) throw SpecError("dtau must be positive", "--dtau");

  const auto path = integrate_semispray(L, geo.alg, init, steps, dtau);
  const auto el = euler_lagrange_residual(L, geo.alg, path);
  const auto cd = cartan_data(L, geo.alg);
  const double E0 = energy(cd, path.front());

  Table t;
  t.header.push_back("tau");
  for (int k = 0; k < n + m; ++k) t.header.push_back(geo.alg.coords().name(k));
  t.header.push_back("E_L");
  t.header.push_back("residual");
  double drift = 0.0;
  for (std::size_t k = 0; k < path.size(); ++k) {
    const double E = energy(cd, path[k]);
    drift = std::max(drift, std::fabs(E - E0));
    std::vector<double> row{path[k].tau};
    row.insert(row.end(), path[k].x.begin(), path[k].x.end());
    row.insert(row.end(), path[k].y.begin(), path[k].y.end());
    row.push_back(E);
    row.push_back(k < el.per_step.size() ? el.per_step[k] : 0.0);
    t.rows.push_back(std::move(row));
  }
  c.csv = std::move(t);
  c.rep.results["steps"] = steps;
  c.rep.results["dtau"] = dtau;
  c.rep.results["energy_initial"] = E0;
  c.rep.results["kinematic_residual"] = el.kinematic;
  c.rep.results["dynamic_residual"] = el.dynamic;
  c.rep.results["final"] = Json{{"tau", path.back().tau}, {"x", numbers_json(path.back().x)}, {"y", numbers_json(path.back().y)}};
  c.rep.check("euler_lagrange", el.max(), c.tol(1e-5));
  c.rep.check("energy_drift", drift, c.tol(1e-6));
}

// ---- flow and functionals ----

struct FlowSetup {
  FlowState state;
  FlowMode mode = FlowMode::Canonical;
  ConnMode conn = ConnMode::Canonical;
  bool evolve_f = true, squared_gradient = false;
  double tau = 1.0;
};

FlowSetup flow_setup(Context& c) {
  const SpecGeometry geo = spec_geometry(c.spec);
  const int n = geo.alg.n(), m = geo.alg.m();
  describe_geometry(c, geo);
  FlowSetup fs;
  const std::string mode = !c.opt.mode.empty() ? c.opt.mode : c.spec.text("flow", "mode", "canonical");
  if (mode == "canonical")
    fs.mode = FlowMode::Canonical;
  else if (mode == "cartan")
    fs.mode = FlowMode::Cartan;
  else if (mode == "symplectic")
    fs.mode = FlowMode::Symplectic;
  else
    throw SpecError("mode must be canonical, cartan or symplectic", c.opt.mode.empty() ? c.spec.location("flow", "mode") : "--mode");
  fs.conn = fs.mode == FlowMode::Cartan ? ConnMode::Cartan : ConnMode::Canonical;
  fs.tau = c.opt.tau_set ? c.opt.tau : c.spec.number("flow", "tau", 1.0);
  if (!(fs.tau > 0)) throw SpecError("tau must be positive", c.opt.tau_set ? "--tau" : c.spec.location("flow", "tau"));
  fs.evolve_f = c.spec.boolean("flow", "evolve_f", true);
  fs.squared_gradient = c.spec.boolean("flow", "squared_gradient", false);
  const Expr f = c.spec.expr("flow", "f", geo.alg.coords(), "0");
  const GridSpec grid = spec_grid(c.spec, n + m, c.opt.grid_cap);
  fs.state = sample_state(geo.alg, geo.g, geo.N, f, grid);
  c.rep.results["nodes"] = grid.total();
  c.rep.results["mode"] = std::string(flow_mode_name(fs.mode));
  c.rep.results["tau"] = fs.tau;
  return fs;
}

void cmd_flow(Context& c) {
  FlowSetup fs = flow_setup(c);
  const int steps = c.opt.steps_set ? c.opt.steps : c.spec.integer("flow", "steps", 10);
  const double dchi = c.opt.dchi_set ? c.opt.dchi : c.spec.number("flow", "dchi", 1e-4);
  if (steps < 1) throw SpecError("steps must be positive", "--steps");
  if (!(dchi > 0)) throw SpecError("dchi must be positive", "--dchi");
  if (!(fs.tau - steps * dchi > 0)) throw SpecError("tau - steps * dchi must stay positive", "--tau");

  Table t;
  t.header = {"chi", "F", "W", "E", "S", "sigma", "constraint_residual", "min_det"};
  FlowState s = fs.state;
  double min_sigma = INFINITY, min_dW = INFINITY, prev_W = 0.0;
  for (int k = 0; k <= steps; ++k) {
    if (k > 0) s = flow_step(s, dchi, fs.mode, fs.evolve_f);
    const double tk = fs.tau - s.chi;
    const double F = perelman_F(s, fs.conn).value;
    const double W = perelman_W(s, tk, {fs.conn, fs.squared_gradient}).value;
    const auto th = thermodynamics(s, tk, fs.conn);
    min_sigma = std::min(min_sigma, th.sigma);
    if (k > 0) min_dW = std::min(min_dW, (W - prev_W) / dchi);
    prev_W = W;
    t.rows.push_back({s.chi, F, W, th.energy, th.entropy, th.sigma, s.constraint_residual, s.min_det});
  }
  c.rep.results["steps"] = steps;
  c.rep.results["dchi"] = dchi;
  c.rep.results["evolve_f"] = fs.evolve_f;
  c.rep.results["final"] = Json{{"chi", t.rows.back()[0]}, {"F", t.rows.back()[1]}, {"W", t.rows.back()[2]},
                                {"E", t.rows.back()[3]}, {"S", t.rows.back()[4]}, {"sigma", t.rows.back()[5]}};
  c.rep.results["min_dW_dchi"] = min_dW;
  c.rep.check("sigma_nonnegative", std::max(0.0, -min_sigma), 0.0);
  const bool canonical = fs.mode == FlowMode::Canonical;
  c.rep.check("W_monotone", std::max(0.0, -min_dW), c.tol(1e-4), canonical);
  if (!canonical) c.rep.note("W monotonicity is enforced only in canonical mode");
  c.csv = std::move(t);
}

void cmd_functionals(Context& c) {
  FlowSetup fs = flow_setup(c);
  const FlowState& s = fs.state;
  const auto F = perelman_F(s, fs.conn);
  const auto Wa = perelman_W(s, fs.tau, {fs.conn, false});
  const auto Ws = perelman_W(s, fs.tau, {fs.conn, true});
  const auto th = thermodynamics(s, fs.tau, fs.conn);
  const auto part = [](const FunctionalReport& r) {
    return Json{{"value", r.value}, {"curvature_part", r.curvature_part}, {"gradient_part", r.gradient_part},
                {"shift", r.shift}, {"normalization", r.normalization}};
  };
  c.rep.results["F"] = part(F);
  c.rep.results["W"] = part(Wa);
  c.rep.results["W_squared_gradient"] = part(Ws);
  c.rep.results["E"] = th.energy;
  c.rep.results["S"] = th.entropy;
  c.rep.results["sigma"] = th.sigma;
  c.rep.check("sigma_nonnegative", std::max(0.0, -th.sigma), 0.0);
  c.rep.check("W_normalization", std::fabs(Wa.normalization - 1.0), c.tol(1e-9));
}

// ---- solitons ----

SolitonProblem soliton_problem(const SpecFile& s, LieAlgebroid alg) {
  SolitonProblem p;
  p.alg = std::move(alg);
  p.lambda = s.number("soliton", "lambda");
  if (s.find("soliton", "eps")) {
    const auto e = s.integers("soliton", "eps");
    if (e.size() != 4) throw SpecError("eps needs 4 entries", s.location("soliton", "eps"));
    std::copy(e.begin(), e.end(), p.eps.begin());
  }
  p.kappa = s.expr("soliton", "kappa", p.alg.coords(), "0");
  if (s.find("soliton", "kappa_const")) {
    const auto k = s.numbers("soliton", "kappa_const");
    if (k.size() != 4) throw SpecError("kappa_const needs 4 entries", s.location("soliton", "kappa_const"));
    p.kappa_const = std::array<double, 4>{k[0], k[1], k[2], k[3]};
  }
  try {
    p.validate();
  } catch (const SpecError& e) {
    throw SpecError(e.what(), s.location("soliton"));
  }
  return p;
}

void report_soliton(Context& c, const SolitonReport& r) {
  for (const auto& ch : r.checks) c.rep.check(ch.name, ch.value, ch.tolerance, ch.enforced);
  for (const auto& n : r.notes) c.rep.note(n);
}

std::string algebroid_text(const LieAlgebroid& alg) {
  const Coords& co = alg.coords();
  std::ostringstream os;
  os << "[algebroid]\nn = " << alg.n() << "\nm = " << alg.m() << "\n";
  for (int i = 0; i < alg.n(); ++i)
    for (int a = 0; a < alg.m(); ++a)
      if (!alg.rho(i, a).is_const(0.0)) os << "rho." << i + 1 << "." << a + 1 << " = " << print(alg.rho(i, a), co) << "\n";
  for (int f = 0; f < alg.m(); ++f)
    for (int a = 0; a < alg.m(); ++a)
      for (int b = a + 1; b < alg.m(); ++b)
        if (!alg.C(f, a, b).is_const(0.0))
          os << "C." << f + 1 << "." << a + 1 << "." << b + 1 << " = " << print(alg.C(f, a, b), co) << "\n";
  return os.str();
}

void cmd_soliton_generate(Context& c) {
  const SpecFile& s = c.spec;
  LieAlgebroid alg = s.has("algebroid") ? spec_algebroid(s) : LieAlgebroid::trivial(2);
  const SolitonProblem prob = soliton_problem(s, std::move(alg));
  const Coords& co = prob.alg.coords();

  GeneratingData gen;
  AssembleOptions opt;
  opt.tolerance = c.tol(1e-6);
  opt.x_box = s.find("soliton", "psi.box") ? s.box("soliton", "psi.box")
                                           : std::vector<std::pair<double, double>>{{-0.5, 0.5}, {-0.5, 0.5}};
  if (opt.x_box.size() != 2) throw SpecError("psi.box needs 2 intervals", s.location("soliton", "psi.box"));
  if (s.find("soliton", "psi")) {
    gen.psi.expr = s.expr("soliton", "psi", co);
  } else {
    HEquation eq;
    eq.lambda = prob.lambda;
    eq.eps1 = prob.eps[0];
    eq.eps2 = prob.eps[1];
    const std::string form = s.text("soliton", "psi.form", "liouville");
    if (form == "liouville")
      eq.form = HForm::Liouville;
    else if (form == "printed")
      eq.form = HForm::Printed;
    else
      throw SpecError("psi.form must be liouville or printed", s.location("soliton", "psi.form"));
    GridSpec g;
    g.box = opt.x_box;
    g.resolution = s.find("soliton", "psi.res") ? s.integers("soliton", "psi.res") : std::vector<int>{64, 64};
    g.rule = Quadrature::Trapezoid;
    g.cap = c.opt.grid_cap;
    if (g.resolution.size() != 2) throw SpecError("psi.res needs 2 entries", s.location("soliton", "psi.res"));
    try {
      g.validate();
    } catch (const SpecError& e) {
      throw SpecError(e.what(), s.location("soliton", "psi.res"));
    }
    const Expr boundary = s.expr("soliton", "psi.boundary", co);
    auto sol = std::make_shared<HSolution>(solve_h_equation(eq, prob.alg, g, boundary));
    c.rep.results["psi"] = Json{{"grid", Json{g.resolution[0], g.resolution[1]}},
                                {"form", form},
                                {"newton_iterations", sol->iterations},
                                {"discrete_residual", sol->residual}};
    gen.psi.grid = std::move(sol);
  }
  gen.Phi = s.expr("soliton", "Phi", co);
  gen.h4_0 = s.expr("soliton", "h4_0", co, "0");
  for (int b = 0; b < 2; ++b) {
    gen.n1[b] = s.expr("soliton", "n1." + std::to_string(b + 1), co, "0");
    gen.n2[b] = s.expr("soliton", "n2." + std::to_string(b + 1), co, "0");
  }
  if (s.find("soliton", "n_potential")) gen.n_potential = s.expr("soliton", "n_potential", co);
  if (s.find("soliton", "A_tilde")) gen.A_tilde = s.expr("soliton", "A_tilde", co);
  gen.y0 = s.number("soliton", "y0", 0.0);
  if (s.find("soliton", "y3")) {
    const auto r = s.numbers("soliton", "y3");
    if (r.size() != 2 || !(r[0] < r[1])) throw SpecError("y3 must be [lo, hi] with lo < hi", s.location("soliton", "y3"));
    opt.y3_range = {r[0], r[1]};
  }
  opt.y3_samples = s.integer("soliton", "y3_samples", 3);
  opt.max_nodes_per_axis = s.integer("soliton", "nodes", 12);
  const std::string cls_name = s.text("soliton", "class", "torsion");
  SolutionClass cls;
  if (cls_name == "lc")
    cls = SolutionClass::LeviCivita;
  else if (cls_name == "torsion")
    cls = SolutionClass::Torsion;
  else
    throw SpecError("class must be lc or torsion", s.location("soliton", "class"));

  c.rep.results["type"] = std::string(soliton_type_name(prob.type()));
  c.rep.results["class"] = cls_name;
  c.rep.results["lambda"] = prob.lambda;
  std::optional<SolitonSolution> sol;
  try {
    sol = assemble(prob, gen, cls, opt);
  } catch (const SolitonRejected& r) {
    c.rep.note("assembled solution rejected");
    report_soliton(c, r.solution().report);
    c.rep.results["points"] = r.solution().points.size();
    return;
  }
  report_soliton(c, sol->report);
  c.rep.results["points"] = sol->points.size();
  c.rep.results["h3"] = print(sol->h3, co);
  c.rep.results["h4"] = print(sol->h4, co);
  c.rep.results["w"] = Json{print(sol->w[0], co), print(sol->w[1], co)};
  if (!c.opt.metric_out.empty())
    c.files.emplace_back(c.opt.metric_out, "# assembled soliton metric\n" + algebroid_text(prob.alg) + sol->metric_text());
}

void cmd_soliton_check(Context& c) {
  const SpecGeometry geo = spec_geometry(c.spec);
  describe_geometry(c, geo);
  const SolitonProblem prob = [&] {
    if (geo.alg.n() != 2 || geo.alg.m() != 2) {
      SolitonProblem p;
      p.alg = geo.alg;
      p.lambda = c.spec.number("soliton", "lambda");
      p.kappa = c.spec.expr("soliton", "kappa", geo.alg.coords(), "0");
      return p;
    }
    return soliton_problem(c.spec, geo.alg);
  }();
  const PointList pts = sample_points(c, geo.alg.n() + geo.alg.m());
  c.rep.results["points"] = pts.size();
  c.rep.results["seed"] = c.opt.seed;
  c.rep.results["lambda"] = prob.lambda;
  c.rep.results["type"] = std::string(soliton_type_name(prob.type()));
  geo.g.check_nondegenerate(pts);
  const auto src = symbolic_source(geo.alg, geo.N, geo.g);
  const double tol = c.tol(1e-6);
  const auto r = soliton_residual(src, prob.kappa, prob.lambda, pts, prob.kappa_const);
  static const char* blocks[4] = {"soliton_hh", "soliton_hv", "soliton_vh", "soliton_vv"};
  for (int k = 0; k < 4; ++k) c.rep.check(blocks[k], r.block[k], tol);
  if (prob.kappa_const) c.rep.check("potential_frame_derivatives", r.potential, tol);
  c.rep.check("soliton_negated_lambda", soliton_residual(src, prob.kappa, -prob.lambda, pts, prob.kappa_const).max(), tol,
              false);
  if (geo.alg.n() == 2 && geo.alg.m() == 2) {
    try {
      const auto comp = component_residuals(src, pts, prob.lambda, true);
      c.rep.check("eq1b", comp.eq1b, tol, false);
      c.rep.check("eq2b", comp.eq2b, tol, false);
      c.rep.check("eq3b", comp.eq3b, tol, false);
      c.rep.check("eq4b", comp.eq4b, tol, false);
      c.rep.check("two_route", comp.two_route, tol, false);
      const auto l = lc_residuals(src, pts);
      c.rep.check("lc_w_star", l.w_star, tol, false);
      c.rep.check("lc_h4_shift", l.h4_shift, tol, false);
      c.rep.check("lc_w_curl", l.w_curl, tol, false);
      c.rep.check("lc_n_star", l.n_star, tol, false);
      c.rep.check("lc_n_curl", l.n_curl, tol, false);
    } catch (const SpecError& e) {
      c.rep.note(std::string("component equations not evaluated: ") + e.what());
    }
  } else {
    c.rep.note("component equations need n = m = 2");
  }
  c.rep.check("distortion_norm", distortion_norm(src, pts), tol, false);
  c.rep.note("component residuals and distortion are diagnostics; the soliton blocks decide the result");
}

// ---- driver ----

std::string kind_of(int code) {
  switch (code) {
    case kExitSpecError:
      return "spec_error";
    case kExitNumeric:
      return "numeric_error";
    case kExitCheckFailed:
      return "check_failed";
    default:
      return "pass";
  }
}

Json flags_json(const Options& o) {
  Json f = Json::object();
  f["seed"] = o.seed;
  f["tol"] = o.tol_set ? Json(o.tol) : Json(nullptr);
  f["grid_cap"] = o.grid_cap;
  if (o.steps_set) f["steps"] = o.steps;
  if (o.dchi_set) f["dchi"] = o.dchi;
  if (o.tau_set) f["tau"] = o.tau;
  if (o.dtau_set) f["dtau"] = o.dtau;
  if (!o.mode.empty()) f["mode"] = o.mode;
  if (!o.x.empty()) f["x"] = numbers_json(o.x);
  if (!o.y.empty()) f["y"] = numbers_json(o.y);
  if (!o.tensors.empty()) f["tensors"] = o.tensors;
  if (!o.csv.empty()) f["csv"] = o.csv;
  if (!o.metric_out.empty()) f["metric_out"] = o.metric_out;
  return f;
}

std::string human_value(const Json& v) {
  if (v.is_number_float()) return format_double(v.get<double>());
  if (v.is_string()) return v.get<std::string>();
  if (v.is_array()) {
    std::string s = "[";
    for (std::size_t k = 0; k < v.size(); ++k) s += (k ? ", " : "") + human_value(v[k]);
    return s + "]";
  }
  return v.dump();
}

// Nested objects print as dotted keys; an object of scalars prints on one line.
void print_result(std::ostream& out, const std::string& key, const Json& v) {
  if (!v.is_object()) {
    out << "  " << key << ": " << human_value(v) << "\n";
    return;
  }
  const bool flat = std::none_of(v.begin(), v.end(), [](const Json& e) { return e.is_structured(); });
  if (!flat) {
    for (const auto& [k, e] : v.items()) print_result(out, key + "." + k, e);
    return;
  }
  out << "  " << key << ":";
  for (const auto& [k, e] : v.items()) out << " " << k << "=" << human_value(e);
  out << "\n";
}

void print_human(std::ostream& out, const Options& o, const Report& rep, const Json& error, int code, double seconds) {
  out << "ldalg " << o.command << ": " << o.spec << "\n";
  if (!error.is_null()) out << "  " << error["kind"].get<std::string>() << ": " << error["message"].get<std::string>() << "\n";
  std::size_t width = 5;
  for (const auto& [k, v] : rep.checks.items()) width = std::max(width, k.size());
  if (!rep.checks.empty())
    out << "  " << std::left << std::setw(static_cast<int>(width)) << "check" << "  " << std::setw(20) << "residual"
        << std::setw(20) << "tolerance" << "status\n";
  for (const auto& [k, v] : rep.checks.items()) {
    const bool enforced = v["enforced"].get<bool>();
    const char* status = !enforced ? "info" : v["pass"].get<bool>() ? "PASS" : "FAIL";
    out << "  " << std::left << std::setw(static_cast<int>(width)) << k << "  " << std::setw(20)
        << format_double(v["max_residual"].get<double>()) << std::setw(20) << format_double(v["tolerance"].get<double>())
        << status << "\n";
  }
  for (const auto& [k, v] : rep.results.items()) print_result(out, k, v);
  for (const auto& n : rep.notes) out << "  note: " << n.get<std::string>() << "\n";
  for (const auto& a : rep.artifacts) out << "  wrote " << a.get<std::string>() << "\n";
  char wall[32];
  std::snprintf(wall, sizeof wall, "%.3f", seconds);
  out << "result: " << (code == kExitPass ? "PASS" : "FAIL") << " (exit " << code << ", " << kind_of(code) << ")\n";
  out << "wall time: " << wall << " s\n";
}

const std::map<std::string, std::function<void(Context&)>>& commands() {
  static const std::map<std::string, std::function<void(Context&)>> m{
      {"verify", cmd_verify},
      {"derive", cmd_derive},
      {"geodesic", cmd_geodesic},
      {"flow", cmd_flow},
      {"functionals", cmd_functionals},
      {"soliton-generate", cmd_soliton_generate},
      {"soliton-check", cmd_soliton_check},
  };
  return m;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Lie d-algebroid geometry pipeline", "ldalg"};
  app.require_subcommand(1, 1);
  app.fallthrough();
  app.add_option("--spec", o.spec, "geometry spec file")->required();
  app.add_option("--json", o.json, "write the JSON report here");
  app.add_option("--csv", o.csv, "write the per-step CSV here (geodesic, flow)");
  auto* tol = app.add_option("--tol", o.tol, "override every check tolerance");
  app.add_option("--seed", o.seed, "seed for random sample points")->capture_default_str();
  app.add_option("--grid-cap", o.grid_cap, "largest accepted grid size")->capture_default_str();

  const auto sub = [&](const char* name, const char* help) { return app.add_subcommand(name, help); };
  sub("verify", "structure identities, nondegeneracy, torsion prescriptions, compatibility");
  auto* derive = sub("derive", "tensor block statistics on the [grid] nodes");
  derive->add_option("--tensors", o.tensors, "comma-separated subset of " + [] {
    std::string s;
    for (const auto& t : known_tensors()) s += (s.empty() ? "" : ",") + t;
    return s;
  }())->delimiter(',');
  auto* geod = sub("geodesic", "integrate the semispray of the [lagrangian]");
  geod->add_option("--x", o.x, "initial base point")->delimiter(',');
  geod->add_option("--y", o.y, "initial fibre point")->delimiter(',');
  auto* g_steps = geod->add_option("--steps", o.steps, "integration steps");
  auto* dtau = geod->add_option("--dtau", o.dtau, "step size");
  auto* flow = sub("flow", "evolve the sampled geometry and record functionals per step");
  auto* f_steps = flow->add_option("--steps", o.steps, "flow steps");
  auto* dchi = flow->add_option("--dchi", o.dchi, "flow step size");
  auto* f_mode = flow->add_option("--mode", o.mode, "canonical, cartan or symplectic");
  auto* f_tau = flow->add_option("--tau", o.tau, "initial tau");
  auto* func = sub("functionals", "F, W, E, S and sigma at the initial state");
  auto* u_mode = func->add_option("--mode", o.mode, "canonical, cartan or symplectic");
  auto* u_tau = func->add_option("--tau", o.tau, "tau");
  auto* gen = sub("soliton-generate", "assemble a soliton from generating data and check it");
  gen->add_option("--metric-out", o.metric_out, "write the assembled metric as a spec fragment");
  sub("soliton-check", "soliton residuals of a given geometry");
  (void)f_mode;
  (void)u_mode;

  std::vector<std::string> argv_s{"ldalg"};
  argv_s.insert(argv_s.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : argv_s) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitPass : kExitSpecError;
  }
  o.command = app.get_subcommands().front()->get_name();
  o.tol_set = tol->count() > 0;
  o.steps_set = g_steps->count() + f_steps->count() > 0;
  o.dtau_set = dtau->count() > 0;
  o.dchi_set = dchi->count() > 0;
  o.tau_set = f_tau->count() + u_tau->count() > 0;

  const auto start = std::chrono::steady_clock::now();
  Report rep;
  Json error = nullptr;
  int code = kExitPass;
  const auto fail = [&](int c, const std::string& msg, const std::string& location) {
    code = c;
    error = Json{{"kind", kind_of(c)}, {"message", msg}};
    if (!location.empty()) error["location"] = location;
  };
  std::optional<Table> csv;
  std::vector<std::pair<std::string, std::string>> files;
  try {
    const SpecFile spec = SpecFile::load(o.spec);
    Context ctx{o, spec, rep, out, std::nullopt, {}};
    commands().at(o.command)(ctx);
    csv = std::move(ctx.csv);
    files = std::move(ctx.files);
    code = rep.pass() ? kExitPass : kExitCheckFailed;
  } catch (const SpecError& e) {
    fail(kExitSpecError, e.what(), e.location());
  } catch (const DimensionError& e) {
    fail(kExitSpecError, e.what(), "");
  } catch (const MissingCoordinate& e) {
    fail(kExitSpecError, e.what(), "");
  } catch (const NumericError& e) {
    fail(kExitNumeric, e.what(), "");
  }

  try {
    if (csv && !o.csv.empty()) {
      write_file(o.csv, csv->text());
      rep.artifacts.push_back(o.csv);
    }
    for (const auto& [path, text] : files) {
      write_file(path, text);
      rep.artifacts.push_back(path);
    }
  } catch (const SpecError& e) {
    fail(kExitSpecError, e.what(), e.location());
  }

  Json j;
  j["command"] = o.command;
  j["spec"] = o.spec;
  j["flags"] = flags_json(o);
  j["checks"] = rep.checks;
  j["results"] = rep.results;
  j["artifacts"] = rep.artifacts;
  j["notes"] = rep.notes;
  if (!error.is_null()) j["error"] = error;
  j["pass"] = code == kExitPass;
  j["exit_code"] = code;
  if (!o.json.empty()) {
    try {
      write_file(o.json, dump_json(j));
    } catch (const SpecError& e) {
      err << e.what() << "\n";
      if (code == kExitPass) code = kExitSpecError;
    }
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  print_human(out, o, rep, error, code, seconds);
  if (!error.is_null()) err << "ldalg " << o.command << ": " << error["message"].get<std::string>() << "\n";
  return code;
}

}  // namespace ldalg::cli
