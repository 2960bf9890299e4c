#pragma once

#include <numbers>
#include <string>
#include <vector>

#include "ldalg/flow.hpp"

namespace testutil {

struct FlowSetup {
  int n = 2, m = 2;
  std::vector<std::string> gh, gv, N;  // m x m row-major; empty means identity / zero
  std::string f = "0";
  std::vector<std::pair<double, double>> box;
  std::vector<int> res;
  ldalg::Quadrature rule = ldalg::Quadrature::Midpoint;
};

inline ldalg::FlowState make_state(const FlowSetup& s) {
  using namespace ldalg;
  const auto c = Coords::standard(s.n, s.m);
  LieAlgebroid alg = LieAlgebroid::trivial(s.n);
  DMetric g = DMetric::identity(s.m);
  NConnection N(s.n, s.m);
  for (int a = 0; a < s.m; ++a)
    for (int b = a; b < s.m; ++b) {
      if (!s.gh.empty()) g.set_h(a, b, parse(s.gh[a * s.m + b], c));
      if (!s.gv.empty()) g.set_v(a, b, parse(s.gv[a * s.m + b], c));
    }
  for (int k = 0; k < s.m * s.m && !s.N.empty(); ++k) N.coeffs[k] = parse(s.N[k], c);
  GridSpec grid{s.box, s.res, s.rule};
  return sample_state(alg, g, N, parse(s.f, c), grid);
}

// Round unit sphere in (x1, x2) as the h-block; flat v-block.
inline FlowSetup sphere_setup(int res1 = 64) {
  FlowSetup s;
  s.gh = {"1", "0", "0", "sin(x1)^2"};
  s.box = {{0.6, std::numbers::pi - 0.6}, {0, 1}, {0, 1}, {0, 1}};
  s.res = {res1, 2, 2, 2};
  return s;
}

// Smooth, nearly flat family: conformal bump on the h-block, f a small Gaussian-like profile.
inline FlowSetup smooth_family() {
  FlowSetup s;
  s.gh = {"exp(cos(x1)/10)", "0", "0", "exp(cos(x1)/10)"};
  s.gv = {"1 + sin(x2)^2/10", "0", "0", "1"};
  s.f = "cos(x1)/5 + sin(x2)/5";
  const double L = 2 * std::numbers::pi;
  s.box = {{0, L}, {0, L}, {0, 1}, {0, 1}};
  s.res = {24, 24, 2, 2};
  return s;
}

}  // namespace testutil
