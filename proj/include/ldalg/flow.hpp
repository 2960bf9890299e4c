#pragma once

#include <cstddef>
#include <string_view>
#include <utility>
#include <vector>

#include "ldalg/connection.hpp"
#include "ldalg/frame.hpp"
#include "ldalg/metric.hpp"

namespace ldalg {

enum class Quadrature { Midpoint, Trapezoid };

// Tensor-product grid over all n + m coordinates. Midpoint nodes sit at cell
// centres, trapezoid nodes include both endpoints.
struct GridSpec {
  std::vector<std::pair<double, double>> box;
  std::vector<int> resolution;
  Quadrature rule = Quadrature::Midpoint;
  std::size_t cap = 1000000;

  // Throws SpecError unless lo < hi, resolution >= 2 and the total fits the cap.
  void validate() const;
  int dim() const { return static_cast<int>(box.size()); }
  std::size_t total() const;
  double spacing(int axis) const;
  double coord(int axis, int k) const;
  double weight(int axis, int k) const;
  // Multi-index of a flat node index; axis 0 varies slowest.
  std::vector<int> multi_index(std::size_t node) const;
  std::size_t flat_index(const std::vector<int>& idx) const;
  std::vector<double> point(std::size_t node) const;
  double cell_weight(std::size_t node) const;
};

enum class FlowMode { Cartan, Canonical, Symplectic };
enum class ConnMode { Cartan, Canonical };
std::string_view flow_mode_name(FlowMode m);

// Grid-sampled d-metric blocks, N-coefficients and scaling function f.
// Per-node arrays are m x m row-major; theta (2m x 2m) is present only for
// equal-block states.
struct FlowState {
  LieAlgebroid alg;
  GridSpec grid;
  int n = 0, m = 0;
  double chi = 0.0;
  std::vector<double> gh, gv, N, f, theta;
  // Diagnostics of the step that produced this state.
  double dchi_used = 0.0;
  double constraint_residual = 0.0;  // max |R_aA|, |R_Aa|
  double min_det = 0.0;              // min |det| of either block

  std::size_t nodes() const { return grid.total(); }
  bool has_theta() const { return !theta.empty(); }
};

FlowState sample_state(const LieAlgebroid& alg, const DMetric& g, const NConnection& N, const Expr& f,
                       const GridSpec& grid);

// Order-2 jets of every field at a node from the degree-2 tensor-product
// stencil; axes with two nodes get a linear fit.
GeometryJets node_jets(const FlowState& s, std::size_t node);
Jet node_f_jet(const FlowState& s, std::size_t node);
// Same fit for a scalar field sampled on any grid; the jet has grid.dim() variables.
Jet grid_jet(const GridSpec& grid, const std::vector<double>& values, std::size_t node);

// Stability bound 0.1 * (min eigenvalue of blocks) / (max |Ricci|) over the grid.
double stability_bound(const FlowState& s, FlowMode mode);

// Explicit Euler step. Canonical: dg = -2 Ric (blocks), cartan: dg = -(Ric + Zic)
// of the normal d-connection with the h-update mirrored to v, symplectic:
// dtheta = -Ric_[alpha beta]. f follows df = -Lap f + |Df|^2 - sR in every mode.
// Throws SpecError above the stability bound; a step losing nondegeneracy is
// retried once at half size, then DegeneracyError. The f equation is
// backward parabolic, so grid-scale modes of f grow like exp(4 d dchi / h^2)
// per step; evolve_f = false holds f fixed when only the metric is wanted.
FlowState flow_step(const FlowState& s, double dchi, FlowMode mode, bool evolve_f = true);

struct FunctionalOptions {
  ConnMode conn = ConnMode::Canonical;
  // false: tau (sR + |hDf| + |vDf|)^2 ; true: tau (sR + |hDf|^2 + |vDf|^2).
  bool squared_gradient = false;
};

struct FunctionalReport {
  double value = 0.0;
  double normalization = 0.0;  // integral of the measure after the shift
  double shift = 0.0;          // additive shift applied to f
  double curvature_part = 0.0;
  double gradient_part = 0.0;
};

// Integral of (sR + |hDf|^2 + |vDf|^2) e^-f dv.
FunctionalReport perelman_F(const FlowState& s, ConnMode conn = ConnMode::Canonical);
// f is shifted so that the measure (4 pi tau)^-m e^-f dv integrates to 1.
FunctionalReport perelman_W(const FlowState& s, double tau, FunctionalOptions opt = {});

struct Thermodynamics {
  double energy = 0.0, entropy = 0.0, sigma = 0.0;
  double normalization = 0.0;
};
// E = -tau^2 int (sR + |Df|^2 - m/tau) mu, S = -int [tau (sR + |Df|^2) + f - 2m] mu,
// sigma = 2 tau^4 int |Ric + DDf - g/(2 tau)|^2 mu with the same f shift as W.
Thermodynamics thermodynamics(const FlowState& s, double tau, ConnMode conn = ConnMode::Canonical);

// Per-node inverse vielbein E (2m x 2m, block lower-triangular per block)
// with g^-1 = E eta E^T.
struct VielbeinField {
  int m = 0;
  std::vector<double> E;    // [node * D * D + row * D + col]
  std::vector<double> eta;  // D signs
};
VielbeinField init_vielbein(const FlowState& s);
// E <- E + dtau g^-1 Ric E with the block Ricci of the canonical d-connection.
VielbeinField frame_flow_step(const FlowState& s, const VielbeinField& e, double dtau);
// Block metric (gh, gv per node) reconstructed as (E eta E^T)^-1.
std::pair<std::vector<double>, std::vector<double>> vielbein_metric(const VielbeinField& e);

}  // namespace ldalg
