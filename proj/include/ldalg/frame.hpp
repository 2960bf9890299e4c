#pragma once

#include <functional>
#include <span>
#include <vector>

#include "ldalg/jet.hpp"
#include "ldalg/metric.hpp"

namespace ldalg {

// Order-2 jets of every input field at one point.
struct GeometryJets {
  int n = 0, m = 0;
  std::vector<double> point;
  std::vector<Jet> rho;  // [i * m + a]
  std::vector<Jet> C;    // [(f * m + a) * m + b]
  std::vector<Jet> N;    // [A * m + a]
  std::vector<Jet> gh;   // [a * m + b]
  std::vector<Jet> gv;   // [A * m + B]
};

using GeometrySource = std::function<GeometryJets(std::span<const double>)>;

// Jets by forward-mode evaluation of the symbolic inputs.
GeometrySource symbolic_source(const LieAlgebroid& alg, const NConnection& N, const DMetric& g);

// Frame-level data at one point. Frame index alpha < m is delta_a, alpha >= m
// is V_A; coordinate index mu < n is x^i, mu >= n is y^A.
class FrameData {
 public:
  explicit FrameData(GeometryJets geo);

  int n() const { return n_; }
  int m() const { return m_; }
  int D() const { return 2 * m_; }
  std::span<const double> point() const { return geo_.point; }
  const GeometryJets& geometry() const { return geo_; }

  // e_alpha = E(alpha, mu) d_mu
  const Jet& E(int alpha, int mu) const { return E_[alpha * (n_ + m_) + mu]; }
  // Frame derivative; the result has one order less than f.
  Jet e(int alpha, const Jet& f) const;

  // [e_beta, e_gamma] = W(alpha, beta, gamma) e_alpha ; order 1.
  const Jet& W(int alpha, int beta, int gamma) const { return W_[(alpha * D() + beta) * D() + gamma]; }
  // Block-diagonal frame metric and inverse; order 2.
  const Jet& g(int alpha, int beta) const { return g_[alpha * D() + beta]; }
  const Jet& ginv(int alpha, int beta) const { return ginv_[alpha * D() + beta]; }
  Jet zero(int order = 2) const { return Jet::constant(n_ + m_, 0.0, order); }

 private:
  int n_, m_;
  GeometryJets geo_;
  std::vector<Jet> E_, W_, g_, ginv_;
  std::vector<bool> Ezero_;
};

// Number of frame slots per tensor of rank r.
inline int tensor_size(int D, int rank) {
  int s = 1;
  for (int k = 0; k < rank; ++k) s *= D;
  return s;
}

}  // namespace ldalg
