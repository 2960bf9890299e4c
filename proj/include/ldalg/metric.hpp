#pragma once

#include <vector>

#include "ldalg/algebroid.hpp"

namespace ldalg {

// Block-diagonal metric in N-adapted frames: h-block on the frames delta_a
// and v-block on V_A, both m x m and stored symmetric.
class DMetric {
 public:
  DMetric() = default;
  explicit DMetric(int m);
  static DMetric identity(int m);

  int m() const { return m_; }
  const Expr& h(int a, int b) const { return h_[a * m_ + b]; }
  const Expr& v(int A, int B) const { return v_[A * m_ + B]; }
  void set_h(int a, int b, Expr e);
  void set_v(int A, int B, Expr e);
  const std::vector<Expr>& h_block() const { return h_; }
  const std::vector<Expr>& v_block() const { return v_; }

  // Signature tags per frame axis (2m entries), informational.
  std::vector<int> eps;

  // Smallest |det| of either block over the points; throws DegeneracyError
  // naming the point when it falls below threshold.
  double check_nondegenerate(const PointList& points, double threshold = 1e-12) const;

 private:
  int m_ = 0;
  std::vector<Expr> h_, v_;
};

}  // namespace ldalg
