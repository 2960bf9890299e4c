#include "ldalg/metric.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <sstream>

namespace ldalg {

DMetric::DMetric(int m) : eps(2 * m, 1), m_(m), h_(m * m), v_(m * m) {}

DMetric DMetric::identity(int m) {
  DMetric g(m);
  for (int a = 0; a < m; ++a) {
    g.set_h(a, a, Expr::constant(1.0));
    g.set_v(a, a, Expr::constant(1.0));
  }
  return g;
}

void DMetric::set_h(int a, int b, Expr e) {
  h_.at(b * m_ + a) = e;
  h_.at(a * m_ + b) = std::move(e);
}

void DMetric::set_v(int A, int B, Expr e) {
  v_.at(B * m_ + A) = e;
  v_.at(A * m_ + B) = std::move(e);
}

double DMetric::check_nondegenerate(const PointList& points, double threshold) const {
  double smallest = INFINITY;
  for (const auto& p : points) {
    for (const auto* block : {&h_, &v_}) {
      Eigen::MatrixXd M(m_, m_);
      for (int i = 0; i < m_; ++i)
        for (int j = 0; j < m_; ++j) M(i, j) = eval((*block)[i * m_ + j], p);
      const double det = std::fabs(M.determinant());
      if (!(det > threshold)) {
        std::ostringstream os;
        os << "degenerate " << (block == &h_ ? "h" : "v") << "-block (|det| = " << det << ") at (";
        for (std::size_t k = 0; k < p.size(); ++k) os << (k ? ", " : "") << p[k];
        os << ")";
        throw DegeneracyError(os.str());
      }
      smallest = std::min(smallest, det);
    }
  }
  return smallest;
}

}  // namespace ldalg
