#include "roledyn/nnls.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "roledyn/errors.hpp"

namespace roledyn {

namespace {

Eigen::VectorXd solve_passive(const Eigen::MatrixXd& gram, const Eigen::VectorXd& atb, const std::vector<bool>& passive) {
  const auto k = gram.rows();
  std::vector<Eigen::Index> idx;
  for (Eigen::Index i = 0; i < k; ++i)
    if (passive[static_cast<std::size_t>(i)]) idx.push_back(i);
  const auto p = static_cast<Eigen::Index>(idx.size());
  Eigen::MatrixXd sub(p, p);
  Eigen::VectorXd rhs(p);
  for (Eigen::Index a = 0; a < p; ++a) {
    rhs(a) = atb(idx[a]);
    for (Eigen::Index b = 0; b < p; ++b) sub(a, b) = gram(idx[a], idx[b]);
  }
  Eigen::VectorXd z = sub.colPivHouseholderQr().solve(rhs);
  Eigen::VectorXd s = Eigen::VectorXd::Zero(k);
  for (Eigen::Index a = 0; a < p; ++a) s(idx[a]) = z(a);
  return s;
}

}  // namespace

Eigen::VectorXd nnls_gram(const Eigen::MatrixXd& gram, const Eigen::VectorXd& atb) {
  const auto k = gram.rows();
  if (gram.cols() != k || atb.size() != k) throw ArgumentError("nnls: dimension mismatch");
  Eigen::VectorXd x = Eigen::VectorXd::Zero(k);
  if (k == 0) return x;
  if (!gram.allFinite() || !atb.allFinite()) throw NumericalError("nnls: non-finite input");

  const double tol = 10.0 * std::numeric_limits<double>::epsilon() * gram.cwiseAbs().colwise().sum().maxCoeff() *
                     static_cast<double>(k) * std::max(1.0, atb.cwiseAbs().maxCoeff());
  std::vector<bool> passive(static_cast<std::size_t>(k), false);
  Eigen::VectorXd w = atb;
  const std::size_t max_iters = 30 * static_cast<std::size_t>(k) + 30;
  std::size_t iters = 0;

  while (true) {
    Eigen::Index best = -1;
    double best_w = tol;
    for (Eigen::Index i = 0; i < k; ++i)
      if (!passive[static_cast<std::size_t>(i)] && w(i) > best_w) {
        best_w = w(i);
        best = i;
      }
    if (best < 0) break;
    passive[static_cast<std::size_t>(best)] = true;

    Eigen::VectorXd s = solve_passive(gram, atb, passive);
    while (true) {
      double alpha = std::numeric_limits<double>::infinity();
      for (Eigen::Index i = 0; i < k; ++i)
        if (passive[static_cast<std::size_t>(i)] && s(i) <= 0) alpha = std::min(alpha, x(i) / (x(i) - s(i)));
      if (!std::isfinite(alpha)) break;
      if (++iters > max_iters) break;
      x += alpha * (s - x);
      const double x_tol = 1e-14 * std::max(x.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
      for (Eigen::Index i = 0; i < k; ++i)
        if (passive[static_cast<std::size_t>(i)] && x(i) <= x_tol) {
          passive[static_cast<std::size_t>(i)] = false;
          x(i) = 0;
        }
      s = solve_passive(gram, atb, passive);
    }
    x = s.cwiseMax(0.0);
    w = atb - gram * x;
    if (++iters > max_iters) break;
  }
  return x;
}

Eigen::VectorXd nnls(const Eigen::MatrixXd& A, const Eigen::VectorXd& b) {
  if (A.rows() != b.size()) throw ArgumentError("nnls: A and b disagree in rows");
  return nnls_gram(A.transpose() * A, A.transpose() * b);
}

}  // namespace roledyn
