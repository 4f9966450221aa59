#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace roledyn {

struct NmfOptions {
  std::size_t max_iters = 200;
  double tol = 1e-4;  // stop when the relative objective decrease drops below this
  std::uint64_t seed = 1;
  /// Multiplicative steps per factor per iteration, reusing the Gram
  /// products; values above 1 give the accelerated variant.
  std::size_t inner_iters = 1;
  /// Lower bound on factor entries after each step. A tiny positive value
  /// keeps entries from locking at (denormal) zero.
  double entry_floor = 0.0;
};

struct NmfResult {
  Eigen::MatrixXd G;  // rows × rank
  Eigen::MatrixXd F;  // rank × cols
  /// Objective after initialisation followed by one entry per iteration.
  std::vector<double> objective;
  std::size_t iterations = 0;
  bool converged = false;

  double final_objective() const { return objective.back(); }
};

/// ½‖V − GF‖²_F.
double nmf_objective(const Eigen::MatrixXd& V, const Eigen::MatrixXd& G, const Eigen::MatrixXd& F);

/// Lee-Seung multiplicative updates on the Frobenius objective from a seeded
/// uniform (0,1] start. The objective is non-increasing across iterations.
/// Requires V >= 0 and 1 <= rank < min(rows, cols).
NmfResult nmf(const Eigen::MatrixXd& V, std::size_t rank, const NmfOptions& options = {});

/// Deterministic, platform-independent uniform draws in (0, 1].
class UnitRng {
 public:
  explicit UnitRng(std::uint64_t seed) : state_(seed) {}
  double next();
  std::uint64_t next_u64();

 private:
  std::uint64_t state_;
};

/// Mixes a base seed with stream indices (splitmix64 finaliser).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0);

}  // namespace roledyn
