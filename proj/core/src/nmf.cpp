#include "roledyn/nmf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "roledyn/errors.hpp"

namespace roledyn {

std::uint64_t UnitRng::next_u64() {
  std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double UnitRng::next() {
  // 53 random mantissa bits in [0,1), reflected into (0,1].
  return 1.0 - static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) {
  UnitRng rng(base ^ (a * 0xD1B54A32D192ED03ULL) ^ (b * 0xABC98388FB8FAC03ULL));
  return rng.next_u64();
}

double nmf_objective(const Eigen::MatrixXd& V, const Eigen::MatrixXd& G, const Eigen::MatrixXd& F) {
  return 0.5 * (V - G * F).squaredNorm();
}

NmfResult nmf(const Eigen::MatrixXd& V, std::size_t rank, const NmfOptions& options) {
  const auto n = V.rows();
  const auto f = V.cols();
  const auto r = static_cast<Eigen::Index>(rank);
  if (rank < 1 || r >= std::min(n, f))
    throw ArgumentError("nmf rank " + std::to_string(rank) + " must satisfy 1 <= r < min(" + std::to_string(n) +
                        ", " + std::to_string(f) + ")");
  if (options.max_iters < 1) throw ArgumentError("nmf max_iters must be >= 1");
  if (!(options.tol > 0)) throw ArgumentError("nmf tol must be positive");
  if (options.inner_iters < 1) throw ArgumentError("nmf inner_iters must be >= 1");
  if (!(options.entry_floor >= 0) || !std::isfinite(options.entry_floor))
    throw ArgumentError("nmf entry_floor must be finite and non-negative");
  if (!V.allFinite()) throw ArgumentError("nmf input has non-finite entries");
  if ((V.array() < 0).any()) throw ArgumentError("nmf input has negative entries");

  NmfResult out;
  UnitRng rng(options.seed);
  out.G.resize(n, r);
  out.F.resize(r, f);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index k = 0; k < r; ++k) out.G(i, k) = rng.next();
  for (Eigen::Index k = 0; k < r; ++k)
    for (Eigen::Index j = 0; j < f; ++j) out.F(k, j) = rng.next();

  // A positive denominator floor keeps 0/0 defined; the update stays a
  // majorise-minimise step, so monotonicity is preserved.
  constexpr double floor = std::numeric_limits<double>::min();
  double prev = nmf_objective(V, out.G, out.F);
  out.objective.push_back(prev);
  // ½‖V − GF‖² = ½‖V‖² − ⟨G, VFᵀ⟩ + ½⟨GᵀG, FFᵀ⟩ reuses the update products
  // instead of forming GF. Rounding can leave a tiny negative value near an
  // exact fit, hence the clamp.
  const double half_v = 0.5 * V.squaredNorm();

  for (std::size_t it = 0; it < options.max_iters; ++it) {
    const Eigen::MatrixXd GtV = out.G.transpose() * V;
    const Eigen::MatrixXd GtG = out.G.transpose() * out.G;
    for (std::size_t s = 0; s < options.inner_iters; ++s)
      out.F = ((out.F.array() * GtV.array()) / ((GtG * out.F).array() + floor)).cwiseMax(options.entry_floor);
    const Eigen::MatrixXd VFt = V * out.F.transpose();
    const Eigen::MatrixXd FFt = out.F * out.F.transpose();
    for (std::size_t s = 0; s < options.inner_iters; ++s)
      out.G = ((out.G.array() * VFt.array()) / ((out.G * FFt).array() + floor)).cwiseMax(options.entry_floor);

    const double cur = std::max(
        0.0, half_v - (out.G.array() * VFt.array()).sum() + 0.5 * ((out.G.transpose() * out.G).array() * FFt.array()).sum());
    if (!std::isfinite(cur)) throw NumericalError("nmf objective became non-finite");
    out.objective.push_back(cur);
    out.iterations = it + 1;
    if (cur == 0.0 || (prev - cur) < options.tol * prev) {
      out.converged = true;
      break;
    }
    prev = cur;
  }
  return out;
}

}  // namespace roledyn
