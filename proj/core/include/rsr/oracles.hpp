#pragma once

#include "rsr/dataset.hpp"
#include "rsr/grassmann.hpp"

namespace rsr {

/// Hard size guard for the exact subset-enumeration computations.
inline constexpr int kBruteForceGuard = 25;
inline constexpr int kDirectionalGuard = 30;
inline constexpr int kCoMaximizerCap = 64;

enum class L0Status { unique, tie, degenerate };

/// Result of the exact most-significant-subspace search: the d-subspace
/// containing the maximum number of points, the count, and whether the
/// maximizer is unique. status == degenerate means a rank-deficient span
/// attains the maximum, so infinitely many d-subspaces do.
struct L0Result {
  Subspace best;
  int best_count = 0;
  L0Status status = L0Status::unique;
  std::vector<Subspace> co_maximizers;  // distinct maximizers, capped
  bool truncated = false;               // co-maximizer cap was hit
};

/// Exact brute-force search over all subspaces spanned by point subsets.
/// Any optimal subspace, restricted to the points it contains, is spanned by
/// at most d of them, so enumerating spans of independent subsets of size
/// <= d finds the global maximum. Duplicate directions are collapsed first
/// (counts keep multiset multiplicity). Guarded to N <= kBruteForceGuard.
L0Result l0_bruteforce(const Matrix& points, int d);

/// Exact minimum over unit directions v in the truth subspace of the number
/// of points with nonzero projection on v. Equals N_in - M where M is the
/// maximum number of inliers in any proper subspace of the truth spanned by
/// inliers (dimension <= d-1). Inliers must lie on the truth subspace.
int directional_l0_min(const Matrix& inliers, const Subspace& truth);

enum class WellDefined { well_defined, tie, beaten, degenerate };

const char* to_string(WellDefined w);
const char* to_string(L0Status s);

/// Decides whether the recovery problem is well posed for this dataset:
/// the truth must be the unique maximizer both over the full data and over
/// the inliers alone. "beaten" means some other subspace strictly wins on
/// the full data; inliers spanning fewer than d dimensions give "degenerate".
WellDefined well_defined_check(const LabeledDataset& ds, int d);

/// The SNR threshold formulas governing well-posedness, evaluated on a
/// dataset. general_position_bound = (N+d-1)/(N-d+1) applies to inliers in
/// general position; directional_bound = N_in / directional_l0_min is the
/// sharper data-dependent version; hardness_bound = d/(D-d) is the SNR
/// beyond which the worst-case problem is hard for polynomial algorithms.
struct SnrThresholds {
  double snr = 0.0;
  double general_position_bound = 0.0;
  double directional_bound = 0.0;
  bool directional_available = false;
  bool directional_ill_posed = false;  // directional minimum was 0
  double hardness_bound = 0.0;
};

/// d defaults to the truth subspace dimension when present.
SnrThresholds snr_and_thresholds(const LabeledDataset& ds, int d_override = 0);

}  // namespace rsr
