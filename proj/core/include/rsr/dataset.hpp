#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rsr/grassmann.hpp"

namespace rsr {

/// Generator provenance carried alongside a dataset so runs can be
/// reproduced from (name, params, seed).
struct DatasetMeta {
  std::string generator;
  std::map<std::string, double> params;
  std::uint64_t seed = 0;
};

enum class NoiseKind { none, gaussian_clipped, uniform_ball };

/// Uniform bound epsilon on the norm of each per-inlier perturbation.
struct NoiseSpec {
  double epsilon = 0.0;
  NoiseKind kind = NoiseKind::none;
};

/// A D x N point matrix with inlier/outlier labels and, when generated
/// synthetically, the ground-truth subspace (plus a minimal-norm offset in
/// the affine case). Immutable after construction.
class LabeledDataset {
 public:
  LabeledDataset(Matrix points, std::vector<std::uint8_t> inlier_mask,
                 std::optional<Subspace> truth = std::nullopt,
                 std::optional<Vector> truth_offset = std::nullopt,
                 DatasetMeta meta = {});

  int ambient_dim() const { return static_cast<int>(points_.rows()); }
  int size() const { return static_cast<int>(points_.cols()); }
  int n_inliers() const { return n_in_; }
  int n_outliers() const { return size() - n_in_; }

  /// N_in / N_out; +inf when there are no outliers.
  double snr() const;

  const Matrix& points() const { return points_; }
  const std::vector<std::uint8_t>& inlier_mask() const { return mask_; }
  bool is_inlier(int i) const { return mask_[static_cast<std::size_t>(i)] != 0; }

  const std::optional<Subspace>& truth() const { return truth_; }
  const std::optional<Vector>& truth_offset() const { return truth_offset_; }
  bool has_affine_truth() const { return truth_offset_.has_value(); }
  const DatasetMeta& meta() const { return meta_; }

  Matrix inlier_points() const;
  Matrix outlier_points() const;

 private:
  Matrix points_;
  std::vector<std::uint8_t> mask_;
  std::optional<Subspace> truth_;
  std::optional<Vector> truth_offset_;
  DatasetMeta meta_;
  int n_in_ = 0;
};

/// Normalizes each column to the unit sphere. Throws ZeroColumnError with
/// the offending index; callers decide whether to drop or abort.
Matrix spherize(const Matrix& x);

/// All pairwise differences x_i - x_j for i < j, in lexicographic (i, j)
/// order; exactly C(N, 2) columns. Guarded to N <= 2000 since the full
/// matrix is materialized.
Matrix symmetrize(const Matrix& x);

inline constexpr int kSymmetrizeGuard = 2000;

/// Gaussian inliers supported on a uniformly random d-subspace
/// (covariance sigma_in^2 P / d) plus ambient Gaussian outliers
/// (covariance sigma_out^2 I / D).
LabeledDataset gen_haystack(int D, int d, int n_in, int n_out, double sigma_in,
                            double sigma_out, Rng& rng);

/// Inlier-only dataset drawn uniformly from L intersect S^{D-1}. For
/// n_in <= 30 every d-subset is verified to span L and the set is resampled
/// on failure, so general position holds by construction, not just almost
/// surely.
LabeledDataset gen_general_position(const Subspace& truth, int n_in, Rng& rng);

/// n_out copies of magnitude * direction / ||direction||: the worst-case
/// outlier block where everything concentrates on one line.
Matrix gen_adversarial_line(const Vector& direction, int n_out, double magnitude);

/// Appends an outlier block to an inlier-only dataset, keeping the truth.
LabeledDataset with_outliers(const LabeledDataset& inliers, const Matrix& outliers);

/// Deterministic fixture: n_in/d copies of each coordinate axis e_1..e_d,
/// with n_out outliers at e_{d+1}. Requires d | n_in and D >= d + 1.
LabeledDataset fixture_axis_equipartition(int d, int D, int n_in, int n_out);

/// Deterministic fixture: n_in - (d-1) copies of e_1 and one
/// sqrt(n_in - (d-1)) * e_j for j = 2..d, with n_out outliers at e_{d+1}.
/// Requires d > 1, n_in > d - 1, D >= d + 1.
LabeledDataset fixture_axis_spike(int d, int D, int n_in, int n_out);

/// Perturbs only the inliers; every perturbation has norm <= spec.epsilon.
/// epsilon = 0 (or kind none) returns the dataset bit-identically.
LabeledDataset add_noise(const LabeledDataset& ds, const NoiseSpec& spec, Rng& rng);

/// Plain-text dataset file: header "D N d_truth", one line per point,
/// a 0/1 inlier mask line, then d_truth basis-column lines when a truth
/// subspace is present, then one extra offset line for affine truth.
/// Values are written with 17 significant digits so round-trips are exact.
void save_dataset(const std::string& path, const LabeledDataset& ds);
LabeledDataset load_dataset(const std::string& path);

}  // namespace rsr
