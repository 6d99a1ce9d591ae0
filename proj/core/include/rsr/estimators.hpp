#pragma once

#include <cstdint>
#include <limits>

#include "rsr/dataset.hpp"
#include "rsr/grassmann.hpp"

namespace rsr {

enum class StepSchedule {
  sqrt_decay,  // step_k = s0 / sqrt(k)
  piecewise    // constant step, shrunk after `patience` stalled iterations
};

struct SggdConfig {
  int max_iter = 500;
  StepSchedule schedule = StepSchedule::piecewise;
  double s0 = 0.1;             // initial arclength, radians
  double shrink_factor = 0.5;  // piecewise only
  int patience = 10;           // piecewise only
  double converge_tol = 1e-9;  // stop when the iterate moves less than this
  double subgradient_eps = 1e-12;  // drop terms with ||Q x|| <= eps * ||x||

  void validate() const;
};

struct RansacConfig {
  double tau = 0.0;     // consensus tolerance: angle (linear) or distance (affine)
  int consensus_m = 0;  // early-return when best count exceeds m; 0 = auto N/2
  int max_trials = 1000;
  std::uint64_t seed = 0;

  void validate(int n_points) const;
};

enum class StopReason { consensus, max_iter, converged };

const char* to_string(StopReason r);

/// One row per iteration (gradient step or RANSAC trial). Fields that do not
/// apply hold NaN / -1.
struct TraceRecord {
  int iter = 0;
  double energy = std::numeric_limits<double>::quiet_NaN();
  double theta1 = std::numeric_limits<double>::quiet_NaN();  // vs truth, if known
  double step = std::numeric_limits<double>::quiet_NaN();
  double grad_norm = std::numeric_limits<double>::quiet_NaN();
  int consensus = -1;
};

struct FitTrace {
  std::vector<TraceRecord> records;
  StopReason reason = StopReason::max_iter;

  int iterations() const {
    return records.empty() ? 0 : records.back().iter;
  }
};

/// Writes a trace as CSV with the fixed columns iter,energy,theta1,step,gradnorm.
void save_trace_csv(const std::string& path, const FitTrace& trace);

struct SpcaResult {
  Subspace subspace;
  Vector eigenvalues;  // all D eigenvalues of the spherized covariance, descending
  double eigen_gap = 0.0;  // lambda_d - lambda_{d+1}
  bool gap_warning = false;
};

/// Top-d eigenspace of the spherized sample covariance
/// (1/(N-1)) sum x_i x_i^T / ||x_i||^2. Fast, robust to outlier magnitude,
/// no exact recovery; used to initialize the descent.
SpcaResult spca(const Matrix& points, int d);

/// F(S) = sum_i ||Q_S x_i|| / ||x_i||, the sum of sines of point-to-subspace
/// angles.
double lad_energy(const Matrix& points, const Subspace& s);

/// Grassmannian (sub)gradient of lad_energy at s. Terms with
/// ||Q_S x|| <= subgradient_eps * ||x|| are dropped (the energy is nonsmooth
/// on the subspace itself).
TangentDirection lad_gradient(const Matrix& points, const Subspace& s,
                              double subgradient_eps = 1e-12);

struct FitResult {
  Subspace estimate;
  FitTrace trace;
};

/// Spherized geodesic gradient descent: normalized subgradient steps
/// S_{k+1} = geodesic_step(S_k, -grad/||grad||_2, step_k) on the spherized
/// data. Returns the best-energy iterate seen (fixed-size subgradient steps
/// oscillate near the minimizer, so the last iterate can be worse).
FitResult sggd(const Matrix& points, int d, const Subspace& init,
               const SggdConfig& cfg, const Subspace* truth_for_trace = nullptr);

/// Consensus search: each trial draws points uniformly without replacement
/// until they span a d-subspace, fits that span, and counts the points within
/// angle tau of it. Returns early when the best consensus exceeds m, else the
/// best subspace after max_trials.
FitResult ransac_rsr(const Matrix& points, int d, const RansacConfig& cfg,
                     const Subspace* truth_for_trace = nullptr);

struct AffineFitResult {
  AffineSubspace estimate;
  FitTrace trace;
  // Exact pair counts of the symmetrized data (pipeline only, labels needed).
  long long inlier_pairs = -1;
  long long total_pairs = -1;
  double inlier_pair_fraction = std::numeric_limits<double>::quiet_NaN();
};

/// Affine RANSAC: each trial samples an offset point y0, grows a subset Y
/// until Y - y0 spans a d-subspace, and counts points within Euclidean
/// distance tau of the affine flat. Returns the minimal-norm representative.
AffineFitResult ransac_affine(const Matrix& points, int d, const RansacConfig& cfg,
                              const AffineSubspace* truth_for_trace = nullptr);

/// Weiszfeld iteration with the exact anchor-point optimality test: when an
/// iterate lands on a data point x, x is returned iff
/// ||sum_{x_j != x} (x_j - x)/||x_j - x|| || <= multiplicity(x).
Vector geometric_median(const Matrix& points, double tol = 1e-10,
                        int max_iter = 1000);

struct AffinePipelineConfig {
  SggdConfig sggd;
  double median_tol = 1e-10;
  int median_max_iter = 1000;
};

/// Affine estimation by symmetrization: run the linear descent on all
/// pairwise differences to get the linear part, then recover the offset as
/// the geometric median of the data projected onto its orthogonal
/// complement. The median lies in that complement, so it is the minimal-norm
/// offset. Throws ZeroColumnError naming the duplicate pair when the data
/// contains exact duplicates.
AffineFitResult affine_sggd_pipeline(const Matrix& points, int d,
                                     const AffinePipelineConfig& cfg);

/// Same, with labels: fills the exact symmetrized inlier-pair counts and
/// traces theta_1 against the affine truth when present.
AffineFitResult affine_sggd_pipeline(const LabeledDataset& ds, int d,
                                     const AffinePipelineConfig& cfg);

}  // namespace rsr
