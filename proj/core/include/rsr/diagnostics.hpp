#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rsr/dataset.hpp"
#include "rsr/grassmann.hpp"

namespace rsr {

/// cos(gamma) = 1/sqrt(3): the basin radius at which the descent landscape
/// condition and the initialization condition ask for the same SNR, used
/// whenever a single gamma is needed.
double default_gamma();

/// Spherical d-condition number of the inliers: lambda_1 / lambda_d of the
/// spherized inlier Gram restricted to the truth subspace. 1 means the
/// inliers permeate all directions equally. Throws OffSubspaceError when an
/// inlier is off the truth, DegenerateInliersError when lambda_d ~ 0.
double kappa_d(const Matrix& inliers, const Subspace& truth);

/// The guarantee-governing statistics of a noiseless labeled dataset.
struct StabilityReport {
  double gamma = 0.0;
  int n_in = 0;
  int n_out = 0;
  int d = 0;
  double lambda_1_in = 0.0;   // top eigenvalue of the spherized inlier Gram
  double lambda_d_in = 0.0;   // d-th eigenvalue of the spherized inlier Gram
  double lambda_d_full = 0.0; // d-th eigenvalue of the full spherized Gram
  double kappa_d = 0.0;
  double out_spectral = 0.0;  // ||spherized outlier block||_2; <= sqrt(N_out)
  double lower_bound = 0.0;   // cos(gamma) lambda_d_in - sqrt(N_out) out_spectral
  double spca_condition_value = 0.0;  // sin(gamma)/sqrt(2) lambda_d_in - out_spectral^2
  double snr = 0.0;
  double snr_required_sggd = 0.0;  // sqrt(3) d kappa_d
  double snr_required_spca = 0.0;  // sqrt(2)/sin(gamma) d kappa_d
};

/// Worst-case lower bound on the stability statistic: positivity guarantees
/// the truth is the only local minimizer of the spherized energy in the
/// gamma-ball. Requires truth and noiseless inliers.
StabilityReport stability_lower_bound(const LabeledDataset& ds, double gamma);

inline StabilityReport stability_lower_bound(const LabeledDataset& ds) {
  return stability_lower_bound(ds, default_gamma());
}

/// Sampled estimate of the stability statistic itself: the subtracted
/// supremum (spectral norm of the off-truth gradient over the gamma-ball) is
/// replaced by a max over `samples` random ball points. Sampling
/// under-estimates a sup, so this is an upper bound on the true statistic
/// and always >= the worst-case lower bound.
double stability_sup_estimate(const LabeledDataset& ds, double gamma, int samples,
                              Rng& rng);

struct ThresholdRow {
  std::string method;
  std::optional<double> snr_bound;
  std::string note;  // reason when the bound is unavailable
};

struct ThresholdInputs {
  int d = 1;
  double kappa = 1.0;
  double gamma = 0.0;  // 0 = default_gamma()
  std::optional<double> mu;             // inlier incoherence (OP, TORP)
  std::optional<double> rlg_epsilon;    // outlier fraction (RLG)
  std::optional<double> ransac_c;       // user constant in the c*d bound
};

/// Evaluates the published adversarial SNR bounds side by side. Rows whose
/// inputs are missing carry a note instead of a value.
std::vector<ThresholdRow> threshold_table(const ThresholdInputs& in);

enum class SampleRegime { small, medium, large };

/// SNR thresholds for spherized descent under the Haystack model
/// (Gaussian inliers on the subspace, Gaussian ambient outliers), by sample
/// regime: N = O(D) -> max(8 sqrt(2) d / sqrt(D), 2d/D);
/// N = O(d (D-d)^2 log D) -> max(5 sqrt(2) d / sqrt(D (D-d)), 2d/D);
/// largest regime -> any fixed positive SNR (returns 0).
double haystack_bound(int D, int d, SampleRegime regime);

/// Checks the linear-convergence condition: stability lower bound (lhs)
/// against 8x the largest point count of any non-truth candidate subspace in
/// the gamma-ball (rhs). The rhs is exact (subset enumeration) for N <= 25,
/// else the general-position surrogate N_out + d - 1 is used and `exact` is
/// false. snr_required is the closed-form sufficient SNR
/// (7 + 8 (d-1)/N_out) d kappa / cos(gamma).
struct LinearConvergenceReport {
  double lhs = 0.0;
  double rhs = 0.0;
  int max_nontruth_count = 0;
  bool exact = false;
  bool satisfied = false;
  double snr_required = 0.0;
};

LinearConvergenceReport linear_convergence_bound(const LabeledDataset& ds,
                                                 double gamma);

}  // namespace rsr
