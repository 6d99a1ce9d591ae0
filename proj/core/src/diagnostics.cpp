#include "rsr/diagnostics.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>

#include "rsr/estimators.hpp"

namespace rsr {

namespace {

// Eigenvalues of the d x d restriction of the spherized Gram to the truth
// subspace, descending.
Vector restricted_gram_eigenvalues(const Matrix& inliers, const Subspace& truth) {
  for (Eigen::Index j = 0; j < inliers.cols(); ++j) {
    const double nj = inliers.col(j).norm();
    if (nj == 0.0 || residual(truth, inliers.col(j)).norm() > tol::membership * nj) {
      throw OffSubspaceError(static_cast<int>(j));
    }
  }
  const Matrix coords = truth.basis().transpose() * spherize(inliers);
  const Matrix gram = coords * coords.transpose();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(gram);
  Vector vals(truth.dim());
  for (int i = 0; i < truth.dim(); ++i)
    vals(i) = eig.eigenvalues()(truth.dim() - 1 - i);
  return vals;
}

// d-th largest eigenvalue of X~ X~^T, computed on the smaller Gram side.
double lambda_d_of_gram(const Matrix& sph, int d) {
  const Eigen::Index D = sph.rows(), n = sph.cols();
  Matrix gram;
  if (D <= n) {
    gram = sph * sph.transpose();
  } else {
    gram = sph.transpose() * sph;
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(gram);
  const Eigen::Index m = gram.rows();
  if (d > m) return 0.0;
  return std::max(0.0, eig.eigenvalues()(m - d));
}

}  // namespace

double default_gamma() { return std::acos(1.0 / std::sqrt(3.0)); }

double kappa_d(const Matrix& inliers, const Subspace& truth) {
  const Vector vals = restricted_gram_eigenvalues(inliers, truth);
  const double l1 = vals(0);
  const double ld = vals(vals.size() - 1);
  if (ld <= 1e-12 * l1) throw DegenerateInliersError();
  return l1 / ld;
}

StabilityReport stability_lower_bound(const LabeledDataset& ds, double gamma) {
  if (!ds.truth()) throw DimensionError("stability report needs a truth subspace");
  const Subspace& truth = *ds.truth();
  const Matrix inliers = ds.inlier_points();
  const Vector vals = restricted_gram_eigenvalues(inliers, truth);

  StabilityReport r;
  r.gamma = gamma;
  r.n_in = ds.n_inliers();
  r.n_out = ds.n_outliers();
  r.d = truth.dim();
  r.lambda_1_in = vals(0);
  r.lambda_d_in = vals(vals.size() - 1);
  r.lambda_d_full = lambda_d_of_gram(spherize(ds.points()), r.d);
  if (r.lambda_d_in <= 1e-12 * r.lambda_1_in) throw DegenerateInliersError();
  r.kappa_d = r.lambda_1_in / r.lambda_d_in;

  if (r.n_out > 0) {
    Eigen::JacobiSVD<Matrix> svd(spherize(ds.outlier_points()));
    r.out_spectral = svd.singularValues()(0);
  }
  r.lower_bound = std::cos(gamma) * r.lambda_d_in -
                  std::sqrt(static_cast<double>(r.n_out)) * r.out_spectral;
  r.spca_condition_value = std::sin(gamma) / std::sqrt(2.0) * r.lambda_d_in -
                           r.out_spectral * r.out_spectral;
  r.snr = ds.snr();
  r.snr_required_sggd = std::sqrt(3.0) * r.d * r.kappa_d;
  r.snr_required_spca = std::sqrt(2.0) / std::sin(gamma) * r.d * r.kappa_d;
  return r;
}

double stability_sup_estimate(const LabeledDataset& ds, double gamma, int samples,
                              Rng& rng) {
  if (!ds.truth()) throw DimensionError("stability estimate needs a truth subspace");
  const Subspace& truth = *ds.truth();
  const Matrix sph = spherize(ds.points());

  // Split by membership in the truth subspace, not by label: the permeance
  // term sums over points on the subspace, the alignment term over the rest.
  std::vector<Eigen::Index> on, off;
  for (Eigen::Index j = 0; j < sph.cols(); ++j) {
    if (residual(truth, sph.col(j)).norm() <= tol::membership) {
      on.push_back(j);
    } else {
      off.push_back(j);
    }
  }
  Matrix on_pts(sph.rows(), static_cast<Eigen::Index>(on.size()));
  for (std::size_t k = 0; k < on.size(); ++k)
    on_pts.col(static_cast<Eigen::Index>(k)) = sph.col(on[k]);
  const Matrix coords = truth.basis().transpose() * on_pts;
  const Matrix gram = coords * coords.transpose();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(gram);
  const double lambda_d = std::max(0.0, eig.eigenvalues()(0));
  const double term1 = std::cos(gamma) * lambda_d;

  if (off.empty() || samples < 1) return term1;
  Matrix off_pts(sph.rows(), static_cast<Eigen::Index>(off.size()));
  for (std::size_t k = 0; k < off.size(); ++k)
    off_pts.col(static_cast<Eigen::Index>(k)) = sph.col(off[k]);

  double worst = 0.0;
  for (int s = 0; s < samples; ++s) {
    const Subspace ball_point = random_in_ball(truth, gamma, rng);
    const TangentDirection g = lad_gradient(off_pts, ball_point);
    worst = std::max(worst, g.spectral_norm());
  }
  return term1 - worst;
}

std::vector<ThresholdRow> threshold_table(const ThresholdInputs& in) {
  const double gamma = in.gamma > 0.0 ? in.gamma : default_gamma();
  const double d = in.d;
  std::vector<ThresholdRow> rows;
  rows.push_back({"SPCA", std::sqrt(2.0) * d * in.kappa / std::sin(gamma), ""});
  if (in.mu) {
    rows.push_back({"OP", 121.0 * (*in.mu) * d / 9.0, ""});
    rows.push_back({"TORP", 128.0 * (*in.mu) * (*in.mu) * d - 1.0, ""});
  } else {
    rows.push_back({"OP", std::nullopt, "requires incoherence mu"});
    rows.push_back({"TORP", std::nullopt, "requires incoherence mu"});
  }
  rows.push_back({"RR", 2.0, ""});
  if (in.rlg_epsilon) {
    rows.push_back({"RLG", (1.0 - *in.rlg_epsilon) / *in.rlg_epsilon, ""});
  } else {
    rows.push_back({"RLG", std::nullopt, "requires outlier fraction epsilon"});
  }
  rows.push_back({"SGGD", std::sqrt(3.0) * d * in.kappa, ""});
  if (in.ransac_c) {
    rows.push_back({"RANSAC", (*in.ransac_c) * d, ""});
  } else {
    rows.push_back({"RANSAC", std::nullopt, "requires constant c"});
  }
  return rows;
}

double haystack_bound(int D, int d, SampleRegime regime) {
  if (d < 1 || D < d) throw DimensionError("haystack bound needs 1 <= d <= D");
  const double dd = d, DD = D;
  switch (regime) {
    case SampleRegime::small:
      return std::max(8.0 * std::sqrt(2.0) * dd / std::sqrt(DD), 2.0 * dd / DD);
    case SampleRegime::medium:
      if (D == d) throw DimensionError("medium regime needs D > d");
      return std::max(5.0 * std::sqrt(2.0) * dd / std::sqrt(DD * (DD - dd)),
                      2.0 * dd / DD);
    case SampleRegime::large:
      return 0.0;
  }
  return 0.0;
}

namespace {

// Largest |X ∩ L| over rank-d spans of data subsets within the gamma-ball
// around the truth, excluding the truth itself.
int max_nontruth_count_exact(const LabeledDataset& ds, double gamma) {
  const Matrix& pts = ds.points();
  const Subspace& truth = *ds.truth();
  const int d = truth.dim();

  std::vector<Vector> reps;
  for (Eigen::Index j = 0; j < pts.cols(); ++j) {
    const double n = pts.col(j).norm();
    if (n == 0.0) continue;
    Vector u = pts.col(j) / n;
    Eigen::Index imax = 0;
    u.cwiseAbs().maxCoeff(&imax);
    if (u(imax) < 0.0) u = -u;
    bool dup = false;
    for (const auto& r : reps)
      if ((r - u).cwiseAbs().maxCoeff() <= 1e-9) {
        dup = true;
        break;
      }
    if (!dup) reps.push_back(std::move(u));
  }
  const int r = static_cast<int>(reps.size());
  if (r < d) return 0;

  int best = 0;
  std::vector<int> idx(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) idx[static_cast<std::size_t>(i)] = i;
  for (;;) {
    Matrix m(pts.rows(), d);
    for (int i = 0; i < d; ++i) m.col(i) = reps[static_cast<std::size_t>(idx[i])];
    Subspace span = orthonormalize(m);
    if (span.dim() == d) {
      const double theta = largest_principal_angle(span, truth);
      if (theta < gamma && theta >= tol::subspace_eq) {
        int c = 0;
        for (Eigen::Index j = 0; j < pts.cols(); ++j) {
          const double nj = pts.col(j).norm();
          if (nj == 0.0 || residual(span, pts.col(j)).norm() <= tol::membership * nj)
            ++c;
        }
        best = std::max(best, c);
      }
    }
    int j = d - 1;
    while (j >= 0 && idx[static_cast<std::size_t>(j)] == r - d + j) --j;
    if (j < 0) break;
    ++idx[static_cast<std::size_t>(j)];
    for (int k = j + 1; k < d; ++k)
      idx[static_cast<std::size_t>(k)] = idx[static_cast<std::size_t>(k - 1)] + 1;
  }
  return best;
}

}  // namespace

LinearConvergenceReport linear_convergence_bound(const LabeledDataset& ds,
                                                 double gamma) {
  if (!ds.truth()) throw DimensionError("linear convergence check needs truth");
  const StabilityReport stab = stability_lower_bound(ds, gamma);
  LinearConvergenceReport r;
  r.lhs = stab.lower_bound;
  if (ds.size() <= 25) {
    r.max_nontruth_count = max_nontruth_count_exact(ds, gamma);
    r.exact = true;
  } else {
    r.max_nontruth_count = ds.n_outliers() + stab.d - 1;
    r.exact = false;
  }
  r.rhs = 8.0 * r.max_nontruth_count;
  r.satisfied = r.lhs > r.rhs;
  if (ds.n_outliers() > 0) {
    r.snr_required = (7.0 + 8.0 * (stab.d - 1) / ds.n_outliers()) * stab.d *
                     stab.kappa_d / std::cos(gamma);
  } else {
    r.snr_required = std::numeric_limits<double>::infinity();
  }
  return r;
}

}  // namespace rsr
