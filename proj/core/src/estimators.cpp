#include "rsr/estimators.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace rsr {

namespace {

constexpr double kAngleSlack = 1e-10;  // absorbs SVD roundoff at tau = 0

void canonicalize_column_signs(Matrix& b) {
  for (Eigen::Index j = 0; j < b.cols(); ++j) {
    Eigen::Index imax = 0;
    b.col(j).cwiseAbs().maxCoeff(&imax);
    if (b(imax, j) < 0.0) b.col(j) = -b.col(j);
  }
}

void check_no_zero_columns(const Matrix& points) {
  for (Eigen::Index j = 0; j < points.cols(); ++j) {
    if (points.col(j).norm() == 0.0) throw ZeroColumnError(static_cast<int>(j));
  }
}

double spectral_norm(const Matrix& m) {
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
}

}  // namespace

void SggdConfig::validate() const {
  if (max_iter < 1) throw DimensionError("sggd: max_iter must be >= 1");
  if (!(s0 > 0.0)) throw DimensionError("sggd: s0 must be > 0");
  if (!(shrink_factor > 0.0 && shrink_factor < 1.0))
    throw DimensionError("sggd: shrink_factor must lie in (0, 1)");
  if (patience < 1) throw DimensionError("sggd: patience must be >= 1");
  if (subgradient_eps < 0.0) throw DimensionError("sggd: subgradient_eps must be >= 0");
  if (converge_tol < 0.0) throw DimensionError("sggd: converge_tol must be >= 0");
}

void RansacConfig::validate(int n_points) const {
  if (tau < 0.0) throw DimensionError("ransac: tau must be >= 0");
  if (max_trials < 1) throw DimensionError("ransac: max_trials must be >= 1");
  if (consensus_m > n_points) throw DimensionError("ransac: m must be <= N");
}

const char* to_string(StopReason r) {
  switch (r) {
    case StopReason::consensus: return "consensus";
    case StopReason::max_iter: return "max_iter";
    case StopReason::converged: return "converged";
  }
  return "?";
}

void save_trace_csv(const std::string& path, const FitTrace& trace) {
  std::ofstream f(path);
  if (!f) throw Error("cannot open " + path + " for writing");
  f << "iter,energy,theta1,step,gradnorm\n";
  char buf[256];
  for (const auto& r : trace.records) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g\n", r.iter,
                  r.energy, r.theta1, r.step, r.grad_norm);
    f << buf;
  }
}

SpcaResult spca(const Matrix& points, int d) {
  const Eigen::Index n = points.cols();
  const Eigen::Index D = points.rows();
  if (d < 1 || d > D) throw DimensionError("spca: need 1 <= d <= D");
  if (n < d) throw DimensionError("spca: need at least d points");
  check_no_zero_columns(points);

  Matrix cov = Matrix::Zero(D, D);
  for (Eigen::Index j = 0; j < n; ++j) {
    const Vector x = points.col(j) / points.col(j).norm();
    cov.selfadjointView<Eigen::Lower>().rankUpdate(x, 1.0);
  }
  cov = cov.selfadjointView<Eigen::Lower>();
  cov /= static_cast<double>(n - 1);

  Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
  if (eig.info() != Eigen::Success) throw Error("spca: eigendecomposition failed");

  SpcaResult out{Subspace(Matrix::Identity(D, d)), Vector(D), 0.0, false};
  // Eigen sorts ascending; report descending.
  for (Eigen::Index i = 0; i < D; ++i) out.eigenvalues(i) = eig.eigenvalues()(D - 1 - i);
  Matrix basis(D, d);
  for (int j = 0; j < d; ++j) basis.col(j) = eig.eigenvectors().col(D - 1 - j);
  canonicalize_column_signs(basis);
  out.subspace = Subspace(std::move(basis));
  out.eigen_gap = (d < D) ? out.eigenvalues(d - 1) - out.eigenvalues(d)
                          : out.eigenvalues(d - 1);
  out.gap_warning = out.eigen_gap <= 1e-12;
  return out;
}

double lad_energy(const Matrix& points, const Subspace& s) {
  check_no_zero_columns(points);
  const Matrix& b = s.basis();
  const Matrix proj = b * (b.transpose() * points);
  double e = 0.0;
  for (Eigen::Index j = 0; j < points.cols(); ++j) {
    e += (points.col(j) - proj.col(j)).norm() / points.col(j).norm();
  }
  return e;
}

TangentDirection lad_gradient(const Matrix& points, const Subspace& s,
                              double subgradient_eps) {
  check_no_zero_columns(points);
  const Matrix& b = s.basis();
  const Matrix coeff = b.transpose() * points;  // d x N
  Matrix g = Matrix::Zero(b.rows(), b.cols());
  for (Eigen::Index j = 0; j < points.cols(); ++j) {
    const Vector q = points.col(j) - b * coeff.col(j);
    const double qn = q.norm();
    const double xn = points.col(j).norm();
    if (qn <= subgradient_eps * xn) continue;
    g.noalias() -= (q / (qn * xn)) * coeff.col(j).transpose();
  }
  // Remove the roundoff-level normal component so tangency holds exactly
  // enough for the geodesic step.
  g -= b * (b.transpose() * g);
  return TangentDirection(s, std::move(g));
}

FitResult sggd(const Matrix& points, int d, const Subspace& init,
               const SggdConfig& cfg, const Subspace* truth_for_trace) {
  cfg.validate();
  if (init.ambient_dim() != points.rows() || init.dim() != d) {
    throw DimensionMismatchError("sggd: init has wrong dimensions");
  }
  const Matrix sph = spherize(points);

  auto theta_vs_truth = [&](const Subspace& s) {
    return truth_for_trace ? largest_principal_angle(s, *truth_for_trace)
                           : std::numeric_limits<double>::quiet_NaN();
  };

  Subspace current = init;
  double best_energy = lad_energy(sph, current);
  Subspace best = current;

  FitTrace trace;
  trace.records.push_back({0, best_energy, theta_vs_truth(current),
                           std::numeric_limits<double>::quiet_NaN(),
                           std::numeric_limits<double>::quiet_NaN(), -1});
  trace.reason = StopReason::max_iter;

  double piecewise_step = cfg.s0;
  // Iterations in the current step phase at which the energy failed to
  // decrease. Counted cumulatively, not consecutively: near the minimizer
  // the subgradient iterates oscillate and still improve the energy every
  // few steps by chance, which would keep a consecutive counter from ever
  // reaching `patience`.
  int stalled = 0;
  double prev_energy = best_energy;

  for (int k = 1; k <= cfg.max_iter; ++k) {
    TangentDirection grad = lad_gradient(sph, current, cfg.subgradient_eps);
    const double gnorm = grad.spectral_norm();
    if (gnorm == 0.0) {
      trace.reason = StopReason::converged;
      break;
    }
    const double step = (cfg.schedule == StepSchedule::sqrt_decay)
                            ? cfg.s0 / std::sqrt(static_cast<double>(k))
                            : piecewise_step;
    grad.direction *= -1.0 / gnorm;
    Subspace next = geodesic_step(current, grad, step);
    const double movement = largest_principal_angle(current, next);
    const double energy = lad_energy(sph, next);
    if (!std::isfinite(energy)) throw NonFiniteEnergyError(k);
    trace.records.push_back({k, energy, theta_vs_truth(next), step, gnorm, -1});

    if (energy < best_energy) {
      best_energy = energy;
      best = next;
    }
    if (cfg.schedule == StepSchedule::piecewise) {
      if (energy >= prev_energy) ++stalled;
      if (stalled >= cfg.patience) {
        piecewise_step *= cfg.shrink_factor;
        stalled = 0;
      }
    }
    prev_energy = energy;
    current = std::move(next);
    if (movement < cfg.converge_tol) {
      trace.reason = StopReason::converged;
      break;
    }
  }
  return FitResult{std::move(best), std::move(trace)};
}

namespace {

// Draws indices without replacement until the drawn points span a d-subspace.
// Incremental Gram-Schmidt with reorthogonalization tracks the rank.
std::vector<int> grow_spanning_subset(const Matrix& points, int d, Rng& rng,
                                      int exclude_index = -1) {
  const int n = static_cast<int>(points.cols());
  std::vector<int> pool;
  pool.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    if (i != exclude_index) pool.push_back(i);

  std::vector<int> chosen;
  Matrix q(points.rows(), d);
  int rank = 0;
  while (rank < d) {
    if (pool.empty()) {
      throw RankDeficientDataError("sampled points cannot span a d-subspace");
    }
    const std::size_t pick = static_cast<std::size_t>(rng.below(pool.size()));
    const int idx = pool[pick];
    pool[pick] = pool.back();
    pool.pop_back();
    chosen.push_back(idx);

    Vector v = points.col(idx);
    const double vn = v.norm();
    if (vn == 0.0) continue;
    for (int pass = 0; pass < 2; ++pass) {
      v -= q.leftCols(rank) * (q.leftCols(rank).transpose() * v);
    }
    if (v.norm() > 1e-10 * vn) {
      q.col(rank) = v / v.norm();
      ++rank;
    }
  }
  return chosen;
}

// Unit directions of the chosen columns (zero columns pass through). Spans
// are scale-free; feeding raw columns of wildly different magnitudes to the
// SVD would let the relative rank cutoff swallow small-norm points.
Matrix unit_columns(const Matrix& points, const std::vector<int>& idx) {
  Matrix m(points.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) {
    const double n = points.col(idx[k]).norm();
    m.col(static_cast<Eigen::Index>(k)) =
        n > 0.0 ? (points.col(idx[k]) / n).eval() : points.col(idx[k]);
  }
  return m;
}

}  // namespace

FitResult ransac_rsr(const Matrix& points, int d, const RansacConfig& cfg,
                     const Subspace* truth_for_trace) {
  const int n = static_cast<int>(points.cols());
  cfg.validate(n);
  check_no_zero_columns(points);
  {
    Eigen::JacobiSVD<Matrix> svd(points);
    const auto& sv = svd.singularValues();
    if (sv.size() < d || sv(d - 1) <= tol::rank * sv(0)) {
      throw RankDeficientDataError("data spans fewer than d dimensions");
    }
  }
  const int m = cfg.consensus_m > 0 ? cfg.consensus_m : n / 2;
  Rng rng(cfg.seed);

  std::optional<Subspace> best;
  int best_count = -1;
  FitTrace trace;
  trace.reason = StopReason::max_iter;

  for (int trial = 1; trial <= cfg.max_trials; ++trial) {
    const std::vector<int> subset = grow_spanning_subset(points, d, rng);
    Subspace cand = orthonormalize(unit_columns(points, subset));
    int consensus = 0;
    for (int j = 0; j < n; ++j) {
      if (angle_to(cand, points.col(j)) <= cfg.tau + kAngleSlack) ++consensus;
    }
    if (consensus > best_count) {
      best_count = consensus;
      best = std::move(cand);
    }
    TraceRecord rec;
    rec.iter = trial;
    rec.energy = lad_energy(points, *best);
    rec.theta1 = truth_for_trace
                     ? largest_principal_angle(*best, *truth_for_trace)
                     : std::numeric_limits<double>::quiet_NaN();
    rec.consensus = consensus;
    trace.records.push_back(rec);
    if (best_count > m) {
      trace.reason = StopReason::consensus;
      break;
    }
  }
  return FitResult{std::move(*best), std::move(trace)};
}

AffineFitResult ransac_affine(const Matrix& points, int d, const RansacConfig& cfg,
                              const AffineSubspace* truth_for_trace) {
  const int n = static_cast<int>(points.cols());
  cfg.validate(n);
  if (n < d + 1) {
    throw RankDeficientDataError("affine fit needs at least d + 1 points");
  }
  const int m = cfg.consensus_m > 0 ? cfg.consensus_m : n / 2;
  Rng rng(cfg.seed);

  std::optional<AffineSubspace> best;
  int best_count = -1;
  FitTrace trace;
  trace.reason = StopReason::max_iter;

  for (int trial = 1; trial <= cfg.max_trials; ++trial) {
    const int y0 = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
    Matrix shifted = points.colwise() - points.col(y0);
    const std::vector<int> subset = grow_spanning_subset(shifted, d, rng, y0);
    Subspace lin = orthonormalize(unit_columns(shifted, subset));
    AffineSubspace cand = AffineSubspace::from_any_offset(std::move(lin),
                                                          points.col(y0));
    int consensus = 0;
    for (int j = 0; j < n; ++j) {
      const double slack = 1e-12 * (1.0 + (points.col(j) - cand.offset).norm());
      if (cand.distance(points.col(j)) <= cfg.tau + slack) ++consensus;
    }
    if (consensus > best_count) {
      best_count = consensus;
      best = std::move(cand);
    }
    TraceRecord rec;
    rec.iter = trial;
    if (truth_for_trace) {
      rec.theta1 = largest_principal_angle(best->linear, truth_for_trace->linear);
    }
    rec.consensus = consensus;
    trace.records.push_back(rec);
    if (best_count > m) {
      trace.reason = StopReason::consensus;
      break;
    }
  }
  AffineFitResult out{std::move(*best), std::move(trace), -1, -1,
                      std::numeric_limits<double>::quiet_NaN()};
  return out;
}

Vector geometric_median(const Matrix& points, double tol, int max_iter) {
  const Eigen::Index n = points.cols();
  if (n < 1) throw DimensionError("geometric_median: empty point list");
  if (n == 1) return points.col(0);

  auto anchor_test = [&](Eigen::Index a, Vector& out_dir, double& out_rnorm,
                         double& out_lipschitz, int& out_mult) {
    // Exact-duplicate multiplicity and the subgradient at the anchor.
    Vector r = Vector::Zero(points.rows());
    double lip = 0.0;
    int mult = 0;
    for (Eigen::Index j = 0; j < n; ++j) {
      const Vector diff = points.col(j) - points.col(a);
      const double dn = diff.norm();
      if (dn == 0.0) {
        ++mult;
        continue;
      }
      r += diff / dn;
      lip += 1.0 / dn;
    }
    out_dir = std::move(r);
    out_rnorm = out_dir.norm();
    out_lipschitz = lip;
    out_mult = mult;
    return out_rnorm <= static_cast<double>(mult);  // optimality
  };

  Vector m = points.rowwise().mean();
  for (int it = 0; it < max_iter; ++it) {
    // Nearest anchor; land-on-anchor handling uses the exact optimality test.
    Eigen::Index nearest = 0;
    double nearest_dist = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < n; ++j) {
      const double dn = (points.col(j) - m).norm();
      if (dn < nearest_dist) {
        nearest_dist = dn;
        nearest = j;
      }
    }
    if (nearest_dist <= tol) {
      Vector dir;
      double rnorm, lip;
      int mult;
      if (anchor_test(nearest, dir, rnorm, lip, mult)) return points.col(nearest);
      // Not optimal: step off the anchor along the subgradient.
      const double t = (rnorm - mult) / lip;
      m = points.col(nearest) + (t / rnorm) * dir;
      continue;
    }
    Vector num = Vector::Zero(points.rows());
    double den = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      const double dn = (points.col(j) - m).norm();
      num += points.col(j) / dn;
      den += 1.0 / dn;
    }
    Vector next = num / den;
    const double moved = (next - m).norm();
    m = std::move(next);
    if (moved < tol) break;
  }
  return m;
}

namespace {

// Maps a symmetrized column index back to its (i, j) pair, i < j.
std::pair<int, int> pair_of_column(long long k, long long n) {
  long long i = 0;
  long long remaining = k;
  while (remaining >= n - 1 - i) {
    remaining -= n - 1 - i;
    ++i;
  }
  return {static_cast<int>(i), static_cast<int>(i + 1 + remaining)};
}

}  // namespace

AffineFitResult affine_sggd_pipeline(const Matrix& points, int d,
                                     const AffinePipelineConfig& cfg) {
  LabeledDataset ds(points,
                    std::vector<std::uint8_t>(static_cast<std::size_t>(points.cols()), 1));
  AffineFitResult out = affine_sggd_pipeline(ds, d, cfg);
  out.inlier_pairs = -1;
  out.total_pairs = -1;
  out.inlier_pair_fraction = std::numeric_limits<double>::quiet_NaN();
  return out;
}

AffineFitResult affine_sggd_pipeline(const LabeledDataset& ds, int d,
                                     const AffinePipelineConfig& cfg) {
  const Matrix& x = ds.points();
  const long long n = x.cols();
  const Matrix sym = symmetrize(x);
  Matrix sym_sph;
  try {
    sym_sph = spherize(sym);
  } catch (const ZeroColumnError& e) {
    const auto [i, j] = pair_of_column(e.column, n);
    throw ZeroColumnError(e.column, "points " + std::to_string(i) + " and " +
                                        std::to_string(j) + " are identical");
  }

  const Subspace init = spca(sym_sph, d).subspace;
  const Subspace* truth_lin = ds.truth() ? &*ds.truth() : nullptr;
  FitResult lin_fit = sggd(sym_sph, d, init, cfg.sggd, truth_lin);
  const Subspace& lhat = lin_fit.estimate;

  // Project the original data onto the complement; noiseless inliers all
  // collapse to the minimal-norm offset there.
  Matrix projected(x.rows(), x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j)
    projected.col(j) = residual(lhat, x.col(j));
  Vector offset = geometric_median(projected, cfg.median_tol, cfg.median_max_iter);
  offset -= lhat.basis() * (lhat.basis().transpose() * offset);

  AffineFitResult out{AffineSubspace(lhat, std::move(offset)),
                      std::move(lin_fit.trace), -1, -1,
                      std::numeric_limits<double>::quiet_NaN()};
  const long long n_in = ds.n_inliers();
  out.inlier_pairs = n_in * (n_in - 1) / 2;
  out.total_pairs = n * (n - 1) / 2;
  out.inlier_pair_fraction =
      static_cast<double>(out.inlier_pairs) / static_cast<double>(out.total_pairs);
  return out;
}

}  // namespace rsr
