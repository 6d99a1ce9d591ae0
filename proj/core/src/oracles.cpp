#include "rsr/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace rsr {

namespace {

// Representative directions after collapsing points that are parallel up to
// sign and scale. Spans are unchanged; the combinatorial space shrinks.
std::vector<Vector> dedup_directions(const Matrix& points) {
  std::vector<Vector> reps;
  for (Eigen::Index j = 0; j < points.cols(); ++j) {
    const double n = points.col(j).norm();
    if (n == 0.0) continue;  // zero points lie in every subspace
    Vector u = points.col(j) / n;
    Eigen::Index imax = 0;
    u.cwiseAbs().maxCoeff(&imax);
    if (u(imax) < 0.0) u = -u;
    bool found = false;
    for (const auto& r : reps) {
      if ((r - u).cwiseAbs().maxCoeff() <= 1e-9) {
        found = true;
        break;
      }
    }
    if (!found) reps.push_back(std::move(u));
  }
  return reps;
}

int count_members(const Matrix& points, const Subspace& s) {
  int c = 0;
  for (Eigen::Index j = 0; j < points.cols(); ++j) {
    const double n = points.col(j).norm();
    if (n == 0.0) {
      ++c;  // the zero vector lies in every subspace
      continue;
    }
    if (residual(s, points.col(j)).norm() <= tol::membership * n) ++c;
  }
  return c;
}

// Orthonormal span of the chosen representatives; empty optional when the
// subset is linearly dependent (its span was already enumerated at a
// smaller size).
std::optional<Subspace> independent_span(const std::vector<Vector>& reps,
                                         const std::vector<int>& idx) {
  Matrix m(reps.front().size(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k)
    m.col(static_cast<Eigen::Index>(k)) = reps[static_cast<std::size_t>(idx[k])];
  Subspace s = orthonormalize(m);
  if (s.dim() != static_cast<int>(idx.size())) return std::nullopt;
  return s;
}

// Visits all subsets of {0..n-1} of the given size in lexicographic order.
template <typename F>
void for_each_subset(int n, int size, F&& visit) {
  if (size > n) return;
  std::vector<int> idx(static_cast<std::size_t>(size));
  for (int i = 0; i < size; ++i) idx[static_cast<std::size_t>(i)] = i;
  for (;;) {
    visit(idx);
    int j = size - 1;
    while (j >= 0 && idx[static_cast<std::size_t>(j)] == n - size + j) --j;
    if (j < 0) break;
    ++idx[static_cast<std::size_t>(j)];
    for (int k = j + 1; k < size; ++k)
      idx[static_cast<std::size_t>(k)] = idx[static_cast<std::size_t>(k - 1)] + 1;
  }
}

int numerical_rank(const Matrix& m) {
  Eigen::JacobiSVD<Matrix> svd(m);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) == 0.0) return 0;
  int r = 0;
  while (r < sv.size() && sv(r) > tol::rank * sv(0)) ++r;
  return r;
}

// Completes a rank-deficient span to dimension d with a fixed-seed generic
// extension, so the completion almost surely picks up no extra data points.
Subspace complete_to_dim(const Subspace& s, int d) {
  if (s.dim() >= d) return s;
  const int D = s.ambient_dim();
  for (std::uint64_t attempt = 0;; ++attempt) {
    Rng rng(0x5EEDAC0FFEEULL + attempt);
    Matrix m(D, d);
    m.leftCols(s.dim()) = s.basis();
    for (int j = s.dim(); j < d; ++j) {
      Vector g(D);
      for (int i = 0; i < D; ++i) g(i) = rng.normal();
      m.col(j) = g;
    }
    Subspace full = orthonormalize(m);
    if (full.dim() == d) return full;
  }
}

}  // namespace

const char* to_string(WellDefined w) {
  switch (w) {
    case WellDefined::well_defined: return "well_defined";
    case WellDefined::tie: return "tie";
    case WellDefined::beaten: return "beaten";
    case WellDefined::degenerate: return "degenerate";
  }
  return "?";
}

const char* to_string(L0Status s) {
  switch (s) {
    case L0Status::unique: return "unique";
    case L0Status::tie: return "tie";
    case L0Status::degenerate: return "degenerate";
  }
  return "?";
}

L0Result l0_bruteforce(const Matrix& points, int d) {
  const int n = static_cast<int>(points.cols());
  if (n > kBruteForceGuard) throw TooLargeError(n, kBruteForceGuard);
  if (n < 1 || d < 1) throw DimensionError("need at least one point and d >= 1");
  if (numerical_rank(points) < d) {
    throw RankDeficientDataError("data spans fewer than d dimensions");
  }

  const std::vector<Vector> reps = dedup_directions(points);
  const int r = static_cast<int>(reps.size());

  int best_count = -1;
  std::vector<std::pair<Subspace, int>> maximizers;  // (span, rank)
  bool truncated = false;

  for (int size = 1; size <= d; ++size) {
    for_each_subset(r, size, [&](const std::vector<int>& idx) {
      auto span = independent_span(reps, idx);
      if (!span) return;
      const int c = count_members(points, *span);
      if (c > best_count) {
        best_count = c;
        maximizers.clear();
        truncated = false;
        maximizers.emplace_back(std::move(*span), size);
      } else if (c == best_count) {
        for (const auto& [m, rk] : maximizers) {
          if (rk == size && same_subspace(m, *span)) return;
        }
        if (static_cast<int>(maximizers.size()) >= kCoMaximizerCap) {
          truncated = true;
          return;
        }
        maximizers.emplace_back(std::move(*span), size);
      }
    });
  }

  L0Result out{complete_to_dim(maximizers.front().first, d), best_count,
               L0Status::unique, {}, truncated};
  bool any_deficient = false;
  for (auto& [m, rk] : maximizers) {
    if (rk < d) any_deficient = true;
    out.co_maximizers.push_back(rk < d ? complete_to_dim(m, d) : m);
  }
  if (any_deficient) {
    out.status = L0Status::degenerate;
    out.best_count = count_members(points, out.best);
  } else if (out.co_maximizers.size() > 1 || truncated) {
    out.status = L0Status::tie;
  }
  return out;
}

int directional_l0_min(const Matrix& inliers, const Subspace& truth) {
  const int n = static_cast<int>(inliers.cols());
  if (n > kDirectionalGuard) throw TooLargeError(n, kDirectionalGuard);
  if (n < 1) throw DimensionError("need at least one inlier");
  for (Eigen::Index j = 0; j < inliers.cols(); ++j) {
    const double nj = inliers.col(j).norm();
    if (nj == 0.0 || residual(truth, inliers.col(j)).norm() > tol::membership * nj) {
      throw OffSubspaceError(static_cast<int>(j));
    }
  }
  const int d = truth.dim();
  if (d == 1) return n;  // the only proper subspace of a line is {0}

  // Work in truth coordinates; the search space is subspaces of the truth
  // spanned by inlier subsets of size <= d-1.
  const Matrix coords = truth.basis().transpose() * inliers;
  const std::vector<Vector> reps = dedup_directions(coords);
  const int r = static_cast<int>(reps.size());

  int max_in_proper = 0;
  for (int size = 1; size <= d - 1; ++size) {
    for_each_subset(r, size, [&](const std::vector<int>& idx) {
      auto span = independent_span(reps, idx);
      if (!span) return;
      const int c = count_members(coords, *span);
      max_in_proper = std::max(max_in_proper, c);
    });
  }
  return n - max_in_proper;
}

WellDefined well_defined_check(const LabeledDataset& ds, int d) {
  if (!ds.truth()) throw DimensionError("well_defined_check needs a truth subspace");
  const Subspace& truth = *ds.truth();

  // Degeneracy of the inlier-only problem trumps everything: if the inliers
  // span fewer than d dimensions, infinitely many d-subspaces contain them
  // and no outlier placement can repair that.
  L0Result in_only = [&]() -> L0Result {
    try {
      return l0_bruteforce(ds.inlier_points(), d);
    } catch (const RankDeficientDataError&) {
      return L0Result{truth, ds.n_inliers(), L0Status::degenerate, {}, false};
    }
  }();
  if (in_only.status == L0Status::degenerate) return WellDefined::degenerate;

  const L0Result full = l0_bruteforce(ds.points(), d);
  if (full.status == L0Status::degenerate) return WellDefined::degenerate;

  const int truth_count = [&] {
    int c = 0;
    for (Eigen::Index j = 0; j < ds.points().cols(); ++j) {
      const double nj = ds.points().col(j).norm();
      if (nj == 0.0 || residual(truth, ds.points().col(j)).norm() <= tol::membership * nj)
        ++c;
    }
    return c;
  }();
  if (full.best_count > truth_count) return WellDefined::beaten;

  const bool full_ok =
      full.status == L0Status::unique && same_subspace(full.best, truth);
  const bool in_ok =
      in_only.status == L0Status::unique && same_subspace(in_only.best, truth);
  if (full_ok && in_ok) return WellDefined::well_defined;
  return WellDefined::tie;
}

SnrThresholds snr_and_thresholds(const LabeledDataset& ds, int d_override) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  int d = d_override;
  if (d <= 0) {
    if (!ds.truth()) throw DimensionError("need d or a truth subspace");
    d = ds.truth()->dim();
  }
  SnrThresholds out;
  out.snr = ds.snr();
  const double n = ds.size();
  out.general_position_bound = (n + d - 1) / (n - d + 1);
  out.hardness_bound =
      (ds.ambient_dim() == d) ? inf : double(d) / (ds.ambient_dim() - d);
  if (ds.truth() && ds.n_inliers() <= kDirectionalGuard && ds.n_inliers() >= 1) {
    const int c = directional_l0_min(ds.inlier_points(), *ds.truth());
    out.directional_available = true;
    if (c == 0) {
      out.directional_ill_posed = true;
      out.directional_bound = inf;
    } else {
      out.directional_bound = double(ds.n_inliers()) / c;
    }
  }
  return out;
}

}  // namespace rsr
