#include "rsr/dataset.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace rsr {

namespace {

std::string format17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

LabeledDataset::LabeledDataset(Matrix points, std::vector<std::uint8_t> inlier_mask,
                               std::optional<Subspace> truth,
                               std::optional<Vector> truth_offset, DatasetMeta meta)
    : points_(std::move(points)),
      mask_(std::move(inlier_mask)),
      truth_(std::move(truth)),
      truth_offset_(std::move(truth_offset)),
      meta_(std::move(meta)) {
  if (static_cast<Eigen::Index>(mask_.size()) != points_.cols()) {
    throw DimensionMismatchError("inlier mask length must equal the point count");
  }
  if (truth_ && truth_->ambient_dim() != points_.rows()) {
    throw DimensionMismatchError("truth subspace ambient dim mismatch");
  }
  if (truth_offset_ && !truth_) {
    throw DimensionError("affine offset requires a linear truth part");
  }
  for (auto m : mask_) n_in_ += (m != 0);
}

double LabeledDataset::snr() const {
  const int out = n_outliers();
  if (out == 0) return std::numeric_limits<double>::infinity();
  return static_cast<double>(n_in_) / out;
}

Matrix LabeledDataset::inlier_points() const {
  Matrix m(points_.rows(), n_in_);
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < points_.cols(); ++i)
    if (mask_[static_cast<std::size_t>(i)]) m.col(k++) = points_.col(i);
  return m;
}

Matrix LabeledDataset::outlier_points() const {
  Matrix m(points_.rows(), points_.cols() - n_in_);
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < points_.cols(); ++i)
    if (!mask_[static_cast<std::size_t>(i)]) m.col(k++) = points_.col(i);
  return m;
}

Matrix spherize(const Matrix& x) {
  Matrix out(x.rows(), x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const double n = x.col(j).norm();
    if (n == 0.0) throw ZeroColumnError(static_cast<int>(j));
    out.col(j) = x.col(j) / n;
  }
  return out;
}

Matrix symmetrize(const Matrix& x) {
  const Eigen::Index n = x.cols();
  if (n < 2) throw DimensionError("symmetrize needs at least two points");
  if (n > kSymmetrizeGuard) {
    throw TooLargeError(static_cast<int>(n), kSymmetrizeGuard);
  }
  Matrix out(x.rows(), n * (n - 1) / 2);
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) out.col(k++) = x.col(i) - x.col(j);
  return out;
}

LabeledDataset gen_haystack(int D, int d, int n_in, int n_out, double sigma_in,
                            double sigma_out, Rng& rng) {
  if (n_in < 1 || n_out < 0 || sigma_in <= 0.0 || sigma_out <= 0.0) {
    throw DimensionError("haystack: counts must be positive and sigmas > 0");
  }
  Subspace truth = random_subspace(D, d, rng);
  Matrix pts(D, n_in + n_out);
  const double in_scale = sigma_in / std::sqrt(static_cast<double>(d));
  for (int i = 0; i < n_in; ++i) {
    Vector g(d);
    for (int k = 0; k < d; ++k) g(k) = rng.normal();
    pts.col(i) = truth.basis() * (in_scale * g);
  }
  const double out_scale = sigma_out / std::sqrt(static_cast<double>(D));
  for (int i = 0; i < n_out; ++i) {
    Vector g(D);
    for (int k = 0; k < D; ++k) g(k) = rng.normal();
    pts.col(n_in + i) = out_scale * g;
  }
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(n_in + n_out), 0);
  for (int i = 0; i < n_in; ++i) mask[static_cast<std::size_t>(i)] = 1;
  DatasetMeta meta{"haystack",
                   {{"D", double(D)}, {"d", double(d)}, {"N_in", double(n_in)},
                    {"N_out", double(n_out)}, {"sigma_in", sigma_in},
                    {"sigma_out", sigma_out}},
                   0};
  return LabeledDataset(std::move(pts), std::move(mask), std::move(truth),
                        std::nullopt, std::move(meta));
}

namespace {

// Every d-subset of the coefficient matrix (points expressed in the truth
// basis) must have full rank d.
bool all_d_subsets_full_rank(const Matrix& coeffs, int d) {
  const int n = static_cast<int>(coeffs.cols());
  std::vector<int> idx(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) idx[static_cast<std::size_t>(i)] = i;
  for (;;) {
    Matrix sub(coeffs.rows(), d);
    for (int i = 0; i < d; ++i) sub.col(i) = coeffs.col(idx[static_cast<std::size_t>(i)]);
    Eigen::JacobiSVD<Matrix> svd(sub);
    const auto& sv = svd.singularValues();
    if (sv(sv.size() - 1) <= tol::rank * sv(0)) return false;
    int j = d - 1;
    while (j >= 0 && idx[static_cast<std::size_t>(j)] == n - d + j) --j;
    if (j < 0) break;
    ++idx[static_cast<std::size_t>(j)];
    for (int k = j + 1; k < d; ++k)
      idx[static_cast<std::size_t>(k)] = idx[static_cast<std::size_t>(k - 1)] + 1;
  }
  return true;
}

}  // namespace

LabeledDataset gen_general_position(const Subspace& truth, int n_in, Rng& rng) {
  const int d = truth.dim();
  if (n_in < d) throw DimensionError("general position needs N_in >= d");
  for (;;) {
    Matrix coeffs(d, n_in);
    for (int j = 0; j < n_in; ++j) {
      Vector g(d);
      double n;
      do {
        for (int k = 0; k < d; ++k) g(k) = rng.normal();
        n = g.norm();
      } while (n == 0.0);
      coeffs.col(j) = g / n;
    }
    if (n_in <= 30 && !all_d_subsets_full_rank(coeffs, d)) continue;
    Matrix pts = truth.basis() * coeffs;
    std::vector<std::uint8_t> mask(static_cast<std::size_t>(n_in), 1);
    DatasetMeta meta{"general_position",
                     {{"D", double(truth.ambient_dim())}, {"d", double(d)},
                      {"N_in", double(n_in)}},
                     0};
    return LabeledDataset(std::move(pts), std::move(mask), truth, std::nullopt,
                          std::move(meta));
  }
}

Matrix gen_adversarial_line(const Vector& direction, int n_out, double magnitude) {
  const double n = direction.norm();
  if (n == 0.0) throw ZeroVectorError();
  if (n_out < 1 || magnitude <= 0.0) {
    throw DimensionError("adversarial line needs N_out >= 1 and magnitude > 0");
  }
  Matrix out(direction.size(), n_out);
  const Vector col = (magnitude / n) * direction;
  for (int j = 0; j < n_out; ++j) out.col(j) = col;
  return out;
}

LabeledDataset with_outliers(const LabeledDataset& inliers, const Matrix& outliers) {
  if (outliers.rows() != inliers.ambient_dim()) {
    throw DimensionMismatchError("outlier block ambient dim mismatch");
  }
  Matrix pts(inliers.ambient_dim(), inliers.size() + outliers.cols());
  pts.leftCols(inliers.size()) = inliers.points();
  pts.rightCols(outliers.cols()) = outliers;
  std::vector<std::uint8_t> mask = inliers.inlier_mask();
  mask.insert(mask.end(), static_cast<std::size_t>(outliers.cols()), 0);
  DatasetMeta meta = inliers.meta();
  meta.params["N_out"] = static_cast<double>(
      inliers.n_outliers() + static_cast<int>(outliers.cols()));
  return LabeledDataset(std::move(pts), std::move(mask), inliers.truth(),
                        inliers.truth_offset(), std::move(meta));
}

namespace {

LabeledDataset axis_fixture(int d, int D, int n_in, int n_out, Matrix inlier_pts,
                            const char* name) {
  Matrix pts(D, n_in + n_out);
  pts.leftCols(n_in) = inlier_pts;
  for (int j = 0; j < n_out; ++j) {
    pts.col(n_in + j) = Vector::Unit(D, d);  // e_{d+1}
  }
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(n_in + n_out), 0);
  for (int i = 0; i < n_in; ++i) mask[static_cast<std::size_t>(i)] = 1;
  Matrix basis = Matrix::Identity(D, d);
  DatasetMeta meta{name,
                   {{"D", double(D)}, {"d", double(d)}, {"N_in", double(n_in)},
                    {"N_out", double(n_out)}},
                   0};
  return LabeledDataset(std::move(pts), std::move(mask), Subspace(std::move(basis)),
                        std::nullopt, std::move(meta));
}

}  // namespace

LabeledDataset fixture_axis_equipartition(int d, int D, int n_in, int n_out) {
  if (D < d + 1) throw DimensionError("fixture needs D >= d + 1");
  if (n_in % d != 0) throw DivisibilityError(n_in, d);
  Matrix in(D, n_in);
  in.setZero();
  const int per_axis = n_in / d;
  for (int a = 0; a < d; ++a)
    for (int k = 0; k < per_axis; ++k) in(a, a * per_axis + k) = 1.0;
  return axis_fixture(d, D, n_in, n_out, std::move(in), "axis_equipartition");
}

LabeledDataset fixture_axis_spike(int d, int D, int n_in, int n_out) {
  if (D < d + 1) throw DimensionError("fixture needs D >= d + 1");
  if (d <= 1) throw DimensionError("fixture needs d > 1");
  if (n_in <= d - 1) throw DimensionError("fixture needs N_in > d - 1");
  Matrix in(D, n_in);
  in.setZero();
  const int heavy = n_in - (d - 1);
  for (int k = 0; k < heavy; ++k) in(0, k) = 1.0;
  const double w = std::sqrt(static_cast<double>(heavy));
  for (int j = 1; j < d; ++j) in(j, heavy + j - 1) = w;
  return axis_fixture(d, D, n_in, n_out, std::move(in), "axis_spike");
}

LabeledDataset add_noise(const LabeledDataset& ds, const NoiseSpec& spec, Rng& rng) {
  if (spec.epsilon < 0.0) throw DimensionError("noise epsilon must be >= 0");
  if (spec.kind == NoiseKind::none || spec.epsilon == 0.0) return ds;
  const int D = ds.ambient_dim();
  Matrix pts = ds.points();
  for (int j = 0; j < ds.size(); ++j) {
    if (!ds.is_inlier(j)) continue;
    Vector g(D);
    double n;
    do {
      for (int k = 0; k < D; ++k) g(k) = rng.normal();
      n = g.norm();
    } while (n == 0.0);
    Vector delta;
    if (spec.kind == NoiseKind::gaussian_clipped) {
      delta = (spec.epsilon / std::sqrt(static_cast<double>(D))) * g;
      const double dn = delta.norm();
      if (dn > spec.epsilon) delta *= spec.epsilon / dn;
    } else {
      // Uniform in the epsilon-ball: uniform direction, radius ~ eps * u^{1/D}.
      const double r =
          spec.epsilon * std::pow(rng.uniform(), 1.0 / static_cast<double>(D));
      delta = (r / n) * g;
    }
    // The norm bound is a hard invariant. Clip a hair inside epsilon so it
    // survives the rounding of x + delta as well.
    while (delta.norm() > spec.epsilon * (1.0 - 1e-12)) delta *= 1.0 - 1e-12;
    pts.col(j) += delta;
  }
  DatasetMeta meta = ds.meta();
  meta.params["noise_epsilon"] = spec.epsilon;
  meta.params["noise_kind"] = static_cast<double>(spec.kind);
  return LabeledDataset(std::move(pts), ds.inlier_mask(), ds.truth(),
                        ds.truth_offset(), std::move(meta));
}

void save_dataset(const std::string& path, const LabeledDataset& ds) {
  std::ofstream f(path);
  if (!f) throw Error("cannot open " + path + " for writing");
  const int D = ds.ambient_dim(), N = ds.size();
  const int d_truth = ds.truth() ? ds.truth()->dim() : 0;
  f << D << ' ' << N << ' ' << d_truth << '\n';
  for (int j = 0; j < N; ++j) {
    for (int i = 0; i < D; ++i) {
      if (i) f << ' ';
      f << format17(ds.points()(i, j));
    }
    f << '\n';
  }
  for (int j = 0; j < N; ++j) {
    if (j) f << ' ';
    f << (ds.is_inlier(j) ? 1 : 0);
  }
  f << '\n';
  if (ds.truth()) {
    const Matrix& b = ds.truth()->basis();
    for (int j = 0; j < d_truth; ++j) {
      for (int i = 0; i < D; ++i) {
        if (i) f << ' ';
        f << format17(b(i, j));
      }
      f << '\n';
    }
    if (ds.truth_offset()) {
      const Vector& off = *ds.truth_offset();
      for (int i = 0; i < D; ++i) {
        if (i) f << ' ';
        f << format17(off(i));
      }
      f << '\n';
    }
  }
  if (!f) throw Error("write to " + path + " failed");
}

LabeledDataset load_dataset(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error("cannot open " + path);
  int D = 0, N = 0, d_truth = 0;
  if (!(f >> D >> N >> d_truth) || D < 1 || N < 1 || d_truth < 0 || d_truth > D) {
    throw Error("malformed dataset header in " + path);
  }
  Matrix pts(D, N);
  for (int j = 0; j < N; ++j)
    for (int i = 0; i < D; ++i)
      if (!(f >> pts(i, j))) throw Error("truncated point block in " + path);
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(N));
  for (int j = 0; j < N; ++j) {
    int v = 0;
    if (!(f >> v) || (v != 0 && v != 1)) throw Error("malformed mask in " + path);
    mask[static_cast<std::size_t>(j)] = static_cast<std::uint8_t>(v);
  }
  std::optional<Subspace> truth;
  std::optional<Vector> offset;
  if (d_truth > 0) {
    Matrix b(D, d_truth);
    for (int j = 0; j < d_truth; ++j)
      for (int i = 0; i < D; ++i)
        if (!(f >> b(i, j))) throw Error("truncated basis block in " + path);
    truth = Subspace(std::move(b));
    Vector off(D);
    bool have = true;
    for (int i = 0; i < D; ++i)
      if (!(f >> off(i))) {
        have = false;
        break;
      }
    if (have) offset = std::move(off);
  }
  DatasetMeta meta{"file", {}, 0};
  return LabeledDataset(std::move(pts), std::move(mask), std::move(truth),
                        std::move(offset), std::move(meta));
}

}  // namespace rsr
