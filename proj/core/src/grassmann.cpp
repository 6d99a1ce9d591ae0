#include "rsr/grassmann.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>

namespace rsr {

namespace {

// Flip each column's sign so its largest-magnitude entry (first on ties) is
// positive. Makes SVD-derived bases reproducible bit-for-bit.
void canonicalize_column_signs(Matrix& b) {
  for (Eigen::Index j = 0; j < b.cols(); ++j) {
    Eigen::Index imax = 0;
    double best = 0.0;
    for (Eigen::Index i = 0; i < b.rows(); ++i) {
      const double a = std::abs(b(i, j));
      if (a > best) {
        best = a;
        imax = i;
      }
    }
    if (b(imax, j) < 0.0) b.col(j) = -b.col(j);
  }
}

// Thin-QR re-orthonormalization that stays within roundoff of an already
// near-orthonormal input (R ~ I up to signs, which are corrected).
Matrix stabilize_orthonormal(const Matrix& b) {
  Eigen::HouseholderQR<Matrix> qr(b);
  Matrix q = qr.householderQ() * Matrix::Identity(b.rows(), b.cols());
  const Matrix r = qr.matrixQR().topRows(b.cols());
  for (Eigen::Index j = 0; j < b.cols(); ++j) {
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  }
  return q;
}

double max_abs(const Matrix& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

}  // namespace

Subspace::Subspace(Matrix basis) : basis_(std::move(basis)) {
  if (basis_.rows() < 1 || basis_.cols() < 1 || basis_.cols() > basis_.rows()) {
    throw DimensionError("subspace basis must be D x d with 1 <= d <= D");
  }
  const Matrix gram = basis_.transpose() * basis_;
  const Matrix dev = gram - Matrix::Identity(basis_.cols(), basis_.cols());
  if (max_abs(dev) > tol::orthonormality) {
    throw DimensionError("subspace basis columns are not orthonormal");
  }
}

TangentDirection::TangentDirection(Subspace base, Matrix h)
    : at(std::move(base)), direction(std::move(h)) {
  if (direction.rows() != at.ambient_dim() || direction.cols() != at.dim()) {
    throw DimensionMismatchError("tangent direction must match the base basis shape");
  }
  const double dev = max_abs(at.basis().transpose() * direction);
  if (dev > tol::tangency) throw TangencyViolationError(dev);
}

double TangentDirection::spectral_norm() const {
  if (direction.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(direction);
  return svd.singularValues()(0);
}

AffineSubspace::AffineSubspace(Subspace lin, Vector off)
    : linear(std::move(lin)), offset(std::move(off)) {
  if (offset.size() != linear.ambient_dim()) {
    throw DimensionMismatchError("affine offset dimension mismatch");
  }
  const double dev = (linear.basis().transpose() * offset).cwiseAbs().maxCoeff();
  if (dev > tol::orthonormality * std::max(1.0, offset.norm())) {
    throw DimensionError("affine offset is not the minimal-norm representative");
  }
}

AffineSubspace AffineSubspace::from_any_offset(Subspace lin, const Vector& any_offset) {
  const Matrix& b = lin.basis();
  Vector min_norm = any_offset - b * (b.transpose() * any_offset);
  return AffineSubspace(std::move(lin), std::move(min_norm));
}

double AffineSubspace::distance(const Vector& x) const {
  return residual(linear, x - offset).norm();
}

Subspace orthonormalize(const Matrix& m, double rank_tol) {
  if (m.size() == 0) throw DimensionError("empty matrix");
  if (max_abs(m) < tol::all_zero) throw AllZeroError();
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU);
  const auto& sv = svd.singularValues();
  const double cutoff = rank_tol * sv(0);
  Eigen::Index r = 0;
  while (r < sv.size() && sv(r) > cutoff) ++r;
  if (r == 0) throw AllZeroError();
  Matrix basis = svd.matrixU().leftCols(r);
  canonicalize_column_signs(basis);
  return Subspace(std::move(basis));
}

PrincipalAngleVector principal_angles(const Subspace& a, const Subspace& b) {
  if (a.ambient_dim() != b.ambient_dim() || a.dim() != b.dim()) {
    throw DimensionMismatchError("principal angles need equal dims");
  }
  const int d = a.dim();
  const Matrix c = a.basis().transpose() * b.basis();
  Eigen::JacobiSVD<Matrix> svd_cos(c);
  Vector cosines = svd_cos.singularValues();  // descending: small angles first

  // Sine route: singular values of Q_a B_b are sin(theta_i), descending:
  // large angles first. Accurate where the cosine route loses digits.
  const Matrix res = b.basis() - a.basis() * c;
  Eigen::JacobiSVD<Matrix> svd_sin(res);
  Vector sines = svd_sin.singularValues();

  PrincipalAngleVector out;
  out.angles.resize(d);
  const double half_sqrt2 = std::sqrt(0.5);
  for (int i = 0; i < d; ++i) {
    const double s = std::clamp(sines(i), 0.0, 1.0);
    const double cval = std::clamp(cosines(d - 1 - i), -1.0, 1.0);
    out.angles[i] = (s <= half_sqrt2) ? std::asin(s) : std::acos(cval);
  }
  std::sort(out.angles.begin(), out.angles.end(), std::greater<double>());
  return out;
}

double largest_principal_angle(const Subspace& a, const Subspace& b) {
  return principal_angles(a, b).largest();
}

bool same_subspace(const Subspace& a, const Subspace& b, double eq_tol) {
  if (a.ambient_dim() != b.ambient_dim() || a.dim() != b.dim()) return false;
  return largest_principal_angle(a, b) < eq_tol;
}

Vector residual(const Subspace& s, const Vector& x) {
  if (x.size() != s.ambient_dim()) {
    throw DimensionMismatchError("residual: vector dimension mismatch");
  }
  return x - s.basis() * (s.basis().transpose() * x);
}

double angle_to(const Subspace& s, const Vector& x) {
  const double nx = x.norm();
  if (nx == 0.0) throw ZeroVectorError();
  const double ratio = residual(s, x).norm() / nx;
  return std::asin(std::clamp(ratio, 0.0, 1.0));
}

Subspace geodesic_step(const Subspace& s, const TangentDirection& h, double t) {
  const double dev = max_abs(s.basis().transpose() * h.direction);
  if (dev > tol::tangency) throw TangencyViolationError(dev);
  if (t == 0.0) return s;

  Eigen::JacobiSVD<Matrix> svd(h.direction,
                               Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector sig = svd.singularValues();
  const Matrix& u = svd.matrixU();
  const Matrix& w = svd.matrixV();
  const Vector cos_st = (sig * t).array().cos();
  const Vector sin_st = (sig * t).array().sin();
  Matrix next = s.basis() * (w * cos_st.asDiagonal() * w.transpose()) +
                u * sin_st.asDiagonal() * w.transpose();
  return Subspace(stabilize_orthonormal(next));
}

TangentDirection transport_along_geodesic(const TangentDirection& h, double t) {
  Eigen::JacobiSVD<Matrix> svd(h.direction,
                               Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector sig = svd.singularValues();
  const Matrix& u = svd.matrixU();
  const Matrix& w = svd.matrixV();
  const Vector cos_st = (sig * t).array().cos();
  const Vector sin_st = (sig * t).array().sin();
  const Subspace base = geodesic_step(h.at, h, t);
  // Velocity of the geodesic at arclength t.
  Matrix vel = -h.at.basis() *
                   (w * (sig.cwiseProduct(sin_st)).asDiagonal() * w.transpose()) +
               u * (sig.cwiseProduct(cos_st)).asDiagonal() * w.transpose();
  // Remove the roundoff-level normal component so the invariant holds.
  vel -= base.basis() * (base.basis().transpose() * vel);
  return TangentDirection(base, std::move(vel));
}

Subspace random_subspace(int ambient_dim, int dim, Rng& rng) {
  if (dim < 1 || dim > ambient_dim) {
    throw DimensionError("random_subspace needs 1 <= d <= D");
  }
  for (;;) {
    Matrix g(ambient_dim, dim);
    for (Eigen::Index j = 0; j < g.cols(); ++j)
      for (Eigen::Index i = 0; i < g.rows(); ++i) g(i, j) = rng.normal();
    Subspace s = orthonormalize(g);
    if (s.dim() == dim) return s;  // rank deficiency has probability zero
  }
}

TangentDirection random_tangent(const Subspace& s, Rng& rng) {
  const int dim_d = s.dim(), dim_amb = s.ambient_dim();
  if (dim_d == dim_amb) {
    // G(D, D) is a single point; the only tangent is zero.
    return TangentDirection(s, Matrix::Zero(dim_amb, dim_d));
  }
  for (;;) {
    Matrix g(dim_amb, dim_d);
    for (Eigen::Index j = 0; j < g.cols(); ++j)
      for (Eigen::Index i = 0; i < g.rows(); ++i) g(i, j) = rng.normal();
    Matrix h = g - s.basis() * (s.basis().transpose() * g);
    Eigen::JacobiSVD<Matrix> svd(h);
    const double top = svd.singularValues()(0);
    if (top > 1e-8 * g.norm()) {
      h /= top;
      h -= s.basis() * (s.basis().transpose() * h);
      return TangentDirection(s, std::move(h));
    }
  }
}

Subspace random_in_ball(const Subspace& center, double radius, Rng& rng) {
  if (!(radius > 0.0) || radius > M_PI_2) {
    throw DimensionError("ball radius must lie in (0, pi/2]");
  }
  if (center.dim() == center.ambient_dim()) return center;
  const TangentDirection h = random_tangent(center, rng);
  const double t = radius * rng.uniform();
  return geodesic_step(center, h, t);
}

}  // namespace rsr
