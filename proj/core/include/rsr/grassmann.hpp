#pragma once

#include <Eigen/Dense>
#include <vector>

#include "rsr/errors.hpp"
#include "rsr/rng.hpp"

namespace rsr {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Shared numeric tolerances. Ranks treat singular values below
/// tol::rank * sigma_max as zero; two subspaces are equal when their largest
/// principal angle is below tol::subspace_eq; a point lies on a subspace when
/// its angle to it is below tol::membership.
namespace tol {
inline constexpr double orthonormality = 1e-10;
inline constexpr double rank = 1e-10;
inline constexpr double subspace_eq = 1e-9;
inline constexpr double membership = 1e-10;
inline constexpr double tangency = 1e-8;
inline constexpr double all_zero = 1e-300;
}  // namespace tol

/// A point of the Grassmannian G(D, d): a d-dimensional linear subspace of
/// R^D held as a D x d matrix with orthonormal columns. The basis is one
/// representative of an equivalence class; all comparisons go through
/// principal angles, never through the basis entries.
class Subspace {
 public:
  /// Validates B^T B = I within tol::orthonormality.
  explicit Subspace(Matrix basis);

  int ambient_dim() const { return static_cast<int>(basis_.rows()); }
  int dim() const { return static_cast<int>(basis_.cols()); }
  const Matrix& basis() const { return basis_; }

  /// P = B B^T, the orthogonal projector onto the subspace.
  Matrix projector() const { return basis_ * basis_.transpose(); }

 private:
  Matrix basis_;
};

/// A Grassmannian tangent vector at a base point: a D x d matrix H with
/// B^T H = 0, where B is the base point's basis.
struct TangentDirection {
  TangentDirection(Subspace base, Matrix h);

  Subspace at;
  Matrix direction;

  /// Spectral norm of the direction matrix.
  double spectral_norm() const;
};

/// Principal angles between two equal-dimensional subspaces, sorted
/// descending; angles[0] is the largest principal angle theta_1, the metric
/// used for recovery error throughout.
struct PrincipalAngleVector {
  std::vector<double> angles;

  double largest() const { return angles.empty() ? 0.0 : angles.front(); }
};

/// An affine d-flat [b + L], stored as its linear part plus the unique
/// minimal-norm offset (the representative with B^T b = 0).
struct AffineSubspace {
  AffineSubspace(Subspace lin, Vector off);

  /// Builds the minimal-norm representative from any offset of the flat.
  static AffineSubspace from_any_offset(Subspace lin, const Vector& any_offset);

  Subspace linear;
  Vector offset;

  /// Euclidean distance from a point to the flat.
  double distance(const Vector& x) const;
};

/// Orthonormal basis for the column span of m. Rank is decided by
/// sigma_i > rank_tol * sigma_max. Deterministic: top-r left singular
/// vectors with each column's largest-magnitude entry made positive.
/// Throws AllZeroError when every entry is below tol::all_zero.
Subspace orthonormalize(const Matrix& m, double rank_tol = tol::rank);

/// All principal angles between a and b (same dim, same ambient dim).
/// Small angles are computed through the sine route so that theta_1 is
/// accurate near 0; the identity sin(theta_1) = ||P_a - P_b||_2 holds to 1e-9.
PrincipalAngleVector principal_angles(const Subspace& a, const Subspace& b);

double largest_principal_angle(const Subspace& a, const Subspace& b);

/// Basis-independent equality: every principal angle below eq_tol.
/// Subspaces of different dimension are never equal.
bool same_subspace(const Subspace& a, const Subspace& b,
                   double eq_tol = tol::subspace_eq);

/// Q_S x = x - B (B^T x); its norm is the distance from x to the subspace.
Vector residual(const Subspace& s, const Vector& x);

/// Angle between a nonzero vector and a subspace, in [0, pi/2]. Computed as
/// arcsin(||Q_S x|| / ||x||), which stays accurate for points near the
/// subspace.
double angle_to(const Subspace& s, const Vector& x);

/// Geodesic step of arclength t from s along tangent h: with the thin SVD
/// H = U S W^T, the new basis is B W cos(S t) W^T + U sin(S t) W^T. For a
/// tangent with a single unit singular value the largest principal angle
/// traveled equals t. t = 0 returns s unchanged (bit-exact). Throws
/// TangencyViolationError when max |B^T H| > tol::tangency.
Subspace geodesic_step(const Subspace& s, const TangentDirection& h, double t);

/// Parallel transport of h along its own geodesic to arclength t, i.e. the
/// geodesic's velocity at t. Feeding this to geodesic_step at the stepped
/// point continues the same geodesic.
TangentDirection transport_along_geodesic(const TangentDirection& h, double t);

/// Orthogonally invariant random subspace: orthonormalized standard Gaussian
/// matrix.
Subspace random_subspace(int ambient_dim, int dim, Rng& rng);

/// Random subspace with theta_1(result, center) < radius, rejection-free:
/// a geodesic step from center along a random unit-spectral-norm tangent with
/// arclength uniform in [0, radius).
Subspace random_in_ball(const Subspace& center, double radius, Rng& rng);

/// Random tangent direction at s with unit spectral norm.
TangentDirection random_tangent(const Subspace& s, Rng& rng);

}  // namespace rsr
