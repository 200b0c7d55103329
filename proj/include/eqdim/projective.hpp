#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <vector>

#include "eqdim/rng.hpp"

namespace eqdim {

using Complex = std::complex<double>;

// Point of P^k (k = 1 or 2) in homogeneous coordinates, stored normalized:
// the first coordinate of largest modulus is divided out, so it equals 1
// exactly and normalization is idempotent.
class ProjectivePoint {
 public:
  ProjectivePoint() = default;

  // Normalizes. Throws AllComponentsVanish if every coordinate is tiny.
  static ProjectivePoint from_homogeneous(int k, const std::array<Complex, 3>& coords);

  static ProjectivePoint affine_p1(Complex z);              // [z : 1]
  static ProjectivePoint infinity_p1();                     // [1 : 0]
  static ProjectivePoint affine_p2(Complex z, Complex w);   // [z : w : 1]

  int dim() const { return k_; }
  int num_coords() const { return k_ + 1; }
  const Complex& coord(int i) const { return c_[static_cast<std::size_t>(i)]; }
  const std::array<Complex, 3>& coords() const { return c_; }

  // Index of the unit coordinate.
  int chart_index() const { return chart_; }

  // The k affine coordinates in the chart of the unit coordinate, in
  // ascending index order (skipping the chart coordinate).
  std::array<Complex, 2> chart_coords() const;

  // P^1 only: x0/x1, infinite when x1 == 0.
  Complex affine_p1_value() const;

  double lift_norm() const;  // sqrt(sum |x_i|^2), >= 1 by normalization

  bool close_to(const ProjectivePoint& other, double tol) const;

 private:
  std::array<Complex, 3> c_{Complex(0, 0), Complex(0, 0), Complex(0, 0)};
  int k_ = 1;
  int chart_ = 0;
};

// Chordal distance d(x, y) = ||x ^ y|| / (||x|| ||y||), scale invariant and
// in [0, 1]. This is the distance induced by the Fubini-Study form
// normalized so the total volume of P^k is 1; a chordal ball of radius s
// has volume exactly s^{2k}.
double chordal_distance(const ProjectivePoint& a, const ProjectivePoint& b);

// Diameter of P^k in the chordal metric.
inline constexpr double kChordalDiameter = 1.0;

// Orthonormal basis (k vectors in C^{k+1}) of the Hermitian orthogonal
// complement of the lift of x. Used to represent the tangent space.
struct TangentFrame {
  std::array<std::array<Complex, 3>, 2> basis;
  int k = 1;
};
TangentFrame tangent_frame(const ProjectivePoint& x);

// Point at chordal distance t from x along the geodesic with unit tangent
// direction u (a unit vector of C^{k+1} orthogonal to the lift of x):
// cos(asin t) * x_hat + t * u.
ProjectivePoint geodesic_point(const ProjectivePoint& x,
                               const std::array<Complex, 3>& u, double t);

// Uniform sample (w.r.t. FS volume) in the chordal ball B(x, radius).
ProjectivePoint sample_in_ball(const ProjectivePoint& x, double radius, RngStream& rng);

// Deterministic quasi-uniform probe points in B(x, radius). Uses stratified
// radii t_i = radius * ((i + 0.5)/n)^{1/(2k)} and a low-discrepancy sweep of
// tangent directions.
std::vector<ProjectivePoint> probe_points_in_ball(const ProjectivePoint& x,
                                                  double radius, int n);

}  // namespace eqdim
