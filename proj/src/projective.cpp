#include "eqdim/projective.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "eqdim/errors.hpp"

namespace eqdim {

namespace {

constexpr double kPi = 3.14159265358979323846;

double abs2(const Complex& z) { return std::norm(z); }

}  // namespace

ProjectivePoint ProjectivePoint::from_homogeneous(int k, const std::array<Complex, 3>& coords) {
  ProjectivePoint p;
  p.k_ = k;
  int best = 0;
  double best_mod = abs2(coords[0]);
  for (int i = 1; i <= k; ++i) {
    const double m = abs2(coords[static_cast<std::size_t>(i)]);
    if (m > best_mod) {
      best_mod = m;
      best = i;
    }
  }
  if (!(best_mod > 1e-28)) {
    throw AllComponentsVanish("all homogeneous coordinates vanish");
  }
  const Complex pivot = coords[static_cast<std::size_t>(best)];
  for (int i = 0; i <= k; ++i) {
    p.c_[static_cast<std::size_t>(i)] = coords[static_cast<std::size_t>(i)] / pivot;
  }
  p.c_[static_cast<std::size_t>(best)] = Complex(1.0, 0.0);
  p.chart_ = best;
  return p;
}

ProjectivePoint ProjectivePoint::affine_p1(Complex z) {
  return from_homogeneous(1, {z, Complex(1.0, 0.0), Complex(0.0, 0.0)});
}

ProjectivePoint ProjectivePoint::infinity_p1() {
  return from_homogeneous(1, {Complex(1.0, 0.0), Complex(0.0, 0.0), Complex(0.0, 0.0)});
}

ProjectivePoint ProjectivePoint::affine_p2(Complex z, Complex w) {
  return from_homogeneous(2, {z, w, Complex(1.0, 0.0)});
}

std::array<Complex, 2> ProjectivePoint::chart_coords() const {
  std::array<Complex, 2> out{Complex(0, 0), Complex(0, 0)};
  int j = 0;
  for (int i = 0; i <= k_; ++i) {
    if (i == chart_) continue;
    out[static_cast<std::size_t>(j++)] = c_[static_cast<std::size_t>(i)];
  }
  return out;
}

Complex ProjectivePoint::affine_p1_value() const {
  if (std::abs(c_[1]) < 1e-300) {
    return Complex(std::numeric_limits<double>::infinity(), 0.0);
  }
  return c_[0] / c_[1];
}

double ProjectivePoint::lift_norm() const {
  double s = 0.0;
  for (int i = 0; i <= k_; ++i) s += abs2(c_[static_cast<std::size_t>(i)]);
  return std::sqrt(s);
}

bool ProjectivePoint::close_to(const ProjectivePoint& other, double tol) const {
  return chordal_distance(*this, other) <= tol;
}

double chordal_distance(const ProjectivePoint& a, const ProjectivePoint& b) {
  // ||x ^ y||^2 = sum_{i<j} |x_i y_j - x_j y_i|^2; no cancellation at small
  // separations, unlike 1 - |<x,y>|^2.
  const auto& x = a.coords();
  const auto& y = b.coords();
  double wedge2 = std::norm(x[0] * y[1] - x[1] * y[0]);
  if (a.dim() == 2) {
    wedge2 += std::norm(x[0] * y[2] - x[2] * y[0]);
    wedge2 += std::norm(x[1] * y[2] - x[2] * y[1]);
  }
  const double d = std::sqrt(wedge2) / (a.lift_norm() * b.lift_norm());
  return std::min(d, 1.0);
}

TangentFrame tangent_frame(const ProjectivePoint& x) {
  const int k = x.dim();
  TangentFrame frame;
  frame.k = k;
  const double xn = x.lift_norm();
  std::array<Complex, 3> xhat{};
  for (int i = 0; i <= k; ++i) xhat[static_cast<std::size_t>(i)] = x.coord(i) / xn;

  // Gram-Schmidt the standard basis against xhat, skipping the coordinate
  // closest to parallel.
  int produced = 0;
  for (int e = 0; e <= k && produced < k; ++e) {
    std::array<Complex, 3> v{};
    v[static_cast<std::size_t>(e)] = Complex(1.0, 0.0);
    // subtract projection on xhat
    Complex ip(0, 0);
    for (int i = 0; i <= k; ++i) ip += std::conj(xhat[static_cast<std::size_t>(i)]) * v[static_cast<std::size_t>(i)];
    for (int i = 0; i <= k; ++i) v[static_cast<std::size_t>(i)] -= ip * xhat[static_cast<std::size_t>(i)];
    // subtract projections on already produced frame vectors
    for (int f = 0; f < produced; ++f) {
      Complex ipf(0, 0);
      for (int i = 0; i <= k; ++i) {
        ipf += std::conj(frame.basis[static_cast<std::size_t>(f)][static_cast<std::size_t>(i)]) * v[static_cast<std::size_t>(i)];
      }
      for (int i = 0; i <= k; ++i) {
        v[static_cast<std::size_t>(i)] -= ipf * frame.basis[static_cast<std::size_t>(f)][static_cast<std::size_t>(i)];
      }
    }
    double n2 = 0.0;
    for (int i = 0; i <= k; ++i) n2 += std::norm(v[static_cast<std::size_t>(i)]);
    if (n2 < 1e-12) continue;  // basis vector nearly parallel to x
    const double n = std::sqrt(n2);
    for (int i = 0; i <= k; ++i) v[static_cast<std::size_t>(i)] /= n;
    frame.basis[static_cast<std::size_t>(produced++)] = v;
  }
  return frame;
}

ProjectivePoint geodesic_point(const ProjectivePoint& x,
                               const std::array<Complex, 3>& u, double t) {
  t = std::clamp(t, 0.0, 1.0);
  const double theta = std::asin(t);
  const double c = std::cos(theta);
  const double xn = x.lift_norm();
  std::array<Complex, 3> p{};
  for (int i = 0; i <= x.dim(); ++i) {
    p[static_cast<std::size_t>(i)] = c * x.coord(i) / xn + t * u[static_cast<std::size_t>(i)];
  }
  return ProjectivePoint::from_homogeneous(x.dim(), p);
}

namespace {

// Unit tangent direction from k complex amplitudes.
std::array<Complex, 3> combine_direction(const TangentFrame& frame,
                                         const std::array<Complex, 2>& amps) {
  std::array<Complex, 3> u{};
  double n2 = 0.0;
  for (int f = 0; f < frame.k; ++f) n2 += std::norm(amps[static_cast<std::size_t>(f)]);
  const double n = std::sqrt(std::max(n2, 1e-300));
  for (int i = 0; i < 3; ++i) {
    Complex s(0, 0);
    for (int f = 0; f < frame.k; ++f) {
      s += (amps[static_cast<std::size_t>(f)] / n) * frame.basis[static_cast<std::size_t>(f)][static_cast<std::size_t>(i)];
    }
    u[static_cast<std::size_t>(i)] = s;
  }
  return u;
}

}  // namespace

ProjectivePoint sample_in_ball(const ProjectivePoint& x, double radius, RngStream& rng) {
  const int k = x.dim();
  const TangentFrame frame = tangent_frame(x);
  std::array<Complex, 2> amps{Complex(0, 0), Complex(0, 0)};
  for (int f = 0; f < k; ++f) amps[static_cast<std::size_t>(f)] = rng.complex_normal();
  const auto u = combine_direction(frame, amps);
  // Radial CDF of FS volume in chordal radius t is (t/radius)^{2k}.
  const double t = radius * std::pow(rng.uniform(), 1.0 / (2.0 * k));
  return geodesic_point(x, u, t);
}

std::vector<ProjectivePoint> probe_points_in_ball(const ProjectivePoint& x,
                                                  double radius, int n) {
  const int k = x.dim();
  const TangentFrame frame = tangent_frame(x);
  std::vector<ProjectivePoint> out;
  out.reserve(static_cast<std::size_t>(n));
  const double golden = 0.6180339887498949;
  for (int i = 0; i < n; ++i) {
    const double t = radius * std::pow((i + 0.5) / n, 1.0 / (2.0 * k));
    std::array<Complex, 2> amps{Complex(0, 0), Complex(0, 0)};
    if (k == 1) {
      const double phi = 2.0 * kPi * std::fmod(golden * (i + 1), 1.0);
      amps[0] = Complex(std::cos(phi), std::sin(phi));
    } else {
      // Hopf-style sweep of S^3 with two incommensurate rotations.
      const double a = 0.5 * kPi * std::fmod(0.7548776662466927 * (i + 1), 1.0);
      const double p1 = 2.0 * kPi * std::fmod(0.5698402909980532 * (i + 1), 1.0);
      const double p2 = 2.0 * kPi * std::fmod(golden * (i + 1), 1.0);
      amps[0] = std::cos(a) * Complex(std::cos(p1), std::sin(p1));
      amps[1] = std::sin(a) * Complex(std::cos(p2), std::sin(p2));
    }
    out.push_back(geodesic_point(x, combine_direction(frame, amps), t));
  }
  return out;
}

}  // namespace eqdim
