#include <doctest.h>

#include <cmath>

#include "eqdim/projective.hpp"
#include "eqdim/rng.hpp"

using namespace eqdim;

TEST_CASE("normalization is idempotent and pins the largest coordinate") {
  RngStream rng(101);
  for (int i = 0; i < 200; ++i) {
    const int k = i % 2 ? 1 : 2;
    std::array<Complex, 3> c{rng.complex_normal(), rng.complex_normal(),
                             k == 2 ? rng.complex_normal() : Complex(0, 0)};
    const ProjectivePoint p = ProjectivePoint::from_homogeneous(k, c);
    double maxmod = 0.0;
    for (int j = 0; j <= k; ++j) maxmod = std::max(maxmod, std::abs(p.coord(j)));
    CHECK(maxmod == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(p.coord(p.chart_index()) == Complex(1.0, 0.0));
    const ProjectivePoint again = ProjectivePoint::from_homogeneous(k, p.coords());
    for (int j = 0; j <= k; ++j) {
      CHECK(std::abs(again.coord(j) - p.coord(j)) < 1e-15);
    }
  }
}

TEST_CASE("chordal distance is scale invariant") {
  RngStream rng(102);
  for (int i = 0; i < 200; ++i) {
    const Complex z = rng.complex_normal();
    const Complex w = rng.complex_normal();
    const Complex lambda = 3.7 * rng.unit_complex() + Complex(0.01, 0);
    const auto a = ProjectivePoint::from_homogeneous(1, {z, Complex(1, 0), {}});
    const auto b = ProjectivePoint::from_homogeneous(1, {w, Complex(1, 0), {}});
    const auto a_scaled = ProjectivePoint::from_homogeneous(1, {lambda * z, lambda, {}});
    CHECK(chordal_distance(a, b) == doctest::Approx(chordal_distance(a_scaled, b)).epsilon(1e-12));
  }
}

TEST_CASE("chordal distance known values") {
  const auto one = ProjectivePoint::affine_p1({1, 0});
  const auto zero = ProjectivePoint::affine_p1({0, 0});
  const auto inf = ProjectivePoint::infinity_p1();
  // d([1:1],[0:1]) = 1/sqrt(2)
  CHECK(chordal_distance(one, zero) == doctest::Approx(1.0 / std::sqrt(2.0)));
  CHECK(chordal_distance(one, inf) == doctest::Approx(1.0 / std::sqrt(2.0)));
  // antipodal pair has the diameter distance 1
  CHECK(chordal_distance(zero, inf) == doctest::Approx(1.0));
  CHECK(chordal_distance(one, one) == doctest::Approx(0.0));
}

TEST_CASE("tangent frame is orthonormal and orthogonal to the lift") {
  RngStream rng(103);
  for (int i = 0; i < 100; ++i) {
    const int k = i % 2 ? 1 : 2;
    std::array<Complex, 3> c{rng.complex_normal(), rng.complex_normal(),
                             k == 2 ? rng.complex_normal() : Complex(0, 0)};
    const ProjectivePoint p = ProjectivePoint::from_homogeneous(k, c);
    const TangentFrame frame = tangent_frame(p);
    REQUIRE(frame.k == k);
    for (int f = 0; f < k; ++f) {
      Complex ip(0, 0);
      double n2 = 0.0;
      for (int j = 0; j <= k; ++j) {
        ip += std::conj(p.coord(j)) * frame.basis[static_cast<std::size_t>(f)][static_cast<std::size_t>(j)];
        n2 += std::norm(frame.basis[static_cast<std::size_t>(f)][static_cast<std::size_t>(j)]);
      }
      CHECK(std::abs(ip) < 1e-12);
      CHECK(n2 == doctest::Approx(1.0).epsilon(1e-12));
    }
    if (k == 2) {
      Complex ip01(0, 0);
      for (int j = 0; j <= k; ++j) {
        ip01 += std::conj(frame.basis[0][static_cast<std::size_t>(j)]) * frame.basis[1][static_cast<std::size_t>(j)];
      }
      CHECK(std::abs(ip01) < 1e-12);
    }
  }
}

TEST_CASE("geodesic points land at the requested chordal distance") {
  RngStream rng(104);
  for (int i = 0; i < 100; ++i) {
    const int k = i % 2 ? 1 : 2;
    std::array<Complex, 3> c{rng.complex_normal(), rng.complex_normal(),
                             k == 2 ? rng.complex_normal() : Complex(0, 0)};
    const ProjectivePoint p = ProjectivePoint::from_homogeneous(k, c);
    const TangentFrame frame = tangent_frame(p);
    const double t = rng.uniform(0.0, 0.9);
    const ProjectivePoint q = geodesic_point(p, frame.basis[0], t);
    CHECK(chordal_distance(p, q) == doctest::Approx(t).epsilon(1e-10));
  }
}

TEST_CASE("ball sampling respects the FS radial law") {
  // P(dist <= t) = (t/s)^{2k}: check the sampled median radius.
  RngStream rng(105);
  const auto center = ProjectivePoint::affine_p2({0.3, 0.1}, {-0.2, 0.5});
  const double s = 0.2;
  int below_median_radius = 0;
  const int n = 4000;
  const double median_t = s * std::pow(0.5, 1.0 / 4.0);  // k = 2
  for (int i = 0; i < n; ++i) {
    const ProjectivePoint q = sample_in_ball(center, s, rng);
    const double d = chordal_distance(center, q);
    CHECK(d <= s * (1 + 1e-9));
    if (d <= median_t) ++below_median_radius;
  }
  const double frac = static_cast<double>(below_median_radius) / n;
  CHECK(frac == doctest::Approx(0.5).epsilon(0.06));
}

TEST_CASE("probe points stay inside the ball and are distinct") {
  const auto center = ProjectivePoint::affine_p1({0.5, -0.2});
  const auto probes = probe_points_in_ball(center, 0.05, 50);
  REQUIRE(probes.size() == 50);
  for (std::size_t i = 0; i < probes.size(); ++i) {
    CHECK(chordal_distance(center, probes[i]) <= 0.05 * (1 + 1e-9));
    for (std::size_t j = i + 1; j < probes.size(); ++j) {
      CHECK(chordal_distance(probes[i], probes[j]) > 1e-9);
    }
  }
}
