#include <doctest.h>

#include <cmath>
#include <complex>
#include <vector>

#include "eqdim/errors.hpp"
#include "eqdim/map_model.hpp"
#include "eqdim/rng.hpp"
#include "eqdim/stats.hpp"

using namespace eqdim;

namespace {

const std::string kMapsDir = std::string(EQDIM_SOURCE_DIR) + "/maps/";

MapModel load(const std::string& name) {
  return MapModel::from_json_file(kMapsDir + name + ".json");
}

// Central finite-difference expansion of chordal distance along the chart
// displacement delta at x.
double fd_expansion(const MapModel& map, const ProjectivePoint& x,
                    const std::array<Complex, 2>& delta, double t) {
  const int k = map.dim();
  const int a = x.chart_index();
  auto shifted = [&](double sgn) {
    std::array<Complex, 3> c = x.coords();
    int slot = 0;
    for (int i = 0; i <= k; ++i) {
      if (i == a) continue;
      c[static_cast<std::size_t>(i)] += sgn * t * delta[static_cast<std::size_t>(slot++)];
    }
    return ProjectivePoint::from_homogeneous(k, c);
  };
  const ProjectivePoint xp = shifted(1.0);
  const ProjectivePoint xm = shifted(-1.0);
  return chordal_distance(map.evaluate(xp), map.evaluate(xm)) / chordal_distance(xp, xm);
}

// Chart displacement realizing a whitened tangent vector v:
// delta = G_x^{-1/2} v with G the FS metric of the largest-coordinate chart.
std::array<Complex, 2> unwhiten(const ProjectivePoint& x, const std::array<Complex, 2>& v) {
  const int k = x.dim();
  const auto z = x.chart_coords();
  double zn2 = 0.0;
  for (int i = 0; i < k; ++i) zn2 += std::norm(z[static_cast<std::size_t>(i)]);
  const double s = std::sqrt(1.0 + zn2);
  std::array<Complex, 2> out{};
  if (zn2 < 1e-280) {
    for (int i = 0; i < k; ++i) out[static_cast<std::size_t>(i)] = s * v[static_cast<std::size_t>(i)];
    return out;
  }
  Complex ip(0, 0);
  for (int i = 0; i < k; ++i) ip += std::conj(z[static_cast<std::size_t>(i)]) * v[static_cast<std::size_t>(i)];
  for (int i = 0; i < k; ++i) {
    const Complex along = ip * z[static_cast<std::size_t>(i)] / zn2;
    out[static_cast<std::size_t>(i)] = s * (v[static_cast<std::size_t>(i)] - along) + s * s * along;
  }
  return out;
}

// Top right-singular vector of the whitened differential.
std::array<Complex, 2> top_singular_direction(const TangentMatrix& tm) {
  if (tm.k == 1) return {Complex(1, 0), Complex(0, 0)};
  const auto& a = tm.entries;
  // B = A^dagger A
  Complex b00(0, 0), b01(0, 0), b11(0, 0);
  for (int i = 0; i < 2; ++i) {
    b00 += std::conj(a[static_cast<std::size_t>(i)][0]) * a[static_cast<std::size_t>(i)][0];
    b01 += std::conj(a[static_cast<std::size_t>(i)][0]) * a[static_cast<std::size_t>(i)][1];
    b11 += std::conj(a[static_cast<std::size_t>(i)][1]) * a[static_cast<std::size_t>(i)][1];
  }
  const double lambda = tm.op_norm * tm.op_norm;
  // eigenvector of [[b00, b01], [conj(b01), b11]] for lambda
  std::array<Complex, 2> v{b01, Complex(lambda, 0) - b00};
  double n = std::sqrt(std::norm(v[0]) + std::norm(v[1]));
  if (n < 1e-12) {
    v = {Complex(lambda, 0) - b11, std::conj(b01)};
    n = std::sqrt(std::norm(v[0]) + std::norm(v[1]));
  }
  if (n < 1e-12) return {Complex(1, 0), Complex(0, 0)};
  return {v[0] / n, v[1] / n};
}

ProjectivePoint random_point(int k, RngStream& rng) {
  if (k == 1) return ProjectivePoint::affine_p1(rng.uniform(0.3, 1.8) * rng.unit_complex());
  return ProjectivePoint::affine_p2(rng.uniform(0.3, 1.5) * rng.unit_complex(),
                                    rng.uniform(0.3, 1.5) * rng.unit_complex());
}

}  // namespace

TEST_CASE("evaluate: known fixed points and normalization") {
  const MapModel z2 = load("z2");
  const auto fixed = z2.evaluate(ProjectivePoint::affine_p1({1, 0}));
  CHECK(chordal_distance(fixed, ProjectivePoint::affine_p1({1, 0})) < 1e-14);

  const auto img = z2.evaluate(ProjectivePoint::affine_p1({2, 0}));
  CHECK(img.chart_index() == 0);
  CHECK(std::abs(img.coord(1) - Complex(0.25, 0)) < 1e-14);

  const MapModel cheb = load("chebyshev");
  const auto two = cheb.evaluate(ProjectivePoint::affine_p1({2, 0}));
  CHECK(chordal_distance(two, ProjectivePoint::affine_p1({2, 0})) < 1e-14);
}

TEST_CASE("evaluate throws at an indeterminacy point of a degenerate map") {
  // [z t : t^2] degrades at [1:0]
  MapModel::Definition def;
  def.id = "degenerate";
  def.kind = MapKind::rational_p1;
  def.dim = 1;
  def.degree = 2;
  def.components = {HomPoly(2, 2, {{Complex(1, 0), {1, 1, 0}}}),
                    HomPoly(2, 2, {{Complex(1, 0), {0, 2, 0}}})};
  const MapModel m = MapModel::create(def, MapModel::Validation::lenient);
  CHECK_THROWS_AS((void)m.evaluate(ProjectivePoint::infinity_p1()), AllComponentsVanish);
}

TEST_CASE("differential: conformal factor of z^2 and the critical point") {
  const MapModel z2 = load("z2");
  const TangentMatrix at_one = z2.differential(ProjectivePoint::affine_p1({1, 0}));
  CHECK(at_one.op_norm == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(at_one.inv_norm == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(at_one.fs_jacobian == doctest::Approx(4.0).epsilon(1e-12));

  const TangentMatrix at_zero = z2.differential(ProjectivePoint::affine_p1({0, 0}));
  CHECK(at_zero.fs_jacobian == doctest::Approx(0.0));
  CHECK(std::isinf(at_zero.inv_norm));
}

TEST_CASE("differential: product map on P^2 at the symmetric point") {
  const MapModel sq = load("p2_squares");
  const TangentMatrix d = sq.differential(ProjectivePoint::affine_p2({1, 0}, {1, 0}));
  CHECK(d.op_norm == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(d.fs_jacobian == doctest::Approx(16.0).epsilon(1e-12));
}

TEST_CASE("fs_jacobian: unit circle value, critical zero, identity one") {
  const MapModel z2 = load("z2");
  RngStream rng(11);
  for (int i = 0; i < 20; ++i) {
    const auto on_circle = ProjectivePoint::affine_p1(rng.unit_complex());
    CHECK(z2.fs_jacobian(on_circle) == doctest::Approx(4.0).epsilon(1e-10));
  }
  CHECK(z2.fs_jacobian(ProjectivePoint::affine_p1({0, 0})) == doctest::Approx(0.0));

  // identity map via the free differential (d_t = 1 maps are rejected by the
  // MapModel constructor)
  const std::vector<HomPoly> identity{HomPoly(2, 1, {{Complex(1, 0), {1, 0, 0}}}),
                                      HomPoly(2, 1, {{Complex(1, 0), {0, 1, 0}}})};
  for (int i = 0; i < 20; ++i) {
    const auto x = random_point(1, rng);
    CHECK(fs_differential(identity, x).fs_jacobian == doctest::Approx(1.0).epsilon(1e-10));
  }
}

TEST_CASE("preimages: square roots, critical value, product map") {
  const MapModel z2 = load("z2");
  const auto roots = z2.preimages(ProjectivePoint::affine_p1({1, 0}));
  REQUIRE(roots.size() == 2);
  for (const auto& [w, mult] : roots) {
    CHECK(mult == 1);
    CHECK(std::min(chordal_distance(w, ProjectivePoint::affine_p1({1, 0})),
                   chordal_distance(w, ProjectivePoint::affine_p1({-1, 0}))) < 1e-10);
  }

  const auto at_zero = z2.preimages(ProjectivePoint::affine_p1({0, 0}));
  REQUIRE(at_zero.size() == 1);
  CHECK(at_zero[0].second == 2);
  CHECK(chordal_distance(at_zero[0].first, ProjectivePoint::affine_p1({0, 0})) < 1e-12);

  const MapModel sq = load("p2_squares");
  const auto four = sq.preimages(ProjectivePoint::affine_p2({1, 0}, {1, 0}));
  REQUIRE(four.size() == 4);
  for (const auto& [w, mult] : four) {
    CHECK(mult == 1);
    CHECK(std::abs(std::abs(w.coord(0)) - 1.0) < 1e-12);
    CHECK(std::abs(std::abs(w.coord(1)) - 1.0) < 1e-12);
  }
}

TEST_CASE("preimage exactness: counts reach d_t and residuals stay below 1e-9") {
  RngStream rng(12);
  for (const auto& name : {"z2", "chebyshev", "lattes4", "quad_pert", "p2_squares"}) {
    const MapModel map = load(name);
    for (int trial = 0; trial < 100; ++trial) {
      const ProjectivePoint y = random_point(map.dim(), rng);
      int total = 0;
      for (const auto& [w, mult] : map.preimages(y)) {
        total += mult;
        CHECK(chordal_distance(map.evaluate(w), y) <= 1e-9);
      }
      CHECK(total == map.topological_degree());
    }
  }
}

TEST_CASE("skew products solve preimages componentwise") {
  MapModel::Definition def;
  def.id = "skew";
  def.kind = MapKind::polynomial_skew;
  def.dim = 2;
  def.degree = 2;
  // (z, w) -> (z^2, w^2 + 0.3 z^2)
  def.components = {HomPoly(3, 2, {{Complex(1, 0), {2, 0, 0}}}),
                    HomPoly(3, 2, {{Complex(1, 0), {0, 2, 0}}, {Complex(0.3, 0), {2, 0, 0}}}),
                    HomPoly(3, 2, {{Complex(1, 0), {0, 0, 2}}})};
  const MapModel skew = MapModel::create(def);
  CHECK(skew.topological_degree() == 4);
  RngStream rng(13);
  for (int trial = 0; trial < 50; ++trial) {
    const ProjectivePoint y = random_point(2, rng);
    int total = 0;
    for (const auto& [w, mult] : skew.preimages(y)) {
      total += mult;
      CHECK(chordal_distance(skew.evaluate(w), y) <= 1e-9);
    }
    CHECK(total == 4);
  }
  CHECK_THROWS_AS((void)skew.preimages(ProjectivePoint::from_homogeneous(
                      2, {Complex(1, 0), Complex(0.5, 0), Complex(0, 0)})),
                  UnsupportedOperation);
}

TEST_CASE("check_degrees accepts the bundled maps and flags a fake degree") {
  CHECK(load("z2").check_degrees().d_t_numeric == 2);
  const auto sq = load("p2_squares").check_degrees();
  CHECK(sq.d_t_numeric == 4);
  CHECK(sq.hypothesis_ok);
  CHECK(load("p2_squares").dyn_degrees()[0] == doctest::Approx(2.0));

  // components sharing the factor z behave like degree 2, not the declared 3
  MapModel::Definition def;
  def.id = "shared_factor";
  def.kind = MapKind::rational_p1;
  def.dim = 1;
  def.degree = 3;
  def.components = {HomPoly(2, 3, {{Complex(1, 0), {3, 0, 0}}}),
                    HomPoly(2, 3, {{Complex(1, 0), {1, 2, 0}}})};
  const MapModel bad = MapModel::create(def, MapModel::Validation::lenient);
  CHECK_THROWS_AS((void)bad.check_degrees(), DegreeMismatch);
  // strict construction rejects it outright
  CHECK_THROWS_AS((void)MapModel::create(def, MapModel::Validation::strict), HolomorphyViolation);
}

TEST_CASE("hypothesis guard rejects degree-1 maps") {
  MapModel::Definition def;
  def.id = "identity";
  def.kind = MapKind::rational_p1;
  def.dim = 1;
  def.degree = 1;
  def.components = {HomPoly(2, 1, {{Complex(1, 0), {1, 0, 0}}}),
                    HomPoly(2, 1, {{Complex(1, 0), {0, 1, 0}}})};
  CHECK_THROWS_AS((void)MapModel::create(def), HypothesisViolation);
}

TEST_CASE("distance_to_J: point list on P^1") {
  const MapModel z2 = load("z2");
  REQUIRE(z2.j_points().size() == 2);  // {0, infinity}
  CHECK(z2.distance_to_J(ProjectivePoint::affine_p1({1, 0})) ==
        doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
  CHECK(z2.distance_to_J(ProjectivePoint::affine_p1({0, 0})) == doctest::Approx(0.0));
  CHECK(z2.distance_to_J(ProjectivePoint::infinity_p1()) == doctest::Approx(0.0));
}

TEST_CASE("distance_to_J: Chebyshev exceptional points") {
  const MapModel cheb = load("chebyshev");
  // J = {0, -2, infinity}
  REQUIRE(cheb.j_points().size() == 3);
  for (const Complex target : {Complex(0, 0), Complex(-2, 0)}) {
    double best = 1.0;
    for (const auto& j : cheb.j_points()) {
      best = std::min(best, chordal_distance(j, ProjectivePoint::affine_p1(target)));
    }
    CHECK(best < 1e-9);
  }
}

TEST_CASE("distance_to_J proxy is sandwiched by the sampled distance on P^2") {
  const MapModel sq = load("p2_squares");
  // dense sample of {z w t = 0}: the three coordinate lines
  std::vector<ProjectivePoint> variety;
  RngStream vrng(14);
  for (int i = 0; i < 400; ++i) {
    const Complex a = vrng.uniform(0.05, 1.5) * vrng.unit_complex();
    variety.push_back(ProjectivePoint::from_homogeneous(2, {Complex(0, 0), a, Complex(1, 0)}));
    variety.push_back(ProjectivePoint::from_homogeneous(2, {a, Complex(0, 0), Complex(1, 0)}));
    variety.push_back(ProjectivePoint::from_homogeneous(2, {a, Complex(1, 0), Complex(0, 0)}));
  }
  RngStream rng(15);
  for (int trial = 0; trial < 1000; ++trial) {
    const ProjectivePoint x = random_point(2, rng);
    double true_dist = 1.0;
    for (const auto& v : variety) true_dist = std::min(true_dist, chordal_distance(x, v));
    const double proxy = sq.distance_to_J(x);
    CHECK(proxy <= 3.0 * true_dist);
    CHECK(proxy >= true_dist / 3.0);
  }
  // example: symmetric point against the coordinate hyperplanes
  const double at_sym = sq.distance_to_J(ProjectivePoint::affine_p2({1, 0}, {1, 0}));
  CHECK(at_sym == doctest::Approx(1.0 / std::sqrt(3.0)).epsilon(1e-9));
}

TEST_CASE("finite differences confirm the FS operator norm") {
  RngStream rng(16);
  const double t = 1e-6;
  for (const auto& name : {"z2", "chebyshev", "lattes4", "quad_pert", "p2_squares"}) {
    const MapModel map = load(name);
    int tested = 0;
    while (tested < 200) {
      const ProjectivePoint x = random_point(map.dim(), rng);
      if (map.distance_to_J(x) < 1e-3) continue;  // need smoothness at FD scale
      ++tested;
      const TangentMatrix tm = map.differential(x);
      const auto dir = unwhiten(x, top_singular_direction(tm));
      const double fd = fd_expansion(map, x, dir, t);
      CHECK(fd == doctest::Approx(tm.op_norm).epsilon(1e-5));
      // random directions never exceed the operator norm
      std::array<Complex, 2> v{rng.unit_complex(), map.dim() == 2 ? rng.unit_complex() : Complex(0, 0)};
      const double fd_rand = fd_expansion(map, x, unwhiten(x, v), t);
      CHECK(fd_rand <= tm.op_norm * (1 + 1e-5));
      CHECK(fd_rand >= (1.0 / tm.inv_norm) * (1 - 1e-5));
    }
  }
}

TEST_CASE("Jacobian chain rule against the composed map") {
  RngStream rng(17);
  for (const auto& name : {"z2", "chebyshev", "p2_squares"}) {
    const MapModel map = load(name);
    const MapModel map2 = map.iterate_composed(2);
    CHECK(map2.topological_degree() == map.topological_degree() * map.topological_degree());
    int tested = 0;
    while (tested < 100) {
      const ProjectivePoint x = random_point(map.dim(), rng);
      if (map.distance_to_J(x) < 1e-3) continue;
      const ProjectivePoint fx = map.evaluate(x);
      if (map.distance_to_J(fx) < 1e-3) continue;
      ++tested;
      const double lhs = map2.fs_jacobian(x);
      const double rhs = map.fs_jacobian(x) * map.fs_jacobian(fx);
      CHECK(lhs == doctest::Approx(rhs).epsilon(1e-8));
    }
  }
}

TEST_CASE("critical polynomial tracks the FS Jacobian in rank near the critical set") {
  // Both quantities vanish exactly on C; the coherence claim is about the
  // approach, so the grid probes geometric distances 1e-8..1e-1 from C.
  RngStream rng(18);
  for (const auto& name : {"z2", "chebyshev", "lattes4", "quad_pert"}) {
    const MapModel map = load(name);
    // critical points = roots of the Wronskian
    std::vector<ProjectivePoint> crit;
    {
      auto coeffs = map.critical_poly().dehomogenize_p1().coeffs();
      const double scale = 1e-12 * std::max(map.critical_poly().coeff_norm(), 1e-300);
      while (coeffs.size() > 1 && std::abs(coeffs.back()) < scale) coeffs.pop_back();
      for (const auto& [root, mult] : cluster_roots(poly_roots(Poly1(coeffs)))) {
        (void)mult;
        crit.push_back(ProjectivePoint::affine_p1(root));
      }
      if (static_cast<int>(coeffs.size() - 1) < map.critical_poly().degree()) {
        crit.push_back(ProjectivePoint::infinity_p1());
      }
    }
    REQUIRE(!crit.empty());
    // rank coherence holds componentwise (the FS conformal factor shifts the
    // power-law constants between critical points)
    for (const auto& c : crit) {
      std::vector<double> crit_abs, jac;
      const TangentFrame frame = tangent_frame(c);
      for (int i = 0; i < 200; ++i) {
        const double t = std::pow(10.0, -rng.uniform(1.0, 8.0));
        const ProjectivePoint x = geodesic_point(c, frame.basis[0], t);
        crit_abs.push_back(std::abs(map.critical_poly().eval(x.coords())));
        jac.push_back(map.fs_jacobian(x));
      }
      CHECK(spearman(crit_abs, jac) > 0.99);
    }
  }

  // P^2 product map: probe one coordinate line of {z w t = 0} at a fixed
  // anchor point
  const MapModel sq = load("p2_squares");
  std::vector<double> crit_abs, jac;
  const ProjectivePoint anchor =
      ProjectivePoint::from_homogeneous(2, {Complex(0, 0), Complex(0.7, 0.2), Complex(1, 0)});
  const TangentFrame frame = tangent_frame(anchor);
  for (int i = 0; i < 400; ++i) {
    const double t = std::pow(10.0, -rng.uniform(1.0, 8.0));
    const ProjectivePoint x = geodesic_point(anchor, frame.basis[0], t);
    crit_abs.push_back(std::abs(sq.critical_poly().eval(x.coords())));
    jac.push_back(sq.fs_jacobian(x));
  }
  CHECK(spearman(crit_abs, jac) > 0.99);
}

TEST_CASE("map json schema violations raise ConfigError") {
  CHECK_THROWS_AS((void)MapModel::from_json_text("{not json"), ConfigError);
  CHECK_THROWS_AS((void)MapModel::from_json_text(R"({"kind":"nope","dimension":1,"degree":2,"components":[]})"),
                  ConfigError);
  CHECK_THROWS_AS((void)MapModel::from_json_text(
                      R"({"kind":"rational_p1","dimension":1,"degree":2,"components":[[[1,0,2,0]]]})"),
                  ConfigError);
}
