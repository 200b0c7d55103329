#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "eqdim/errors.hpp"
#include "eqdim/map_model.hpp"
#include "eqdim/sampler.hpp"
#include "eqdim/stats.hpp"

using namespace eqdim;

namespace {

const std::string kMapsDir = std::string(EQDIM_SOURCE_DIR) + "/maps/";

MapModel load(const std::string& name) {
  return MapModel::from_json_file(kMapsDir + name + ".json");
}

double abs_affine(const ProjectivePoint& p) { return std::abs(p.affine_p1_value()); }

// Euclidean distance of the affine value to the segment [-2, 2].
double dist_to_segment(const ProjectivePoint& p) {
  const Complex z = p.affine_p1_value();
  const double x = std::clamp(z.real(), -2.0, 2.0);
  return std::abs(z - Complex(x, 0));
}

}  // namespace

TEST_CASE("z^2 cloud collapses onto the unit circle") {
  const MapModel z2 = load("z2");
  const auto cloud =
      sample_backward_cloud(z2, ProjectivePoint::affine_p1({2, 0}), 30, 4000, 2024);
  REQUIRE(cloud.count() == 4000);
  double worst = 0.0;
  for (const auto& p : cloud.points) {
    worst = std::max(worst, std::abs(abs_affine(p) - 1.0));
  }
  CHECK(worst < 0.01);
}

TEST_CASE("depth-0 cloud repeats the seed") {
  const MapModel z2 = load("z2");
  const auto seed = ProjectivePoint::affine_p1({2, 0});
  const auto cloud = sample_backward_cloud(z2, seed, 0, 50, 7);
  REQUIRE(cloud.count() == 50);
  for (const auto& p : cloud.points) CHECK(chordal_distance(p, seed) < 1e-15);
}

TEST_CASE("Chebyshev cloud matches the arcsine law") {
  const MapModel cheb = load("chebyshev");
  const auto cloud =
      sample_backward_cloud(cheb, ProjectivePoint::affine_p1({5, 0}), 30, 10000, 99);

  double worst = 0.0;
  for (const auto& p : cloud.points) worst = std::max(worst, dist_to_segment(p));
  CHECK(worst < 1e-3);

  // 20 equal-probability bins of the arcsine law on [-2, 2]:
  // CDF(x) = 1/2 + asin(x/2)/pi.
  std::array<long, 20> counts{};
  for (const auto& p : cloud.points) {
    const double x = std::clamp(p.affine_p1_value().real(), -2.0, 2.0);
    const double u = 0.5 + std::asin(x / 2.0) / 3.14159265358979323846;
    int bin = static_cast<int>(u * 20.0);
    bin = std::clamp(bin, 0, 19);
    ++counts[static_cast<std::size_t>(bin)];
  }
  const double expected = cloud.count() / 20.0;
  double stat = 0.0;
  for (long c : counts) stat += (c - expected) * (c - expected) / expected;
  const double p_value = chi2_sf(stat, 19);
  CHECK(p_value > 0.01);
}

TEST_CASE("backward orbits stay consistent under forward iteration") {
  const MapModel z2 = load("z2");
  const auto orbit = sample_backward_orbit(z2, ProjectivePoint::affine_p1({0, 1}), 10, 5);
  REQUIRE(orbit.depth() == 10);
  for (double r : orbit.residuals) CHECK(r <= 1e-9);
  // angle-halving dynamics keep the orbit on the unit circle
  for (const auto& p : orbit.points) CHECK(std::abs(abs_affine(p) - 1.0) < 1e-12);
  const ProjectivePoint forward = z2.iterate(orbit.points.back(), orbit.depth());
  CHECK(chordal_distance(forward, orbit.points.front()) < 1e-6);

  const MapModel lattes = load("lattes4");
  const auto orbit2 = sample_backward_orbit(lattes, ProjectivePoint::affine_p1({0.31, 0.4}), 12, 6);
  const ProjectivePoint forward2 = lattes.iterate(orbit2.points.back(), orbit2.depth());
  CHECK(chordal_distance(forward2, orbit2.points.front()) < 1e-6);
}

TEST_CASE("orbits are replayable from the recorded seed") {
  const MapModel lattes = load("lattes4");
  const auto start = ProjectivePoint::affine_p1({0.31, 0.4});
  const auto a = sample_backward_orbit(lattes, start, 15, 77);
  const auto b = sample_backward_orbit(lattes, start, 15, a.rng_seed);
  REQUIRE(a.points.size() == b.points.size());
  for (std::size_t i = 0; i < a.points.size(); ++i) {
    CHECK(chordal_distance(a.points[i], b.points[i]) == 0.0);
  }
}

TEST_CASE("clouds are bit-identical for a fixed seed") {
  const MapModel z2 = load("z2");
  const auto seed = ProjectivePoint::affine_p1({2, 0});
  const auto a = sample_backward_cloud(z2, seed, 12, 300, 31);
  const auto b = sample_backward_cloud(z2, seed, 12, 300, 31);
  REQUIRE(a.count() == b.count());
  for (int i = 0; i < a.count(); ++i) {
    for (int j = 0; j <= 1; ++j) {
      CHECK(a.points[static_cast<std::size_t>(i)].coord(j) ==
            b.points[static_cast<std::size_t>(i)].coord(j));
    }
  }
}

TEST_CASE("exceptional seeds are rejected") {
  const MapModel z2 = load("z2");
  CHECK_THROWS_AS((void)sample_backward_cloud(z2, ProjectivePoint::affine_p1({0, 0}), 5, 10, 1),
                  ExceptionalSeed);
  CHECK_THROWS_AS((void)sample_backward_orbit(z2, ProjectivePoint::infinity_p1(), 5, 1),
                  OrbitHitsJ);
}

TEST_CASE("ball_mass: trivial radii and the circle arc oracle") {
  const MapModel z2 = load("z2");
  const auto cloud =
      sample_backward_cloud(z2, ProjectivePoint::affine_p1({2, 0}), 30, 4000, 2025);
  const auto center = ProjectivePoint::affine_p1({1, 0});

  CHECK(ball_mass(cloud, center, 1.0) == doctest::Approx(1.0));
  CHECK(ball_mass(cloud, center, 0.0) == doctest::Approx(0.0));

  // arc-length oracle: mass of a chordal ball of radius r centered on the
  // circle is 2 asin(r) / pi
  for (const double r : {0.05, 0.1, 0.2}) {
    const double expected = 2.0 * std::asin(r) / 3.14159265358979323846;
    const double se = std::sqrt(expected * (1.0 - expected) / cloud.count());
    CHECK(std::abs(ball_mass(cloud, center, r) - expected) <= 3.0 * se);
  }
}

TEST_CASE("cloud masses are f-invariant") {
  const MapModel z2 = load("z2");
  const auto cloud =
      sample_backward_cloud(z2, ProjectivePoint::affine_p1({2, 0}), 30, 10000, 11);
  SampleCloud pushed = cloud;
  for (auto& p : pushed.points) p = z2.evaluate(p);

  RngStream rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    const auto& center = cloud.points[static_cast<std::size_t>(rng.uniform_int(cloud.count()))];
    const double r = rng.uniform(0.05, 0.3);
    const double a = ball_mass(cloud, center, r);
    const double b = ball_mass(pushed, center, r);
    const double p = std::max(1.0 / cloud.count(), 0.5 * (a + b));
    const double se = std::sqrt(2.0 * p * (1.0 - p) / cloud.count());
    CHECK(std::abs(a - b) <= 4.0 * se);
  }
}

TEST_CASE("cloud masses are seed independent") {
  const MapModel cheb = load("chebyshev");
  const auto cloud_a =
      sample_backward_cloud(cheb, ProjectivePoint::affine_p1({5, 0}), 30, 8000, 13);
  const auto cloud_b =
      sample_backward_cloud(cheb, ProjectivePoint::affine_p1({3, 1}), 30, 8000, 14);
  RngStream rng(15);
  for (int trial = 0; trial < 20; ++trial) {
    const auto& center = cloud_a.points[static_cast<std::size_t>(rng.uniform_int(cloud_a.count()))];
    const double r = rng.uniform(0.05, 0.3);
    const double a = ball_mass(cloud_a, center, r);
    const double b = ball_mass(cloud_b, center, r);
    const double p = std::max(1.0 / cloud_a.count(), 0.5 * (a + b));
    const double se = std::sqrt(2.0 * p * (1.0 - p) / cloud_a.count());
    CHECK(std::abs(a - b) <= 4.0 * se);
  }
}

TEST_CASE("branch preimages of a ball carry mass(B)/d_t each") {
  const MapModel z2 = load("z2");
  const auto cloud =
      sample_backward_cloud(z2, ProjectivePoint::affine_p1({2, 0}), 30, 10000, 16);
  const auto center = ProjectivePoint::affine_p1(std::polar(1.0, 0.7));
  const double r = 0.1;
  const auto branches = z2.preimages(center);
  REQUIRE(branches.size() == 2);

  std::array<long, 2> counts{0, 0};
  long in_ball = 0;
  for (const auto& x : cloud.points) {
    if (chordal_distance(z2.evaluate(x), center) > r) continue;
    ++in_ball;
    const double d0 = chordal_distance(x, branches[0].first);
    const double d1 = chordal_distance(x, branches[1].first);
    ++counts[d0 < d1 ? 0 : 1];
  }
  const double expected = 0.5 * static_cast<double>(in_ball);
  const double se = std::sqrt(std::max(expected, 1.0));
  CHECK(std::abs(counts[0] - expected) <= 4.0 * se);
  CHECK(std::abs(counts[1] - expected) <= 4.0 * se);
}

TEST_CASE("intermediate levels obey the burn-in cutoff") {
  const MapModel z2 = load("z2");
  CloudOptions opts;
  opts.include_intermediate_levels = true;
  const int depth = 24;
  const auto cloud =
      sample_backward_cloud(z2, ProjectivePoint::affine_p1({2, 0}), depth, 100, 17, opts);
  // per walk: the deepest point plus the levels past burn_in(depth)
  const int cutoff = burn_in_levels(depth);
  const int per_walk = 1 + (depth - 1 - cutoff);
  CHECK(cloud.count() == 100 * per_walk);
  for (const auto& p : cloud.points) {
    CHECK(std::abs(abs_affine(p) - 1.0) < 0.01);  // everything past burn-in sits near the circle
  }
}

TEST_CASE("cloud and orbit exports write parseable CSV") {
  namespace fs = std::filesystem;
  const MapModel z2 = load("z2");
  const auto tmp = fs::temp_directory_path() / "eqdim_sampler_test";
  fs::create_directories(tmp);
  const auto cloud = sample_backward_cloud(z2, ProjectivePoint::affine_p1({2, 0}), 8, 50, 18);
  cloud_to_csv(cloud, (tmp / "cloud.csv").string());
  const auto orbit = sample_backward_orbit(z2, ProjectivePoint::affine_p1({0, 1}), 8, 19);
  orbit_to_csv(orbit, z2.id(), (tmp / "orbit.csv").string());
  CHECK(fs::file_size(tmp / "cloud.csv") > 100);
  CHECK(fs::file_size(tmp / "orbit.csv") > 100);
  fs::remove_all(tmp);
}
