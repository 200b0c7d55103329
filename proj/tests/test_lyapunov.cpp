#include <doctest.h>

#include <cmath>

#include "eqdim/errors.hpp"
#include "eqdim/lyapunov.hpp"
#include "eqdim/map_model.hpp"
#include "eqdim/sampler.hpp"

using namespace eqdim;

namespace {

const std::string kMapsDir = std::string(EQDIM_SOURCE_DIR) + "/maps/";
const double kLog2 = std::log(2.0);

MapModel load(const std::string& name) {
  return MapModel::from_json_file(kMapsDir + name + ".json");
}

SampleCloud circle_cloud(const MapModel& map, int count, std::uint64_t seed) {
  return sample_backward_cloud(map, ProjectivePoint::affine_p1({2, 0}), 30, count, seed);
}

}  // namespace

TEST_CASE("z^2 spectrum is exactly log 2 on the circle") {
  const MapModel z2 = load("z2");
  const auto cloud = circle_cloud(z2, 1000, 1);
  const LyapunovEstimate est = cocycle_spectrum(z2, cloud, 20);
  REQUIRE(est.chi.size() == 1);
  CHECK(est.chi[0] == doctest::Approx(kLog2).epsilon(0.01));
  CHECK(est.sigma == doctest::Approx(kLog2).epsilon(0.01));
  CHECK(est.paper_inequality_ok);
  CHECK(est.discards == 0);
}

TEST_CASE("Chebyshev exponent via the angle-doubling semiconjugacy") {
  // w + 1/w conjugates w -> w^2 on |w| = 1 to z -> z^2 - 2 on [-2, 2], so
  // the exponent is log 2.
  const MapModel cheb = load("chebyshev");
  const auto cloud =
      sample_backward_cloud(cheb, ProjectivePoint::affine_p1({5, 0}), 30, 4000, 2);
  const LyapunovEstimate est = cocycle_spectrum(cheb, cloud, 20);
  CHECK(est.chi[0] == doctest::Approx(kLog2).epsilon(0.02));
  CHECK(est.sigma == doctest::Approx(kLog2).epsilon(0.02));
}

TEST_CASE("product map on P^2 has twin exponents log 2") {
  const MapModel sq = load("p2_squares");
  const auto cloud = sample_backward_cloud(
      sq, ProjectivePoint::affine_p2({1.3, 0.2}, {0.8, -1.1}), 30, 3000, 3);
  const LyapunovEstimate est = cocycle_spectrum(sq, cloud, 20);
  REQUIRE(est.chi.size() == 2);
  CHECK(est.chi[0] == doctest::Approx(kLog2).epsilon(0.02));
  CHECK(est.chi[1] == doctest::Approx(kLog2).epsilon(0.02));
  CHECK(est.sigma == doctest::Approx(2.0 * kLog2).epsilon(0.02));
}

TEST_CASE("Jacobian route: z^3 gives Sigma = log 3") {
  MapModel::Definition def;
  def.id = "z3";
  def.kind = MapKind::rational_p1;
  def.dim = 1;
  def.degree = 3;
  def.components = {HomPoly(2, 3, {{Complex(1, 0), {3, 0, 0}}}),
                    HomPoly(2, 3, {{Complex(1, 0), {0, 3, 0}}})};
  const MapModel z3 = MapModel::create(def);
  const auto cloud = circle_cloud(z3, 2000, 4);
  const JacobianSumEstimate est = sum_exponents_from_jacobian(z3, cloud);
  CHECK(est.sigma == doctest::Approx(std::log(3.0)).epsilon(0.01));

  const auto z2cloud = circle_cloud(load("z2"), 2000, 5);
  const JacobianSumEstimate est2 = sum_exponents_from_jacobian(load("z2"), z2cloud);
  CHECK(est2.sigma == doctest::Approx(kLog2).epsilon(0.01));
}

TEST_CASE("exponent inequalities hold with margins") {
  const MapModel z2 = load("z2");
  const auto est = cocycle_spectrum(z2, circle_cloud(z2, 1000, 6), 20);
  const auto report = exponent_inequality_check(z2, est);
  CHECK(report.chi1_ok);
  CHECK(report.sum_ok);
  CHECK(report.chi1_margin == doctest::Approx(0.5 * kLog2).epsilon(0.02));
  CHECK(report.sum_margin == doctest::Approx(kLog2).epsilon(0.02));

  const MapModel sq = load("p2_squares");
  const auto cloud = sample_backward_cloud(
      sq, ProjectivePoint::affine_p2({1.3, 0.2}, {0.8, -1.1}), 30, 1000, 7);
  const auto est2 = cocycle_spectrum(sq, cloud, 20);
  const auto report2 = exponent_inequality_check(sq, est2);
  CHECK(report2.chi1_ok);
  CHECK(report2.sum_ok);
  // chi_1 >= 1/2 log(4/2): margin about log 2 - 1/2 log 2
  CHECK(report2.chi1_margin == doctest::Approx(0.5 * kLog2).epsilon(0.05));
}

TEST_CASE("Lattes map sits at the minimal-exponent equality case") {
  const MapModel lattes = load("lattes4");
  const auto cloud =
      sample_backward_cloud(lattes, ProjectivePoint::affine_p1({0.31, 0.4}), 30, 4000, 8);
  const LyapunovEstimate est = cocycle_spectrum(lattes, cloud, 20);
  CHECK(est.chi[0] == doctest::Approx(0.5 * std::log(4.0)).epsilon(0.03));
  const auto report = exponent_inequality_check(lattes, est);
  CHECK(report.chi1_ok);
  // equality case: the margin vanishes up to estimator noise
  CHECK(std::abs(report.chi1_margin) < 0.03);
}

TEST_CASE("iterate consistency: the spectrum of f^2 doubles the spectrum of f") {
  for (const auto& name : {"z2", "chebyshev"}) {
    const MapModel map = load(name);
    const MapModel map2 = map.iterate_composed(2);
    const auto cloud = name == std::string("z2")
                           ? circle_cloud(map, 2000, 9)
                           : sample_backward_cloud(map, ProjectivePoint::affine_p1({5, 0}), 30,
                                                   2000, 9);
    const LyapunovEstimate est1 = cocycle_spectrum(map, cloud, 20);
    const LyapunovEstimate est2 = cocycle_spectrum(map2, cloud, 10);
    const double se = 3.0 * (2.0 * est1.chi_stderr[0] + est2.chi_stderr[0]) + 1e-9;
    CHECK(std::abs(est2.chi[0] - 2.0 * est1.chi[0]) <= se);
  }
}

TEST_CASE("sum consistency between the cocycle and Jacobian routes") {
  for (const auto& name : {"chebyshev", "lattes4"}) {
    const MapModel map = load(name);
    const auto cloud = sample_backward_cloud(
        map, ProjectivePoint::affine_p1(name == std::string("chebyshev") ? Complex(5, 0)
                                                                         : Complex(0.31, 0.4)),
        30, 3000, 10);
    const LyapunovEstimate est = cocycle_spectrum(map, cloud, 20);
    const double se = 3.0 * (est.sigma_stderr + est.jacobian_sigma_stderr) + 1e-9;
    CHECK(std::abs(est.sigma - est.jacobian_sigma) <= se);
  }
}

TEST_CASE("block-length consistency: N and 2N estimates agree") {
  const MapModel cheb = load("chebyshev");
  const auto cloud =
      sample_backward_cloud(cheb, ProjectivePoint::affine_p1({5, 0}), 30, 3000, 11);
  const LyapunovEstimate a = cocycle_spectrum(cheb, cloud, 10);
  const LyapunovEstimate b = cocycle_spectrum(cheb, cloud, 20);
  const double se = 3.0 * (a.chi_stderr[0] + b.chi_stderr[0]) + 1e-9;
  CHECK(std::abs(a.chi[0] - b.chi[0]) <= se);
}

TEST_CASE("log-distance integrability is stable under doubling the cloud") {
  const MapModel lattes = load("lattes4");
  const auto small =
      sample_backward_cloud(lattes, ProjectivePoint::affine_p1({0.31, 0.4}), 30, 2000, 12);
  const auto big =
      sample_backward_cloud(lattes, ProjectivePoint::affine_p1({0.31, 0.4}), 30, 4000, 13);
  const double a = log_distance_integrability(lattes, small);
  const double b = log_distance_integrability(lattes, big);
  CHECK(std::isfinite(a));
  CHECK(std::isfinite(b));
  CHECK(std::abs(a - b) / std::max(a, b) < 0.10);
}

TEST_CASE("clouds contaminated by the critical set raise TooManyDiscards") {
  const MapModel z2 = load("z2");
  SampleCloud cloud = circle_cloud(z2, 1000, 14);
  // plant 15% of the points on the critical point 0
  for (int i = 0; i < 150; ++i) {
    cloud.points[static_cast<std::size_t>(i)] = ProjectivePoint::affine_p1({0, 0});
  }
  CHECK_THROWS_AS((void)cocycle_spectrum(z2, cloud, 10), TooManyDiscards);
}

TEST_CASE("estimate export is well-formed JSON") {
  const MapModel z2 = load("z2");
  const auto est = cocycle_spectrum(z2, circle_cloud(z2, 500, 15), 10);
  const std::string json = lyapunov_to_json(est, z2.id());
  CHECK(json.find("\"map_id\"") != std::string::npos);
  CHECK(json.find("\"chi\"") != std::string::npos);
  CHECK(json.find("\"discards\"") != std::string::npos);
}
