#include "eqdim/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <thread>

#include "eqdim/errors.hpp"
#include "eqdim/rng.hpp"

namespace eqdim {

namespace {

constexpr double kJExclusion = 1e-12;

// One uniform branch choice among the d_t preimages (with multiplicity).
// polish drives the chosen preimage to machine accuracy; orbit replays are
// forward-amplified by e^{n chi}, so certification orbits need it.
ProjectivePoint backward_step(const MapModel& map, const ProjectivePoint& x, RngStream& rng,
                              bool polish) {
  const auto pre = map.preimages(x);
  int total = 0;
  for (const auto& [w, mult] : pre) {
    (void)w;
    total += mult;
  }
  if (total != map.topological_degree()) {
    throw RootSolverFailure("preimage count does not reach d_t");
  }
  int pick = rng.uniform_int(total);
  const ProjectivePoint* chosen = &pre.back().first;
  for (const auto& [w, mult] : pre) {
    pick -= mult;
    if (pick < 0) {
      chosen = &w;
      break;
    }
  }
  if (!polish) return *chosen;
  const NewtonResult nr = newton_inverse_step(map, x, *chosen, 1e-9, 10);
  return nr.converged ? nr.point : *chosen;
}

struct WalkResult {
  std::vector<ProjectivePoint> points;  // x_0 .. x_{-depth}
  std::vector<double> residuals;
  bool ok = false;
};

WalkResult run_walk(const MapModel& map, const ProjectivePoint& start, int depth,
                    RngStream& rng) {
  WalkResult walk;
  walk.points.reserve(static_cast<std::size_t>(depth) + 1);
  walk.points.push_back(start);
  for (int step = 0; step < depth; ++step) {
    ProjectivePoint next;
    try {
      next = backward_step(map, walk.points.back(), rng, /*polish=*/false);
    } catch (const Error&) {
      return walk;  // ill-conditioned step: caller redraws
    }
    if (map.distance_to_J(next) < kJExclusion) return walk;
    walk.residuals.push_back(chordal_distance(map.evaluate(next), walk.points.back()));
    walk.points.push_back(next);
  }
  walk.ok = true;
  return walk;
}

void write_point_csv_row(std::FILE* f, const ProjectivePoint& p, const char* prefix) {
  const auto cc = p.chart_coords();
  if (p.dim() == 1) {
    std::fprintf(f, "%s%d,%.17g,%.17g\n", prefix, p.chart_index(), cc[0].real(), cc[0].imag());
  } else {
    std::fprintf(f, "%s%d,%.17g,%.17g,%.17g,%.17g\n", prefix, p.chart_index(), cc[0].real(),
                 cc[0].imag(), cc[1].real(), cc[1].imag());
  }
}

}  // namespace

SampleCloud sample_backward_cloud(const MapModel& map, const ProjectivePoint& seed,
                                  int depth, int count, std::uint64_t rng_seed,
                                  const CloudOptions& options) {
  if (count <= 0) throw ConfigError("cloud count must be positive");
  if (map.distance_to_J(seed) < kJExclusion) {
    throw ExceptionalSeed("seed point lies on the exceptional set");
  }

  SampleCloud cloud;
  cloud.depth = depth;
  cloud.seed_point = seed;
  cloud.rng_seed = rng_seed;
  cloud.map_id = map.id();

  constexpr int kMaxAttemptsPerPoint = 64;
  std::vector<std::vector<ProjectivePoint>> slots(static_cast<std::size_t>(count));
  std::vector<int> attempts_used(static_cast<std::size_t>(count), 0);

  auto sample_one = [&](int index) {
    for (int attempt = 0; attempt < kMaxAttemptsPerPoint; ++attempt) {
      RngStream rng = RngStream::derive(
          rng_seed, "cloud", (static_cast<std::uint64_t>(index) << 8) | static_cast<std::uint64_t>(attempt));
      WalkResult walk = run_walk(map, seed, depth, rng);
      attempts_used[static_cast<std::size_t>(index)] = attempt + 1;
      if (!walk.ok) continue;
      auto& slot = slots[static_cast<std::size_t>(index)];
      slot.push_back(walk.points.back());
      if (options.include_intermediate_levels) {
        const int cutoff = burn_in_levels(depth);
        for (int level = cutoff + 1; level < depth; ++level) {
          slot.push_back(walk.points[static_cast<std::size_t>(level)]);
        }
      }
      return;
    }
  };

  const int workers = std::max(1, options.workers);
  if (workers == 1 || count < 64) {
    for (int i = 0; i < count; ++i) sample_one(i);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&, w]() {
        for (int i = w; i < count; i += workers) sample_one(i);
      });
    }
    for (auto& t : pool) t.join();
  }

  long discarded = 0;
  long produced = 0;
  for (int i = 0; i < count; ++i) {
    discarded += attempts_used[static_cast<std::size_t>(i)] - (slots[static_cast<std::size_t>(i)].empty() ? 0 : 1);
    if (!slots[static_cast<std::size_t>(i)].empty()) ++produced;
  }
  if (produced < count || discarded > produced) {
    throw ExceptionalSeed("more than half of the backward walks were discarded");
  }
  for (int i = 0; i < count; ++i) {
    for (const auto& p : slots[static_cast<std::size_t>(i)]) cloud.points.push_back(p);
  }
  return cloud;
}

BackwardOrbit sample_backward_orbit(const MapModel& map, const ProjectivePoint& start,
                                    int depth, std::uint64_t rng_seed) {
  if (map.distance_to_J(start) < kJExclusion) {
    throw OrbitHitsJ("orbit start lies on the exceptional set");
  }
  RngStream rng = RngStream::derive(rng_seed, "orbit", 0);
  BackwardOrbit orbit;
  orbit.rng_seed = rng_seed;
  orbit.points.reserve(static_cast<std::size_t>(depth) + 1);
  orbit.points.push_back(start);
  for (int step = 0; step < depth; ++step) {
    const ProjectivePoint next = backward_step(map, orbit.points.back(), rng, /*polish=*/true);
    if (map.distance_to_J(next) < kJExclusion) {
      throw OrbitHitsJ("backward orbit stepped within 1e-12 of J");
    }
    orbit.residuals.push_back(chordal_distance(map.evaluate(next), orbit.points.back()));
    orbit.points.push_back(next);
  }
  return orbit;
}

double ball_mass(const SampleCloud& cloud, const ProjectivePoint& center, double r,
                 int exclude_index) {
  if (cloud.points.empty()) throw ConfigError("ball_mass on an empty cloud");
  long inside = 0;
  long total = 0;
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    if (static_cast<int>(i) == exclude_index) continue;
    ++total;
    if (chordal_distance(cloud.points[i], center) <= r) ++inside;
  }
  return total > 0 ? static_cast<double>(inside) / static_cast<double>(total) : 0.0;
}

double support_diameter(const SampleCloud& cloud) {
  const std::size_t n = cloud.points.size();
  if (n < 2) return 0.0;
  const std::size_t stride = std::max<std::size_t>(1, n / 512);
  double best = 0.0;
  for (std::size_t i = 0; i < n; i += stride) {
    for (std::size_t j = i + stride; j < n; j += stride) {
      best = std::max(best, chordal_distance(cloud.points[i], cloud.points[j]));
    }
  }
  return best;
}

void cloud_to_csv(const SampleCloud& cloud, const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw IoError("cannot open for writing: " + path);
  const auto sc = cloud.seed_point.chart_coords();
  std::fprintf(f, "# map_id=%s depth=%d count=%d rng_seed=%llu seed_chart=%d seed=%.17g%+.17gi\n",
               cloud.map_id.c_str(), cloud.depth, cloud.count(),
               static_cast<unsigned long long>(cloud.rng_seed), cloud.seed_point.chart_index(),
               sc[0].real(), sc[0].imag());
  if (cloud.seed_point.dim() == 1) {
    std::fprintf(f, "chart,re0,im0\n");
  } else {
    std::fprintf(f, "chart,re0,im0,re1,im1\n");
  }
  for (const auto& p : cloud.points) write_point_csv_row(f, p, "");
  std::fclose(f);
}

void orbit_to_csv(const BackwardOrbit& orbit, const std::string& map_id,
                  const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw IoError("cannot open for writing: " + path);
  std::fprintf(f, "# map_id=%s depth=%d rng_seed=%llu\n", map_id.c_str(), orbit.depth(),
               static_cast<unsigned long long>(orbit.rng_seed));
  if (!orbit.points.empty() && orbit.points[0].dim() == 1) {
    std::fprintf(f, "depth,residual,chart,re0,im0\n");
  } else {
    std::fprintf(f, "depth,residual,chart,re0,im0,re1,im1\n");
  }
  for (std::size_t i = 0; i < orbit.points.size(); ++i) {
    const double res = i == 0 ? 0.0 : orbit.residuals[i - 1];
    char prefix[64];
    std::snprintf(prefix, sizeof(prefix), "%zu,%.17g,", i, res);
    write_point_csv_row(f, orbit.points[i], prefix);
  }
  std::fclose(f);
}

}  // namespace eqdim
