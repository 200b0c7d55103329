#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "eqdim/map_model.hpp"
#include "eqdim/projective.hpp"

namespace eqdim {

// Finite truncation (x_0, x_{-1}, ..., x_{-N}) of a natural-extension point.
// Residuals are the per-step polish errors dist(f(x_{-j-1}), x_{-j}), all
// <= 1e-9; constructed orbits keep chordal distance >= 1e-12 from J.
struct BackwardOrbit {
  std::vector<ProjectivePoint> points;  // x_0, x_{-1}, ..., x_{-N}
  std::vector<double> residuals;
  std::uint64_t rng_seed = 0;

  int depth() const { return static_cast<int>(points.size()) - 1; }
  const ProjectivePoint& at_depth(int n) const { return points[static_cast<std::size_t>(n)]; }
};

// Weighted point set approximating the equilibrium measure: count points,
// each an n-fold backward image of seed_point under uniform branch choice.
struct SampleCloud {
  std::vector<ProjectivePoint> points;
  int depth = 0;
  ProjectivePoint seed_point;
  std::uint64_t rng_seed = 0;
  std::string map_id;

  int count() const { return static_cast<int>(points.size()); }
};

// Levels this close to the seed are excluded from ergodic averages when a
// cloud exposes intermediate walk levels (early levels remember the seed).
inline int burn_in_levels(int depth) { return std::max(10, depth / 2); }

struct CloudOptions {
  int workers = 1;
  // Also collect walk levels past the burn-in cutoff, not only the deepest
  // point. Off by default: the deepest level is the cleanest mu-sample.
  bool include_intermediate_levels = false;
};

// count independent backward walks of length depth from seed; at every step
// one of the d_t preimages is chosen uniformly with multiplicity. Walks
// passing within 1e-12 of J are discarded and redrawn; more than 50%
// discards raises ExceptionalSeed.
SampleCloud sample_backward_cloud(const MapModel& map, const ProjectivePoint& seed,
                                  int depth, int count, std::uint64_t rng_seed,
                                  const CloudOptions& options = {});

// Single backward walk of length depth; throws OrbitHitsJ when a step lands
// within 1e-12 of J. Replayable from (start, depth, rng_seed).
BackwardOrbit sample_backward_orbit(const MapModel& map, const ProjectivePoint& start,
                                    int depth, std::uint64_t rng_seed);

// Fraction of cloud points within chordal distance r of center;
// exclude_index (if >= 0) implements leave-one-out counting.
double ball_mass(const SampleCloud& cloud, const ProjectivePoint& center, double r,
                 int exclude_index = -1);

// Largest pairwise chordal distance over a deterministic subsample.
double support_diameter(const SampleCloud& cloud);

void cloud_to_csv(const SampleCloud& cloud, const std::string& path);
void orbit_to_csv(const BackwardOrbit& orbit, const std::string& map_id,
                  const std::string& path);

}  // namespace eqdim
