#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "eqdim/dimension.hpp"
#include "eqdim/inverse_branches.hpp"
#include "eqdim/lyapunov.hpp"
#include "eqdim/map_model.hpp"
#include "eqdim/sampler.hpp"

namespace eqdim {

enum class Stage { sample, lyapunov, branches, dimension, verify };

struct RadiiConfig {
  double rho0_factor = 0.2;  // times the sampled support diameter
  double h = 0.25;
  int n_radii = 16;
};

// Single-file experiment description. rng_seed fixed implies byte-identical
// CSV/JSON artifacts at worker count 1 (wall-clock timings live in a
// separate timings.json, the one non-deterministic artifact).
struct ExperimentConfig {
  std::string map_file;
  std::set<Stage> stages{Stage::sample, Stage::lyapunov, Stage::branches, Stage::dimension,
                         Stage::verify};
  int depth = 30;
  int count = 10000;
  std::vector<int> block_lengths{5, 10, 20};
  double eps = 0.05;
  RadiiConfig radii;
  int n_orbits = 100;
  int orbit_depth = 20;
  int n_centers = 200;
  std::uint64_t rng_seed = 1;
  std::string output_dir = "out";
  int workers = 1;
  std::optional<std::pair<double, double>> seed_point_p1;       // re, im
  std::optional<std::array<double, 4>> seed_point_p2;           // re0, im0, re1, im1
  int volume_samples = 1000;

  static ExperimentConfig from_json_file(const std::string& path);
  static ExperimentConfig from_json_text(const std::string& text);
};

struct ReportRecord {
  std::string map_id;
  std::string map_file;
  std::uint64_t rng_seed = 0;
  std::vector<std::string> stages_run;
  std::map<std::string, std::string> artifacts;   // logical name -> file path
  std::map<std::string, double> wall_times_ms;    // per stage
  std::map<std::string, long> counters;           // discards, drops, etc.
  // present when the corresponding stages ran:
  std::optional<LyapunovEstimate> lyapunov;
  std::optional<DimensionEstimate> dimension;
  std::optional<BoundsVerdict> verdict;
  double rho_hat = 1.0;
  int orbits_certified = 0;
  int orbits_attempted = 0;
  std::string record_path;
};

// Executes the configured stages in dependency order, writing one
// record.json plus per-stage CSV/JSON artifacts under output_dir.
// Idempotent per (config, seed).
ReportRecord run_experiment(const ExperimentConfig& config);

enum class ReportFormat { json, csv_bundle, markdown_summary };

// json: the record itself; csv_bundle: per-stage CSVs (already written by
// the stages, re-listed in an index); markdown_summary: the bounds table
// plus a plot-ready (log rho, log mass) CSV per center.
std::vector<std::string> emit_report(const ReportRecord& record, ReportFormat format,
                                     const std::string& out_dir);

ReportRecord load_record(const std::string& path);

// Deterministic generic seed point for the backward sampler.
ProjectivePoint default_seed_point(const MapModel& map, std::uint64_t rng_seed);

std::string record_to_json(const ReportRecord& record);

}  // namespace eqdim
