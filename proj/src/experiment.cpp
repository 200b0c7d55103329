#include "eqdim/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "eqdim/errors.hpp"
#include "eqdim/stats.hpp"

namespace eqdim {

namespace fs = std::filesystem;

namespace {

Stage stage_from_string(const std::string& s) {
  if (s == "sample") return Stage::sample;
  if (s == "lyapunov") return Stage::lyapunov;
  if (s == "branches") return Stage::branches;
  if (s == "dimension") return Stage::dimension;
  if (s == "verify") return Stage::verify;
  throw ConfigError("unknown stage: " + s);
}

std::string stage_name(Stage s) {
  switch (s) {
    case Stage::sample: return "sample";
    case Stage::lyapunov: return "lyapunov";
    case Stage::branches: return "branches";
    case Stage::dimension: return "dimension";
    case Stage::verify: return "verify";
  }
  return "?";
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << text;
}

class StageTimer {
 public:
  StageTimer(ReportRecord& record, std::string name)
      : record_(record), name_(std::move(name)),
        start_(std::chrono::steady_clock::now()) {}
  ~StageTimer() {
    const auto end = std::chrono::steady_clock::now();
    record_.wall_times_ms[name_] =
        std::chrono::duration<double, std::milli>(end - start_).count();
  }

 private:
  ReportRecord& record_;
  std::string name_;
  std::chrono::steady_clock::time_point start_;
};

}  // namespace

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  ExperimentConfig c;
  try {
    c.map_file = j.at("map").get<std::string>();
    if (j.contains("stages")) {
      c.stages.clear();
      for (const auto& s : j["stages"]) c.stages.insert(stage_from_string(s.get<std::string>()));
    }
    c.depth = j.value("depth", c.depth);
    c.count = j.value("count", c.count);
    if (j.contains("block_lengths")) c.block_lengths = j["block_lengths"].get<std::vector<int>>();
    c.eps = j.value("eps", c.eps);
    if (j.contains("radii")) {
      const auto& r = j["radii"];
      c.radii.rho0_factor = r.value("rho0_factor", c.radii.rho0_factor);
      c.radii.h = r.value("h", c.radii.h);
      c.radii.n_radii = r.value("n_radii", c.radii.n_radii);
    }
    c.n_orbits = j.value("n_orbits", c.n_orbits);
    c.orbit_depth = j.value("orbit_depth", c.orbit_depth);
    c.n_centers = j.value("n_centers", c.n_centers);
    c.rng_seed = j.value("rng_seed", c.rng_seed);
    c.output_dir = j.value("output_dir", c.output_dir);
    c.workers = j.value("workers", c.workers);
    c.volume_samples = j.value("volume_samples", c.volume_samples);
    if (j.contains("seed_point")) {
      const auto& sp = j["seed_point"];
      if (sp.size() == 2) {
        c.seed_point_p1 = std::make_pair(sp[0].get<double>(), sp[1].get<double>());
      } else if (sp.size() == 4) {
        c.seed_point_p2 = std::array<double, 4>{sp[0].get<double>(), sp[1].get<double>(),
                                                sp[2].get<double>(), sp[3].get<double>()};
      } else {
        throw ConfigError("seed_point must have 2 (P1) or 4 (P2) entries");
      }
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config schema violation: ") + e.what());
  }
  if (c.depth < 0 || c.count <= 0 || c.eps <= 0.0 || c.workers < 1) {
    throw ConfigError("config values out of range");
  }
  if (c.stages.count(Stage::verify) &&
      (!c.stages.count(Stage::lyapunov) || !c.stages.count(Stage::dimension))) {
    throw ConfigError("verify requires the lyapunov and dimension stages");
  }
  if ((c.stages.count(Stage::lyapunov) || c.stages.count(Stage::dimension)) &&
      !c.stages.count(Stage::sample)) {
    throw ConfigError("lyapunov/dimension require the sample stage");
  }
  return c;
}

ExperimentConfig ExperimentConfig::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json_text(ss.str());
}

ProjectivePoint default_seed_point(const MapModel& map, std::uint64_t rng_seed) {
  RngStream rng = RngStream::derive(rng_seed, "seed-point", 0);
  for (int attempt = 0; attempt < 64; ++attempt) {
    ProjectivePoint p = map.dim() == 1
                            ? ProjectivePoint::affine_p1(rng.uniform(1.2, 2.2) * rng.unit_complex())
                            : ProjectivePoint::affine_p2(rng.uniform(0.7, 1.6) * rng.unit_complex(),
                                                         rng.uniform(0.7, 1.6) * rng.unit_complex());
    if (map.distance_to_J(p) > 1e-3) return p;
  }
  throw ExceptionalSeed("could not find a generic seed point");
}

ReportRecord run_experiment(const ExperimentConfig& config) {
  MapModel map = MapModel::from_json_file(config.map_file);  // HypothesisViolation propagates

  ReportRecord record;
  record.map_id = map.id();
  record.map_file = config.map_file;
  record.rng_seed = config.rng_seed;

  fs::create_directories(config.output_dir);
  const auto artifact = [&](const std::string& name, const std::string& file) {
    const std::string path = (fs::path(config.output_dir) / file).string();
    record.artifacts[name] = path;
    return path;
  };

  std::optional<SampleCloud> cloud;
  std::vector<BackwardOrbit> certified_orbits;
  std::vector<InverseBranchCertificate> certificates;

  const auto run_stage = [&](Stage stage, auto&& body) {
    if (!config.stages.count(stage)) return;
    StageTimer timer(record, stage_name(stage));
    try {
      body();
      record.stages_run.push_back(stage_name(stage));
    } catch (const HypothesisViolation&) {
      throw;
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      throw StageFailure(stage_name(stage) + std::string(": ") + e.what());
    }
  };

  run_stage(Stage::sample, [&]() {
    ProjectivePoint seed;
    if (map.dim() == 1 && config.seed_point_p1) {
      seed = ProjectivePoint::affine_p1({config.seed_point_p1->first, config.seed_point_p1->second});
    } else if (map.dim() == 2 && config.seed_point_p2) {
      const auto& s = *config.seed_point_p2;
      seed = ProjectivePoint::affine_p2({s[0], s[1]}, {s[2], s[3]});
    } else {
      seed = default_seed_point(map, config.rng_seed);
    }
    CloudOptions opts;
    opts.workers = config.workers;
    cloud = sample_backward_cloud(map, seed, config.depth, config.count, config.rng_seed, opts);
    cloud_to_csv(*cloud, artifact("cloud", "cloud.csv"));
  });

  run_stage(Stage::lyapunov, [&]() {
    LyapunovEstimate best;
    std::vector<double> chik_by_block;
    for (int block : config.block_lengths) {
      LyapunovEstimate est = cocycle_spectrum(map, *cloud, block);
      chik_by_block.push_back(est.chi.back());
      write_text_file(artifact("lyapunov_N" + std::to_string(block),
                               "lyapunov_N" + std::to_string(block) + ".json"),
                      lyapunov_to_json(est, map.id()));
      best = est;
    }
    // recorded N-dependence slack, never enforced
    if (chik_by_block.size() >= 2) {
      const double a = chik_by_block[chik_by_block.size() - 2];
      const double b = chik_by_block.back();
      best.eps0 = std::abs(a - b) / std::max(std::abs(b), 1e-12);
    }
    record.lyapunov = best;
    record.counters["lyapunov_discards"] = best.discards;
    write_text_file(artifact("lyapunov", "lyapunov.json"), lyapunov_to_json(best, map.id()));
  });

  run_stage(Stage::branches, [&]() {
    RngStream orbit_rng = RngStream::derive(config.rng_seed, "orbit-starts", 0);
    std::ostringstream jsonl;
    int certified = 0;
    std::vector<double> rho_hats;
    for (int i = 0; i < config.n_orbits; ++i) {
      ProjectivePoint start =
          cloud ? cloud->points[static_cast<std::size_t>(orbit_rng.uniform_int(cloud->count()))]
                : default_seed_point(map, config.rng_seed + static_cast<std::uint64_t>(i));
      const std::uint64_t orbit_seed = mix_tag(config.rng_seed, "orbit-seed", static_cast<std::uint64_t>(i));
      BackwardOrbit orbit;
      try {
        orbit = sample_backward_orbit(map, start, config.orbit_depth, orbit_seed);
      } catch (const OrbitHitsJ&) {
        continue;
      }
      try {
        const RadiusSchedule schedule = radius_schedule(map, orbit, config.eps);
        CertifyOptions opts;
        opts.volume_samples = config.volume_samples;
        const InverseBranchCertificate cert = certify_branches(map, orbit, schedule, opts);
        jsonl << certificate_to_jsonl(cert, map.id());
        if (cert.max_certified_depth >= config.orbit_depth) {
          ++certified;
          certified_orbits.push_back(orbit);
          rho_hats.push_back(cert.rho_hat);
        }
        certificates.push_back(cert);
      } catch (const OrbitTooCloseToJ&) {
        continue;
      }
    }
    record.orbits_attempted = config.n_orbits;
    record.orbits_certified = certified;
    record.counters["orbits_certified"] = certified;
    if (!rho_hats.empty()) {
      record.rho_hat = *std::max_element(rho_hats.begin(), rho_hats.end());
    }
    write_text_file(artifact("certificates", "certificates.jsonl"), jsonl.str());
  });

  run_stage(Stage::dimension, [&]() {
    const RadiiSchedule schedule{config.radii.rho0_factor * std::max(support_diameter(*cloud), 1e-6),
                                 config.radii.h, config.radii.n_radii};
    const DimensionEstimate est = aggregate_dimension(*cloud, config.n_centers, schedule,
                                                      DimMethod::local_slope, config.rng_seed);
    record.dimension = est;
    record.counters["dimension_centers_dropped"] = est.centers_dropped;
    write_text_file(artifact("dimension", "dimension.json"), dimension_to_json(est, map.id()));

    // plot-ready (log rho, log mass) pairs per center
    RngStream rng = RngStream::derive(config.rng_seed, "plotdata-centers", 0);
    std::ostringstream csv;
    csv << "center,log_rho,log_mass\n";
    const int n_plot = std::min(20, cloud->count());
    char row[128];
    for (int c = 0; c < n_plot; ++c) {
      const int idx = rng.uniform_int(cloud->count());
      for (const auto& [lr, lm] :
           log_mass_profile(*cloud, cloud->points[static_cast<std::size_t>(idx)], schedule, idx)) {
        std::snprintf(row, sizeof(row), "%d,%.17g,%.17g\n", c, lr, lm);
        csv << row;
      }
    }
    write_text_file(artifact("plotdata", "plotdata.csv"), csv.str());
  });

  run_stage(Stage::verify, [&]() {
    const BoundsVerdict verdict =
        verify_theorem(map, *record.lyapunov, *record.dimension, record.rho_hat);
    record.verdict = verdict;
    write_text_file(artifact("verdict", "verdict.json"), verdict_to_json(verdict, map.id()));
  });

  record.record_path = artifact("record", "record.json");
  write_text_file(record.record_path, record_to_json(record));

  // Wall times are intrinsically run-dependent; they live outside the
  // deterministic artifact set.
  {
    nlohmann::json t;
    for (const auto& [name, ms] : record.wall_times_ms) t[name] = ms;
    write_text_file((fs::path(config.output_dir) / "timings.json").string(), t.dump(2));
  }
  return record;
}

std::string record_to_json(const ReportRecord& record) {
  nlohmann::json j;
  j["map_id"] = record.map_id;
  j["map_file"] = record.map_file;
  j["rng_seed"] = record.rng_seed;
  j["stages_run"] = record.stages_run;
  j["artifacts"] = record.artifacts;
  j["counters"] = record.counters;
  j["orbits_certified"] = record.orbits_certified;
  j["orbits_attempted"] = record.orbits_attempted;
  j["rho_hat"] = record.rho_hat;
  if (record.lyapunov) {
    j["lyapunov"] = nlohmann::json::parse(lyapunov_to_json(*record.lyapunov, record.map_id));
  }
  if (record.dimension) {
    j["dimension"] = nlohmann::json::parse(dimension_to_json(*record.dimension, record.map_id));
  }
  if (record.verdict) {
    j["verdict"] = nlohmann::json::parse(verdict_to_json(*record.verdict, record.map_id));
  }
  return j.dump(2);
}

ReportRecord load_record(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open record: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw IoError(std::string("record is not valid JSON: ") + e.what());
  }
  ReportRecord r;
  r.map_id = j.value("map_id", "");
  r.map_file = j.value("map_file", "");
  r.rng_seed = j.value("rng_seed", 0ULL);
  if (j.contains("stages_run")) r.stages_run = j["stages_run"].get<std::vector<std::string>>();
  if (j.contains("artifacts")) r.artifacts = j["artifacts"].get<std::map<std::string, std::string>>();
  if (j.contains("counters")) r.counters = j["counters"].get<std::map<std::string, long>>();
  r.orbits_certified = j.value("orbits_certified", 0);
  r.orbits_attempted = j.value("orbits_attempted", 0);
  r.rho_hat = j.value("rho_hat", 1.0);
  if (j.contains("lyapunov")) {
    LyapunovEstimate est;
    const auto& l = j["lyapunov"];
    est.chi = l["chi"].get<std::vector<double>>();
    est.chi_stderr = l["stderr"].get<std::vector<double>>();
    est.sigma = l["sigma"].get<double>();
    est.sigma_stderr = l["sigma_stderr"].get<double>();
    est.n_cocycle = l["n_cocycle"].get<int>();
    est.n_samples = l["n_samples"].get<int>();
    est.discards = l["discards"].get<int>();
    est.eps0 = l.value("eps0", 0.0);
    r.lyapunov = est;
  }
  if (j.contains("dimension")) {
    DimensionEstimate est;
    const auto& d = j["dimension"];
    est.dim_hat = d["dim_hat"].get<double>();
    est.ci = {d["ci"][0].get<double>(), d["ci"][1].get<double>()};
    est.reference_count = d.value("reference_count", 0);
    r.dimension = est;
  }
  if (j.contains("verdict")) {
    BoundsVerdict v;
    const auto& jv = j["verdict"];
    v.lower = jv["lower"].get<double>();
    v.upper = jv["upper"].get<double>();
    v.dim_hat = jv["dim_hat"].get<double>();
    v.pass_lower = jv["pass_lower"].get<bool>();
    v.pass_upper = jv["pass_upper"].get<bool>();
    v.slack = jv["slack"].get<double>();
    r.verdict = v;
  }
  r.record_path = path;
  return r;
}

std::vector<std::string> emit_report(const ReportRecord& record, ReportFormat format,
                                     const std::string& out_dir) {
  fs::create_directories(out_dir);
  std::vector<std::string> written;

  if (format == ReportFormat::json) {
    const std::string path = (fs::path(out_dir) / (record.map_id + "_report.json")).string();
    write_text_file(path, record_to_json(record));
    written.push_back(path);
    return written;
  }

  if (format == ReportFormat::csv_bundle) {
    // one index CSV pointing at the per-stage CSV/JSON artifacts
    const std::string path = (fs::path(out_dir) / (record.map_id + "_bundle.csv")).string();
    std::ostringstream out;
    out << "artifact,path\n";
    for (const auto& [name, file] : record.artifacts) out << name << "," << file << "\n";
    write_text_file(path, out.str());
    written.push_back(path);
    return written;
  }

  // markdown_summary: the bounds table and plot-ready (log rho, log mass)
  // pairs recomputed from the cloud artifact.
  std::ostringstream md;
  md << "# " << record.map_id << " report\n\n";
  md << "stages: ";
  for (const auto& s : record.stages_run) md << s << " ";
  md << "\n\n";
  if (record.lyapunov) {
    md << "## Exponents\n\n";
    md << "| chi_i | stderr |\n|---|---|\n";
    for (std::size_t i = 0; i < record.lyapunov->chi.size(); ++i) {
      md << "| " << record.lyapunov->chi[i] << " | " << record.lyapunov->chi_stderr[i] << " |\n";
    }
    md << "\nSigma = " << record.lyapunov->sigma << " (stderr " << record.lyapunov->sigma_stderr
       << ")\n\n";
  }
  if (record.verdict) {
    md << "## Dimension bounds\n\n";
    md << "| map | lower | dim_hat | upper | pass |\n|---|---|---|---|---|\n";
    md << "| " << record.map_id << " | " << record.verdict->lower << " | "
       << record.verdict->dim_hat << " | " << record.verdict->upper << " | "
       << ((record.verdict->pass_lower && record.verdict->pass_upper) ? "yes" : "no") << " |\n\n";
  } else if (!record.lyapunov && !record.dimension) {
    md << "(map metadata only; no analysis stages were run)\n\n";
  }
  if (record.orbits_attempted > 0) {
    md << "## Inverse branches\n\ncertified " << record.orbits_certified << " / "
       << record.orbits_attempted << " orbits, rho_hat = " << record.rho_hat << "\n\n";
  }
  const std::string md_path = (fs::path(out_dir) / (record.map_id + "_summary.md")).string();
  write_text_file(md_path, md.str());
  written.push_back(md_path);

  // plot-ready data was produced by the dimension stage; copy it next to the
  // summary when present
  const auto it = record.artifacts.find("plotdata");
  if (it != record.artifacts.end() && fs::exists(it->second)) {
    const std::string csv_path = (fs::path(out_dir) / (record.map_id + "_plotdata.csv")).string();
    fs::copy_file(it->second, csv_path, fs::copy_options::overwrite_existing);
    written.push_back(csv_path);
  }
  return written;
}

}  // namespace eqdim
