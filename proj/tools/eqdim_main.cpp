#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "eqdim/errors.hpp"
#include "eqdim/experiment.hpp"
#include "eqdim/map_model.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitStage = 3;

int cmd_run(const std::string& config_path, int workers_override,
            const std::string& output_override) {
  eqdim::ExperimentConfig config = eqdim::ExperimentConfig::from_json_file(config_path);
  if (workers_override > 0) config.workers = workers_override;
  if (!output_override.empty()) config.output_dir = output_override;
  if (const char* root = std::getenv("EQDIM_OUTPUT_ROOT")) {
    config.output_dir = (fs::path(root) / config.output_dir).string();
  }
  const eqdim::ReportRecord record = eqdim::run_experiment(config);
  std::cout << "wrote " << record.record_path << "\n";
  if (record.verdict) {
    std::cout << "verdict: lower=" << record.verdict->lower
              << " dim_hat=" << record.verdict->dim_hat << " upper=" << record.verdict->upper
              << " pass=" << (record.verdict->pass_lower && record.verdict->pass_upper ? "yes" : "no")
              << "\n";
  }
  return kExitOk;
}

int cmd_report(const std::string& record_path, const std::string& format,
               const std::string& out_dir) {
  const eqdim::ReportRecord record = eqdim::load_record(record_path);
  eqdim::ReportFormat fmt;
  if (format == "json") {
    fmt = eqdim::ReportFormat::json;
  } else if (format == "csv_bundle") {
    fmt = eqdim::ReportFormat::csv_bundle;
  } else if (format == "markdown_summary") {
    fmt = eqdim::ReportFormat::markdown_summary;
  } else {
    throw eqdim::ConfigError("unknown report format: " + format);
  }
  for (const auto& path : eqdim::emit_report(record, fmt, out_dir)) {
    std::cout << "wrote " << path << "\n";
  }
  return kExitOk;
}

int cmd_maps_list(const std::string& dir) {
  if (!fs::exists(dir)) {
    std::cerr << "maps directory not found: " << dir << "\n";
    return kExitConfig;
  }
  std::vector<std::string> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() == ".json") files.push_back(entry.path().string());
  }
  std::sort(files.begin(), files.end());
  for (const auto& file : files) {
    try {
      const eqdim::MapModel map = eqdim::MapModel::from_json_file(file);
      std::cout << map.id() << "  k=" << map.dim() << " d=" << map.algebraic_degree()
                << " d_t=" << map.topological_degree() << "  (" << file << ")\n";
    } catch (const eqdim::Error& e) {
      std::cout << file << "  [invalid: " << e.what() << "]\n";
    }
  }
  return kExitOk;
}

int cmd_maps_check(const std::string& file) {
  const eqdim::MapModel map = eqdim::MapModel::from_json_file(file);
  const eqdim::DegreeReport report = map.check_degrees();
  std::cout << "id: " << map.id() << "\n"
            << "dimension: " << map.dim() << "\n"
            << "algebraic degree: " << map.algebraic_degree() << "\n"
            << "topological degree (declared): " << report.declared_d_t << "\n"
            << "topological degree (numeric): " << report.d_t_numeric << "\n"
            << "hypothesis d_t > lambda_{k-1}: " << (report.hypothesis_ok ? "ok" : "VIOLATED")
            << "\n";
  if (map.dim() == 1) {
    std::cout << "exceptional set points: " << map.j_points().size() << "\n";
  } else {
    std::cout << "exceptional set polynomials: " << map.j_polynomials().size() << "\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"equilibrium-measure dimension toolkit for endomorphisms of P^1 and P^2"};
  app.require_subcommand(1);

  std::string config_path;
  int workers = 0;
  std::string output_dir;
  auto* run = app.add_subcommand("run", "run an experiment from a config file");
  run->add_option("config", config_path, "experiment config (JSON)")->required();
  run->add_option("--workers", workers, "worker count override");
  run->add_option("--output", output_dir, "output directory override");

  std::string record_path, format = "markdown_summary", report_out = "reports";
  auto* report = app.add_subcommand("report", "emit a report from a record.json");
  report->add_option("record", record_path, "record.json from a previous run")->required();
  report->add_option("--format", format, "json | csv_bundle | markdown_summary");
  report->add_option("--out", report_out, "report output directory");

  auto* maps = app.add_subcommand("maps", "bundled map utilities");
  maps->require_subcommand(1);
  std::string maps_dir = "maps";
  auto* maps_list = maps->add_subcommand("list", "list map definition files");
  maps_list->add_option("--dir", maps_dir, "maps directory");
  std::string map_file;
  auto* maps_check = maps->add_subcommand("check", "validate a map definition file");
  maps_check->add_option("file", map_file, "map definition (JSON)")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(config_path, workers, output_dir);
    if (report->parsed()) return cmd_report(record_path, format, report_out);
    if (maps->parsed()) {
      if (maps_list->parsed()) return cmd_maps_list(maps_dir);
      if (maps_check->parsed()) return cmd_maps_check(map_file);
    }
  } catch (const eqdim::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const eqdim::HypothesisViolation& e) {
    std::cerr << "hypothesis violation: " << e.what() << "\n";
    return kExitConfig;
  } catch (const eqdim::StageFailure& e) {
    std::cerr << "stage failure: " << e.what() << "\n";
    return kExitStage;
  } catch (const eqdim::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitStage;
  }
  return kExitOk;
}
