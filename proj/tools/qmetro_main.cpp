#include <CLI11.hpp>
#include <chrono>
#include <filesystem>
#include <iostream>

#include "qmetro/config.hpp"
#include "qmetro/estimation.hpp"
#include "qmetro/io.hpp"

namespace fs = std::filesystem;
using namespace qmetro;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;
constexpr int kExitPartial = 3;

struct GlobalArgs {
  std::string config_path;
  std::vector<std::string> sets;
  std::string out_dir;
  long seed = -1;
  int jobs = 0;
  bool ninf = false;
};

Config load_config(const GlobalArgs& args) {
  Config cfg = args.config_path.empty() ? Config::defaults() : Config::from_file(args.config_path);
  cfg.merge_defaults();
  cfg.apply_environment();
  for (const auto& s : args.sets) cfg.apply_set_expression(s);
  if (args.seed >= 0) cfg.apply_override("protocol.seed", std::to_string(args.seed));
  if (args.jobs > 0) cfg.apply_override("protocol.jobs", std::to_string(args.jobs));
  if (!args.out_dir.empty()) cfg.apply_override("output.dir", args.out_dir);
  return cfg;
}

nlohmann::json base_manifest(const Config& cfg) {
  nlohmann::json m;
  m["tool_version"] = kToolVersion;
  m["schema_version"] = kOutputSchemaVersion;
  m["config"] = config_snapshot(cfg);
  return m;
}

void finish_manifest(nlohmann::json& m, const fs::path& dir,
                     std::chrono::steady_clock::time_point t0) {
  m["wall_clock_s"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_json_file((dir / "manifest.json").string(), m);
}

// ---------------------------------------------------------------- analytic

int cmd_analytic(const Config& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  const fs::path dir = cfg.get_string("output.dir");
  fs::create_directories(dir);
  nlohmann::json manifest = base_manifest(cfg);
  manifest["command"] = "analytic";

  const int n_register = cfg.get_int("protocol.n_register");
  const double p_c = cfg.get_double("protocol.p_c");
  const std::vector<double> p_r_values = cfg.get_double_list("analytic.p_r_values");
  const int points = cfg.get_int("analytic.omega_t_points");
  const double wt_max = cfg.get_double("analytic.omega_t_max");
  const double wt_eval = cfg.get_double("analytic.omega_t_eval");
  if (points < 2) throw ValidationError("analytic.omega_t_points must be >= 2");

  nlohmann::json outputs = nlohmann::json::array();
  for (double p_r : p_r_values) {
    NoiseParams noise{p_c, p_r};
    noise.validate();
    std::string csv =
        "omega_t,p0,p1,sigma_z,fisher_full_per_t2,fisher_control_per_t2,"
        "sensitivity_control\n";
    for (int i = 0; i < points; ++i) {
      const double wt = wt_max * double(i + 1) / double(points);
      ProtocolConfig pc{n_register, wt, 1.0, 1};  // omega = theta at t = 1
      const auto [q0, q1] = control_marginals(pc, noise);
      double f_full = 0.0, f_ctrl = 0.0;
      try {
        f_full = fisher_information(full_distribution_family(pc, noise), wt);
      } catch (const NumericalError&) {
        f_full = 0.0;
      }
      try {
        f_ctrl = fisher_information(control_only_family(pc, noise), wt);
      } catch (const NumericalError&) {
        f_ctrl = 0.0;
      }
      char row[256];
      const double sens = f_ctrl > 0.0 ? sensitivity(f_ctrl, 1, wt) : -1.0;
      std::snprintf(row, sizeof row, "%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g\n", wt, q0, q1,
                    q0 - q1, f_full, f_ctrl, sens);
      csv += row;
    }
    char name[64];
    std::snprintf(name, sizeof name, "analytic_fringe_pr%.4f.csv", p_r);
    write_text_file_atomic((dir / name).string(), csv);
    outputs.push_back(name);

    // joint outcome table at the evaluation phase
    ProtocolConfig pc{n_register, wt_eval, 1.0, 1};
    const OutcomeDistribution d = outcome_probabilities(pc, noise);
    std::string tab = "n,p0n,p1n\n";
    for (int n = 0; n <= d.n_register; ++n) {
      char row[128];
      std::snprintf(row, sizeof row, "%d,%.12g,%.12g\n", n, d.p0[n], d.p1[n]);
      tab += row;
    }
    std::snprintf(name, sizeof name, "analytic_outcomes_pr%.4f.csv", p_r);
    write_text_file_atomic((dir / name).string(), tab);
    outputs.push_back(name);
  }
  manifest["outputs"] = outputs;
  finish_manifest(manifest, dir, t0);
  return kExitOk;
}

// -------------------------------------------------------------- experiment

GateContrastModel resolve_gate_model(const Config& cfg, const PhysicalSetup& setup,
                                     const NoiseParams& noise, const fs::path& dir,
                                     nlohmann::json& manifest) {
  const std::string mode = cfg.get_string("gates_model.mode");
  if (mode == "perfect") return perfect_gate_model(noise.p_c);
  if (cfg.has("gates_model.cache") && fs::exists(cfg.get_string("gates_model.cache"))) {
    manifest["gate_model_source"] = cfg.get_string("gates_model.cache");
    return gate_model_from_json(read_json_file(cfg.get_string("gates_model.cache")));
  }
  GateContrastModel model =
      gate_contrast_curve(setup, noise, cfg.build_characterization(), cfg.build_contrast_curve());
  const std::string path = (dir / "gate_model.json").string();
  write_json_file(path, gate_model_to_json(model));
  manifest["gate_model_source"] = "computed";
  if (cfg.has("gates_model.cache")) {
    fs::create_directories(fs::path(cfg.get_string("gates_model.cache")).parent_path());
    write_json_file(cfg.get_string("gates_model.cache"), gate_model_to_json(model));
  }
  return model;
}

struct ExperimentOutcome {
  FringeDataset data;
  FringeFit fit;
  bool has_report = false;
  SensitivityReport report;
};

ExperimentOutcome run_experiment_core(const Config& cfg, bool ninf_flag,
                                      const fs::path& dir, nlohmann::json& manifest) {
  const PhysicalSetup setup = cfg.build_setup();
  ExperimentConfig ecfg = cfg.build_experiment();
  if (ninf_flag) ecfg.ninf = true;

  ExperimentOutcome out;
  if (ecfg.mode == ExperimentConfig::Mode::full_dynamics) {
    out.data = run_full_protocol(ecfg, setup);
    out.fit = fit_fringe(out.data, FringeModel::cosine, {});
  } else {
    const GateContrastModel model = resolve_gate_model(cfg, setup, ecfg.noise, dir, manifest);
    out.data = run_large_n(ecfg, setup, model, cfg.build_large_n_options());
    out.fit = fit_fringe(out.data, FringeModel::cosine,
                         {ecfg.noise.p_r * ecfg.mean_n_register});
  }
  try {
    const OperatingPoint op = operating_point(out.fit, ecfg.omega0_rad_per_s);
    out.report = sensitivity_report(op.fisher, ecfg.omega0_rad_per_s, ecfg.t_s,
                                    ecfg.mean_n_register);
    out.has_report = true;
  } catch (const NumericalError&) {
    out.has_report = false;  // flat fringe: no operating point
  }
  return out;
}

int cmd_experiment(const Config& cfg, bool ninf_flag) {
  const auto t0 = std::chrono::steady_clock::now();
  const fs::path dir = cfg.get_string("output.dir");
  fs::create_directories(dir);
  nlohmann::json manifest = base_manifest(cfg);
  manifest["command"] = "experiment";
  try {
    const ExperimentOutcome out = run_experiment_core(cfg, ninf_flag, dir, manifest);
    write_fringe_csv((dir / "fringes.csv").string(), out.data);
    nlohmann::json rep;
    rep["dataset"] = dataset_summary_json(out.data);
    rep["fit"] = fit_to_json(out.fit);
    if (out.has_report) rep["sensitivity"] = report_to_json(out.report);
    write_json_file((dir / "report.json").string(), rep);
    manifest["outputs"] = {"fringes.csv", "report.json"};
    finish_manifest(manifest, dir, t0);
    return kExitOk;
  } catch (const NumericalError& e) {
    manifest["error"] = e.what();
    manifest["partial"] = true;
    finish_manifest(manifest, dir, t0);
    std::cerr << "runtime error: " << e.what() << "\n";
    return kExitPartial;
  }
}

// ------------------------------------------------------------------ sweep

struct SweepAxis {
  std::string key;
  std::vector<std::string> values;
};

std::vector<SweepAxis> parse_axes(const Config& cfg) {
  std::vector<SweepAxis> axes;
  for (int i = 1; i <= 3; ++i) {
    const std::string key = "sweep.axis" + std::to_string(i);
    if (!cfg.has(key)) continue;
    const std::string spec = cfg.get_string(key);
    const auto colon = spec.find(':');
    if (colon == std::string::npos)
      throw ValidationError("sweep axis must be 'dot.key : v1,v2,...'");
    SweepAxis ax;
    ax.key = spec.substr(0, colon);
    while (!ax.key.empty() && ax.key.back() == ' ') ax.key.pop_back();
    std::stringstream ss(spec.substr(colon + 1));
    std::string item;
    while (std::getline(ss, item, ',')) {
      const auto a = item.find_first_not_of(" \t");
      const auto b = item.find_last_not_of(" \t");
      if (a != std::string::npos) ax.values.push_back(item.substr(a, b - a + 1));
    }
    if (ax.values.empty()) throw ValidationError("sweep axis has no values: " + key);
    axes.push_back(ax);
  }
  if (axes.empty()) throw ValidationError("sweep: no axes configured");
  return axes;
}

int cmd_sweep(const Config& cfg, bool ninf_flag) {
  const auto t0 = std::chrono::steady_clock::now();
  const fs::path dir = cfg.get_string("output.dir");
  fs::create_directories(dir / "cells");
  nlohmann::json manifest = base_manifest(cfg);
  manifest["command"] = "sweep";

  const std::vector<SweepAxis> axes = parse_axes(cfg);
  long n_cells = 1;
  for (const auto& ax : axes) n_cells *= long(ax.values.size());
  if (n_cells > cfg.get_int("sweep.max_cells"))
    throw ValidationError("sweep: cell count exceeds sweep.max_cells");

  std::vector<std::string> cell_names;
  for (const auto& ax : axes) cell_names.push_back(ax.key);
  std::string aggregate = fringe_csv_header(cell_names) + "\n";
  nlohmann::json cells = nlohmann::json::array();
  bool any_failed = false;

  for (long cell = 0; cell < n_cells; ++cell) {
    std::vector<std::string> values;
    long idx = cell;
    for (const auto& ax : axes) {
      values.push_back(ax.values[idx % ax.values.size()]);
      idx /= long(ax.values.size());
    }
    const fs::path frag = dir / "cells" / ("cell_" + std::to_string(cell) + ".csv");
    nlohmann::json cell_info;
    cell_info["index"] = cell;
    for (std::size_t a = 0; a < axes.size(); ++a) cell_info[axes[a].key] = values[a];
    if (fs::exists(frag)) {
      cell_info["status"] = "cached";
    } else {
      Config ccfg = cfg;
      for (std::size_t a = 0; a < axes.size(); ++a) ccfg.apply_override(axes[a].key, values[a]);
      try {
        nlohmann::json scratch;
        const ExperimentOutcome out = run_experiment_core(ccfg, ninf_flag, dir, scratch);
        std::string rows;
        append_fringe_rows(rows, out.data, values);
        write_text_file_atomic(frag.string(), rows);
        cell_info["status"] = "ok";
        if (out.has_report) cell_info["sensitivity"] = report_to_json(out.report);
        cell_info["fit"] = fit_to_json(out.fit);
      } catch (const std::exception& e) {
        cell_info["status"] = "failed";
        cell_info["error"] = e.what();
        any_failed = true;
      }
    }
    if (fs::exists(frag)) {
      std::ifstream in(frag);
      std::stringstream buf;
      buf << in.rdbuf();
      aggregate += buf.str();
    }
    cells.push_back(cell_info);
  }
  write_text_file_atomic((dir / "sweep.csv").string(), aggregate);
  manifest["cells"] = cells;
  manifest["outputs"] = {"sweep.csv"};
  finish_manifest(manifest, dir, t0);
  return any_failed ? kExitPartial : kExitOk;
}

// -------------------------------------------------------------- calibrate

int cmd_calibrate(const Config& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  const fs::path dir = cfg.get_string("output.dir");
  fs::create_directories(dir);
  nlohmann::json manifest = base_manifest(cfg);
  manifest["command"] = "calibrate";

  PulseParams pulse;
  pulse.delta_e_rad_per_s = units::hz_to_rad_per_s(cfg.get_double("gate.delta_e_hz"));
  pulse.tau_s = cfg.get_double("gate.tau_s");
  const CalibrationResult cal = calibrate_amplitude_scale(pulse, 2.2, 2.9, MagnusOptions{1024});

  nlohmann::json j;
  j["amplitude_scale"] = cal.amplitude_scale;
  j["transfer"] = cal.transfer;
  j["delta_e_hz"] = cfg.get_double("gate.delta_e_hz");
  j["tau_s"] = pulse.tau_s;
  write_json_file((dir / "calibration.json").string(), j);
  std::cout << "amplitude_scale = " << cal.amplitude_scale << " (transfer " << cal.transfer
            << ")\n";
  manifest["outputs"] = {"calibration.json"};
  finish_manifest(manifest, dir, t0);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mixed-state atom-interferometry metrology simulator"};
  app.require_subcommand(1);

  GlobalArgs args;
  app.add_option("--config", args.config_path, "configuration file");
  app.add_option("--set", args.sets, "override KEY=VALUE (repeatable)");
  app.add_option("--seed", args.seed, "random seed override");
  app.add_option("--jobs", args.jobs, "worker threads");
  app.add_option("--out", args.out_dir, "output directory");
  app.add_flag("--ninf", args.ninf, "report probabilities directly (nu -> infinity)");

  auto* analytic = app.add_subcommand("analytic", "closed-form fringes and Fisher information");
  auto* experiment = app.add_subcommand("experiment", "Monte-Carlo protocol simulation");
  auto* sweep = app.add_subcommand("sweep", "cartesian parameter sweep");
  auto* calibrate = app.add_subcommand("calibrate", "Raman pi-pulse amplitude calibration");
  for (auto* sub : {analytic, experiment, sweep, calibrate}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitValidation;
  }

  try {
    const Config cfg = load_config(args);
    if (analytic->parsed()) return cmd_analytic(cfg);
    if (experiment->parsed()) return cmd_experiment(cfg, args.ninf);
    if (sweep->parsed()) return cmd_sweep(cfg, args.ninf);
    if (calibrate->parsed()) return cmd_calibrate(cfg);
    return kExitValidation;
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}
