#include "qmetro/io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace qmetro {

namespace {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

}  // namespace

std::string fringe_csv_header(const std::vector<std::string>& cell_names) {
  std::string h;
  for (const auto& c : cell_names) h += c + ",";
  h += "delta_omega_over_omega0,sigma_z_mean,n0,n1,losses,seed";
  return h;
}

void append_fringe_rows(std::string& out, const FringeDataset& data,
                        const std::vector<std::string>& cell_values) {
  std::string prefix;
  for (const auto& c : cell_values) prefix += c + ",";
  for (const FringePoint& p : data.points) {
    out += prefix;
    out += format_double(p.rel_detuning) + "," + format_double(p.sigma_z) + "," +
           std::to_string(p.n0) + "," + std::to_string(p.n1) + "," + std::to_string(p.losses) +
           "," + std::to_string(data.seed) + "\n";
  }
}

void write_fringe_csv(const std::string& path, const FringeDataset& data,
                      const std::vector<std::pair<std::string, std::string>>& cell_columns) {
  std::vector<std::string> names, values;
  for (const auto& [n, v] : cell_columns) {
    names.push_back(n);
    values.push_back(v);
  }
  std::string out = fringe_csv_header(names) + "\n";
  append_fringe_rows(out, data, values);
  write_text_file_atomic(path, out);
}

nlohmann::json fit_to_json(const FringeFit& fit) {
  nlohmann::json j;
  j["model"] = fit.model == FringeModel::cosine ? "cosine"
               : fit.model == FringeModel::binomial_mixture ? "binomial_mixture"
                                                            : "poisson_envelope";
  j["contrast"] = fit.contrast;
  j["phase_rad"] = fit.phase;
  j["offset"] = fit.offset;
  j["n_eff"] = fit.n_eff;
  j["residual_rms"] = fit.residual_rms;
  j["contrast_stderr"] = fit.contrast_stderr;
  j["converged"] = fit.converged;
  j["low_contrast"] = fit.low_contrast;
  return j;
}

nlohmann::json report_to_json(const SensitivityReport& rep) {
  nlohmann::json j;
  j["s_q"] = rep.s_q;
  j["s_c"] = rep.s_c;
  j["ratio_c_over_q"] = rep.ratio;
  j["fisher_s2"] = rep.fisher;
  j["nu_convention"] = rep.nu_convention;
  return j;
}

nlohmann::json dataset_summary_json(const FringeDataset& data) {
  nlohmann::json j;
  j["points"] = data.points.size();
  j["nu"] = data.nu;
  j["ninf"] = data.ninf;
  j["omega0_rad_per_s"] = data.omega0_rad_per_s;
  j["t_s"] = data.t_s;
  j["mean_n_register"] = data.mean_n_register;
  j["p_c"] = data.noise.p_c;
  j["p_r"] = data.noise.p_r;
  j["seed"] = data.seed;
  j["position_retries"] = data.position_retries;
  long losses = 0;
  for (const auto& p : data.points) losses += p.losses;
  j["loss_events"] = losses;
  return j;
}

namespace {

nlohmann::json mat2_to_json(const Eigen::Matrix2cd& m) {
  nlohmann::json j = nlohmann::json::array();
  for (int i = 0; i < 2; ++i)
    for (int k = 0; k < 2; ++k) j.push_back({m(i, k).real(), m(i, k).imag()});
  return j;
}

Eigen::Matrix2cd mat2_from_json(const nlohmann::json& j) {
  Eigen::Matrix2cd m;
  int idx = 0;
  for (int i = 0; i < 2; ++i)
    for (int k = 0; k < 2; ++k) {
      m(i, k) = Cplx(j.at(idx).at(0).get<double>(), j.at(idx).at(1).get<double>());
      ++idx;
    }
  return m;
}

}  // namespace

nlohmann::json gate_model_to_json(const GateContrastModel& model) {
  nlohmann::json j;
  j["kappa_control"] = model.kappa_control;
  j["p_c"] = model.p_c;
  j["curve_amplitude"] = model.curve_amplitude;
  j["curve_decay"] = model.curve_decay;
  j["has_curve"] = model.has_curve;
  j["perfect"] = model.perfect;
  j["curve_points"] = nlohmann::json::array();
  for (const auto& [n, c] : model.curve_points) j["curve_points"].push_back({n, c});
  j["records"] = nlohmann::json::array();
  for (const GatePairRecord& r : model.records) {
    nlohmann::json rec;
    rec["u_blocked"] = mat2_to_json(r.u_blocked);
    rec["u_lifted"] = mat2_to_json(r.u_lifted);
    rec["theta"] = r.theta;
    rec["amplitude"] = r.amplitude;
    j["records"].push_back(rec);
  }
  return j;
}

GateContrastModel gate_model_from_json(const nlohmann::json& j) {
  GateContrastModel m;
  m.kappa_control = j.at("kappa_control").get<double>();
  m.p_c = j.at("p_c").get<double>();
  m.curve_amplitude = j.at("curve_amplitude").get<double>();
  m.curve_decay = j.at("curve_decay").get<double>();
  m.has_curve = j.at("has_curve").get<bool>();
  m.perfect = j.at("perfect").get<bool>();
  for (const auto& p : j.at("curve_points"))
    m.curve_points.emplace_back(p.at(0).get<int>(), p.at(1).get<double>());
  for (const auto& rec : j.at("records")) {
    GatePairRecord r;
    r.u_blocked = mat2_from_json(rec.at("u_blocked"));
    r.u_lifted = mat2_from_json(rec.at("u_lifted"));
    r.theta = rec.at("theta").get<double>();
    r.amplitude = rec.at("amplitude").get<double>();
    m.records.push_back(r);
  }
  return m;
}

void write_text_file_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw NumericalError("io: cannot open " + tmp.string());
    out << content;
  }
  fs::rename(tmp, target);
}

void write_json_file(const std::string& path, const nlohmann::json& j) {
  write_text_file_atomic(path, j.dump(2) + "\n");
}

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("io: cannot open " + path);
  nlohmann::json j;
  in >> j;
  return j;
}

nlohmann::json config_snapshot(const Config& cfg) {
  nlohmann::json j;
  for (const auto& [k, v] : cfg.entries()) j[k] = v;
  return j;
}

}  // namespace qmetro
