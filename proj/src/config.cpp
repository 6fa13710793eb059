#include "qmetro/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

extern char** environ;

namespace qmetro {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::string lower(std::string s) {
  for (char& c : s) c = char(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

}  // namespace

Config Config::from_string(const std::string& text) {
  Config cfg = defaults();
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find_first_of("#;");
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ValidationError("config line " + std::to_string(lineno) + ": malformed section");
      section = lower(trim(line.substr(1, line.size() - 2)));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ValidationError("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = lower(trim(line.substr(0, eq)));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ValidationError("config line " + std::to_string(lineno) + ": empty key");
    cfg.values_[section.empty() ? key : section + "." + key] = value;
  }
  return cfg;
}

Config Config::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("config: cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return from_string(buf.str());
}

Config Config::defaults() {
  Config cfg;
  auto& v = cfg.values_;
  v["protocol.mode"] = "full_dynamics";
  v["protocol.n_register"] = "1";
  v["protocol.p_c"] = "0.95";
  v["protocol.p_r"] = "0.95";
  v["protocol.omega0_hz"] = "5326";
  v["protocol.t_s"] = "375e-6";
  v["protocol.nu"] = "49";
  v["protocol.seed"] = "1";
  v["protocol.jobs"] = "1";

  v["scan.rel_span"] = "0.15e-3";
  v["scan.points"] = "31";

  v["gate.delta_e_hz"] = "1000e6";
  v["gate.tau_s"] = "0.5e-6";
  v["gate.amplitude_scale"] = "2.5069";
  v["gate.omega3_scale"] = "1.0";
  v["gate.gamma_e_per_s"] = "6.065e6";
  v["gate.gamma_dph_per_s"] = "1e4";
  v["gate.rydberg_decay"] = "false";
  v["gate.gamma_ryd_per_s"] = "1000";

  v["interaction.cr_cdd_mhz_um3"] = "2.92e4";
  v["interaction.cr_delta_def_mhz"] = "-196";
  v["interaction.rr_cdd_mhz_um3"] = "2.84e4";
  v["interaction.rr_delta_def_mhz"] = "-613";

  v["traps.control_widths_um"] = "0.30, 0.08, 0.08";
  v["traps.register_widths_um"] = "1.73, 1.58, 0.19";
  v["traps.separation_um"] = "2.0, 0, 0";
  v["traps.temperature_uk"] = "100";
  v["traps.depth_mk"] = "1.0";

  v["loss.beta_cm3_per_s"] = "0.25e-12";
  v["loss.tau_sp_s"] = "3.3";
  v["loss.vacuum_lifetime_s"] = "60";
  v["loss.include"] = "true";

  v["gates_model.mode"] = "curve";
  v["gates_model.characterize_positions"] = "64";
  v["gates_model.characterize_seed"] = "77";
  v["gates_model.curve_max_n"] = "9";
  v["gates_model.curve_nu"] = "49";
  v["gates_model.curve_scan_points"] = "9";
  v["gates_model.curve_seed"] = "7";

  v["integrator.magnus_steps"] = "128";
  v["integrator.rtol"] = "1e-8";
  v["integrator.atol"] = "1e-9";

  v["analytic.omega_t_points"] = "256";
  v["analytic.omega_t_max"] = "12.6";
  v["analytic.omega_t_eval"] = "0.7368";
  v["analytic.p_r_values"] = "0.95";

  v["sweep.max_cells"] = "256";

  v["output.dir"] = "out";
  return cfg;
}

void Config::merge_defaults() {
  const Config def = defaults();
  for (const auto& [k, val] : def.values_)
    if (!values_.count(k)) values_[k] = val;
}

void Config::apply_override(const std::string& dot_key, const std::string& value) {
  values_[lower(trim(dot_key))] = trim(value);
}

void Config::apply_set_expression(const std::string& expr) {
  const auto eq = expr.find('=');
  if (eq == std::string::npos) throw ValidationError("--set expects KEY=VALUE, got: " + expr);
  apply_override(expr.substr(0, eq), expr.substr(eq + 1));
}

void Config::apply_environment(const char* prefix) {
  const std::string pre(prefix);
  for (char** e = environ; *e != nullptr; ++e) {
    const std::string entry(*e);
    if (entry.rfind(pre, 0) != 0) continue;
    const auto eq = entry.find('=');
    if (eq == std::string::npos) continue;
    std::string key = entry.substr(pre.size(), eq - pre.size());
    const std::string value = entry.substr(eq + 1);
    // SECTION__KEY -> section.key
    const auto sep = key.find("__");
    if (sep == std::string::npos) continue;
    key = key.substr(0, sep) + "." + key.substr(sep + 2);
    apply_override(lower(key), value);
  }
}

bool Config::has(const std::string& key) const { return values_.count(lower(key)) > 0; }

std::string Config::get_string(const std::string& key) const {
  const auto it = values_.find(lower(key));
  if (it == values_.end()) throw ValidationError("config: missing key " + key);
  return it->second;
}

double Config::get_double(const std::string& key) const {
  const std::string s = get_string(key);
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    throw ValidationError("config: key " + key + " is not a number: " + s);
  }
  if (trim(s.substr(pos)).size() > 0)
    throw ValidationError("config: key " + key + " has trailing junk: " + s);
  return v;
}

int Config::get_int(const std::string& key) const {
  const double v = get_double(key);
  const int i = int(std::llround(v));
  if (double(i) != v) throw ValidationError("config: key " + key + " is not an integer");
  return i;
}

bool Config::get_bool(const std::string& key) const {
  const std::string s = lower(get_string(key));
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw ValidationError("config: key " + key + " is not a boolean: " + s);
}

std::vector<double> Config::get_double_list(const std::string& key) const {
  const std::string s = get_string(key);
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw ValidationError("config: key " + key + " has a non-numeric list item: " + item);
    }
  }
  if (out.empty()) throw ValidationError("config: key " + key + " is an empty list");
  return out;
}

Vec3 Config::get_vec3(const std::string& key) const {
  const auto v = get_double_list(key);
  if (v.size() != 3) throw ValidationError("config: key " + key + " needs 3 components");
  return {v[0], v[1], v[2]};
}

PhysicalSetup Config::build_setup() const {
  PhysicalSetup s;
  s.pulses.pulse.delta_e_rad_per_s = units::hz_to_rad_per_s(get_double("gate.delta_e_hz"));
  s.pulses.pulse.tau_s = get_double("gate.tau_s");
  s.pulses.amplitude_scale = get_double("gate.amplitude_scale");
  s.pulses.omega3_scale = get_double("gate.omega3_scale");
  s.scheme.delta_e_rad_per_s = s.pulses.pulse.delta_e_rad_per_s;
  s.scheme.gamma_e_per_s = get_double("gate.gamma_e_per_s");
  s.scheme.gamma_dph_per_s = get_double("gate.gamma_dph_per_s");
  s.scheme.rydberg_decay = get_bool("gate.rydberg_decay");
  s.scheme.gamma_ryd_per_s = get_double("gate.gamma_ryd_per_s");
  s.control_trap.widths_um = get_vec3("traps.control_widths_um");
  s.control_trap.center_um = {0.0, 0.0, 0.0};
  s.control_trap.temperature_uk = get_double("traps.temperature_uk");
  s.control_trap.depth_mk = get_double("traps.depth_mk");
  s.register_trap.widths_um = get_vec3("traps.register_widths_um");
  s.register_trap.center_um = get_vec3("traps.separation_um");
  s.register_trap.temperature_uk = s.control_trap.temperature_uk;
  s.register_trap.depth_mk = s.control_trap.depth_mk;
  s.control_register =
      InteractionParams{get_double("interaction.cr_cdd_mhz_um3"),
                        get_double("interaction.cr_delta_def_mhz")};
  s.register_register =
      InteractionParams{get_double("interaction.rr_cdd_mhz_um3"),
                        get_double("interaction.rr_delta_def_mhz")};
  s.loss.beta_cm3_per_s = get_double("loss.beta_cm3_per_s");
  s.loss.tau_sp_s = get_double("loss.tau_sp_s");
  s.loss.vacuum_lifetime_s = get_double("loss.vacuum_lifetime_s");
  s.magnus.steps = get_int("integrator.magnus_steps");
  return s;
}

ExperimentConfig Config::build_experiment() const {
  ExperimentConfig e;
  const std::string mode = get_string("protocol.mode");
  if (mode == "full_dynamics")
    e.mode = ExperimentConfig::Mode::full_dynamics;
  else if (mode == "large_n" || mode == "large_n_model")
    e.mode = ExperimentConfig::Mode::large_n_model;
  else
    throw ValidationError("config: unknown protocol.mode " + mode);
  e.mean_n_register = get_double("protocol.n_register");
  e.noise.p_c = get_double("protocol.p_c");
  e.noise.p_r = get_double("protocol.p_r");
  e.omega0_rad_per_s = units::hz_to_rad_per_s(get_double("protocol.omega0_hz"));
  e.t_s = get_double("protocol.t_s");
  e.nu = get_int("protocol.nu");
  e.seed = std::uint64_t(get_double("protocol.seed"));
  e.jobs = get_int("protocol.jobs");
  e.include_losses = get_bool("loss.include");
  const double span = get_double("scan.rel_span");
  const int points = get_int("scan.points");
  if (points < 1) throw ValidationError("config: scan.points must be >= 1");
  e.scan_rel.clear();
  if (points == 1) {
    e.scan_rel.push_back(0.0);
  } else {
    for (int i = 0; i < points; ++i)
      e.scan_rel.push_back(-span + 2.0 * span * double(i) / double(points - 1));
  }
  e.validate();
  return e;
}

CharacterizationOptions Config::build_characterization() const {
  CharacterizationOptions c;
  c.n_positions = get_int("gates_model.characterize_positions");
  c.seed = std::uint64_t(get_double("gates_model.characterize_seed"));
  c.magnus.steps = get_int("integrator.magnus_steps");
  return c;
}

ContrastCurveOptions Config::build_contrast_curve() const {
  ContrastCurveOptions o;
  o.max_n = get_int("gates_model.curve_max_n");
  o.nu = get_int("gates_model.curve_nu");
  o.scan_points = get_int("gates_model.curve_scan_points");
  o.seed = std::uint64_t(get_double("gates_model.curve_seed"));
  return o;
}

LargeNOptions Config::build_large_n_options() const {
  LargeNOptions o;
  const std::string mode = get_string("gates_model.mode");
  if (mode == "curve")
    o.gate_mode = LargeNGateMode::curve;
  else if (mode == "empirical" || mode == "empirical_phases")
    o.gate_mode = LargeNGateMode::empirical_phases;
  else if (mode == "perfect")
    o.gate_mode = LargeNGateMode::perfect;
  else
    throw ValidationError("config: unknown gates_model.mode " + mode);
  return o;
}

}  // namespace qmetro
