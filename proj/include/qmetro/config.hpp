#pragma once

#include <map>
#include <string>
#include <vector>

#include "qmetro/errors.hpp"
#include "qmetro/experiment.hpp"

namespace qmetro {

// Hierarchical key/value configuration: INI-style sections in the file,
// dot-path keys ("section.key") in the API, --set overrides and environment
// overrides (QMETRO_SECTION__KEY) layered on top.
class Config {
 public:
  static Config from_file(const std::string& path);
  static Config from_string(const std::string& text);
  static Config defaults();

  void apply_override(const std::string& dot_key, const std::string& value);
  void apply_set_expression(const std::string& key_eq_value);  // "a.b=v"
  void apply_environment(const char* prefix = "QMETRO_");
  void merge_defaults();  // fill missing keys from defaults()

  bool has(const std::string& key) const;
  std::string get_string(const std::string& key) const;
  double get_double(const std::string& key) const;
  int get_int(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  std::vector<double> get_double_list(const std::string& key) const;
  Vec3 get_vec3(const std::string& key) const;

  const std::map<std::string, std::string>& entries() const { return values_; }

  // resolved builders
  PhysicalSetup build_setup() const;
  ExperimentConfig build_experiment() const;
  CharacterizationOptions build_characterization() const;
  ContrastCurveOptions build_contrast_curve() const;
  LargeNOptions build_large_n_options() const;

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace qmetro
