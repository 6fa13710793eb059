#pragma once

#include <json.hpp>
#include <string>
#include <vector>

#include "qmetro/config.hpp"
#include "qmetro/estimation.hpp"
#include "qmetro/experiment.hpp"

namespace qmetro {

inline constexpr const char* kToolVersion = "qmetro 0.1.0";
inline constexpr int kOutputSchemaVersion = 1;

// long-format dataset CSV: one row per scan point, optional leading cell-id
// columns for sweeps
void write_fringe_csv(const std::string& path, const FringeDataset& data,
                      const std::vector<std::pair<std::string, std::string>>& cell_columns = {});

// append rows (no header) used by the sweep aggregator
std::string fringe_csv_header(const std::vector<std::string>& cell_names);
void append_fringe_rows(std::string& out, const FringeDataset& data,
                        const std::vector<std::string>& cell_values);

nlohmann::json fit_to_json(const FringeFit& fit);
nlohmann::json report_to_json(const SensitivityReport& rep);
nlohmann::json dataset_summary_json(const FringeDataset& data);

nlohmann::json gate_model_to_json(const GateContrastModel& model);
GateContrastModel gate_model_from_json(const nlohmann::json& j);

void write_json_file(const std::string& path, const nlohmann::json& j);
nlohmann::json read_json_file(const std::string& path);

// atomic write: tmp file + rename (checkpoint/resume safety)
void write_text_file_atomic(const std::string& path, const std::string& content);

nlohmann::json config_snapshot(const Config& cfg);

}  // namespace qmetro
