#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "qmetro/analytic.hpp"
#include "qmetro/gatesim.hpp"
#include "qmetro/rng.hpp"
#include "qmetro/traps.hpp"
#include "qmetro/units.hpp"

namespace qmetro {

// Resolved physical parameter blocks shared by the experiment drivers.
struct PhysicalSetup {
  AtomLevelScheme scheme;
  PulseSchedule pulses;
  TrapGeometry control_trap;
  TrapGeometry register_trap;
  InteractionParams control_register = control_register_interaction_defaults();
  InteractionParams register_register = register_register_interaction_defaults();
  LossModel loss;
  MagnusOptions magnus{128};
};

// trap, pulse and interaction blocks of the reference implementation scenario
PhysicalSetup reference_setup(double gamma_dph_per_s);

struct ExperimentConfig {
  enum class Mode { full_dynamics, large_n_model };
  Mode mode = Mode::full_dynamics;
  double mean_n_register = 1.0;  // integer register size in full_dynamics
  NoiseParams noise;
  std::vector<double> scan_rel;  // delta omega / omega0 grid
  double omega0_rad_per_s = 2.0 * units::pi * 5326.0;
  double t_s = 375e-6;
  int nu = 49;
  std::uint64_t seed = 1;
  bool ninf = false;           // report probabilities directly (nu -> infinity)
  bool include_losses = true;  // large-N model only
  int jobs = 1;

  void validate() const;
};

struct FringePoint {
  double rel_detuning = 0.0;
  double sigma_z = 0.0;
  long n0 = 0, n1 = 0, losses = 0;
};

struct FringeDataset {
  std::vector<FringePoint> points;
  int nu = 1;
  bool ninf = false;
  double omega0_rad_per_s = 0.0;
  double t_s = 0.0;
  double mean_n_register = 0.0;
  NoiseParams noise;
  std::uint64_t seed = 0;
  long position_retries = 0;

  void check_tallies() const;  // n0 + n1 + losses = nu per point
};

// Full master-equation Monte-Carlo protocol (register sizes 1..3): fresh
// positions per scan point, repetition and gate; one measurement draw per
// repetition.
FringeDataset run_full_protocol(const ExperimentConfig& cfg, const PhysicalSetup& setup);

// ---- factorized large-register model ----

struct GateContrastModel {
  std::vector<GatePairRecord> records;  // empirical per-position records
  double kappa_control = 1.0;           // control coherence factor per gate pair
  double p_c = 1.0;
  double curve_amplitude = 1.0;  // contrast(N) = amplitude exp(-decay N)
  double curve_decay = 0.0;
  bool has_curve = false;
  std::vector<std::pair<int, double>> curve_points;
  bool perfect = false;  // ideal gates: contrast = p_c, no extra phases

  double contrast_at(double n) const;
};

GateContrastModel perfect_gate_model(double p_c);

struct CharacterizationOptions {
  int n_positions = 64;
  std::uint64_t seed = 77;
  MagnusOptions magnus{128};
};

// single-atom gate records over trap-sampled control/register positions
std::vector<GatePairRecord> characterize_gate_records(const PhysicalSetup& setup,
                                                      const CharacterizationOptions& opts);

struct ContrastCurveOptions {
  int max_n = 9;
  int nu = 49;
  int scan_points = 9;
  std::uint64_t seed = 7;
  bool sample_measurement = true;
};

// contrast-vs-N curve with exponential fit (evolution time ~ one half fringe
// period, scanned locally so the fitted amplitude is phase-robust)
GateContrastModel gate_contrast_curve(const PhysicalSetup& setup, const NoiseParams& noise,
                                      const CharacterizationOptions& copts,
                                      const ContrastCurveOptions& opts);

enum class LargeNGateMode { curve, empirical_phases, perfect };

struct LargeNOptions {
  LargeNGateMode gate_mode = LargeNGateMode::curve;
};

FringeDataset run_large_n(const ExperimentConfig& cfg, const PhysicalSetup& setup,
                          const GateContrastModel& gates, const LargeNOptions& opts = {});

// phase evolution rate of a gravity measurement with trap separation dz
double gravity_omega_rad_per_s(double dz_um, double mass_kg = units::mass_rb87_kg,
                               double g_m_per_s2 = units::g_earth_m_per_s2);

// named presets for the 2.5-um separation scenario: the quoted value and the
// linearly-scaled per-um rate disagree by ~0.7%, so both ship
inline constexpr double kGravityOmega0QuotedHz = 5326.0;
inline constexpr double kGravityOmega0LinearHz = 5363.0;

}  // namespace qmetro
