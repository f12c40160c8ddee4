// Copyright 2026 The qndtomo Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "qndtomo/estimator.hpp"
#include "qndtomo/spin.hpp"
#include "qndtomo/trajectory.hpp"

namespace qnd {

/// Invalid or inconsistent experiment configuration (CLI exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Runs fn(i) for i in [0, count) on up to `threads` workers. Callers write
/// results into index-addressed slots, so output never depends on scheduling.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& fn);

// Stream tags for derive_seed.
enum SeedTag : std::uint64_t {
  kTagWaveform = 1,
  kTagTruthState = 2,
  kTagTruthNoise = 3,
  kTagEstimator = 4,
};

struct CampaignConfig {
  std::vector<int> qubit_counts = {25, 40, 55, 70, 85, 100};
  int trials_per_n = 1000;
  int num_rotations = 40;
  double larmor = 25.0 * std::numbers::pi;
  double total_time = 0.8;
  double dt = 1e-4;
  double kappa = 1.0;
  double max_norm_drift = 0.05;
  EstimatorConfig estimator;
  std::uint64_t master_seed = 1;
  std::string output_dir = "out";
  /// One waveform per campaign (true) or a fresh one per trial.
  bool shared_waveform = true;

  void validate() const;
};

struct TrialRow {
  int num_qubits = 0;
  int trial = 0;
  BlochVector truth;
  BlochVector estimate;
  double infidelity = 0.0;
  EstimatorKind kind = EstimatorKind::kScsMle;
  std::size_t n_invalid = 0;
  std::size_t n_invalid_stage2 = 0;
  std::size_t stage2_count = 0;
  double wall_time = 0.0;
  bool failed = false;
  std::string error;
};

struct AggregateRow {
  int num_qubits = 0;
  int trials = 0;
  int failed = 0;
  double mean_infidelity = 0.0;
  double std_error = 0.0;
  /// 1/(N+2), the optimal-POVM average infidelity.
  double optimal_bound = 0.0;
};

struct PowerLawFit {
  double a = 0.0;
  double a_err = 0.0;
  double b = 0.0;
  double b_err = 0.0;
};

struct CampaignResult {
  EstimatorKind kind = EstimatorKind::kScsMle;
  std::vector<TrialRow> rows;
  std::vector<AggregateRow> aggregates;
  std::optional<PowerLawFit> fit;

  std::size_t failed_trials() const;
  double failed_fraction() const;
};

/// Unweighted OLS of ln(y) on ln(N); standard errors from the residual variance.
PowerLawFit fit_power_law(std::span<const double> ns, std::span<const double> values);

/// Aggregates (sorted by N) over successful rows: mean, sqrt(Var/nu), bound.
std::vector<AggregateRow> aggregate_rows(std::span<const TrialRow> rows);

CampaignResult run_campaign(const CampaignConfig& config, EstimatorKind kind, int threads = 1);

struct ApproxStudyConfig {
  std::vector<int> qubit_counts = {1, 25, 50, 75, 100};
  int trials = 100;
  int num_rotations = 40;
  double larmor = 25.0 * std::numbers::pi;
  double total_time = 0.8;
  double dt = 1e-4;
  double kappa = 1.0;
  double max_norm_drift = 0.05;
  std::uint64_t master_seed = 1;
  bool shared_waveform = false;
  /// Fidelity and z-error are reported every `sample_every` steps.
  int sample_every = 100;
  std::vector<bool> control_modes = {false, true};
  std::string output_dir = "out";

  void validate() const;
};

struct ApproxSeries {
  int num_qubits = 0;
  bool with_controls = false;
  std::vector<double> times;
  std::vector<double> mean_fidelity;
  std::vector<double> rms_z_err;
  /// Max of the RMS z error over every grid point, not just sampled ones.
  double max_rms_z_err = 0.0;
  double min_mean_fidelity = 1.0;
  double final_mean_fidelity = 1.0;
};

std::vector<ApproxSeries> run_approximation_study(const ApproxStudyConfig& config, int threads = 1);

struct SqueezeConfig {
  int num_qubits = 75;
  bool with_controls = false;
  int num_rotations = 10;
  double larmor = 25.0 * std::numbers::pi;
  double total_time = 0.2;
  double dt = 1e-4;
  double kappa = 1.0;
  double max_norm_drift = 0.05;
  std::uint64_t seed = 1;
  int sample_every = 10;
  std::vector<double> q_times = {0.0, 0.03, 0.1, 0.2};
  int q_polar_points = 60;
  int q_azimuth_points = 120;
  std::string output_dir = "out";

  void validate() const;
};

struct QSnapshot {
  double time = 0.0;
  std::vector<SpherePoint> grid;
  std::vector<double> values;
};

struct SqueezeDemoResult {
  std::vector<double> times;
  std::vector<double> xi_squared;
  std::vector<double> xi_squared_db;
  /// Integrated record y(t) at `times`.
  std::vector<double> record;
  std::vector<BlochVector> mean_spin;
  std::vector<QSnapshot> q_snapshots;
  ControlWaveform waveform;
};

SqueezeDemoResult run_squeezing_demo(const SqueezeConfig& config);

struct GaussLegendre {
  std::vector<double> nodes;
  std::vector<double> weights;
};
/// Nodes on [-1, 1] in descending order, with weights.
GaussLegendre gauss_legendre(int order);

/// Polar nodes at Gauss-Legendre points in cos(theta) (ascending theta),
/// azimuth uniform from 0. Row-major: polar index outer.
std::vector<SpherePoint> sphere_grid(int polar_points, int azimuth_points);
/// Integral over the sphere of samples on a sphere_grid. Exact for spin-Husimi
/// functions with N < 2 polar_points and N < azimuth_points.
double sphere_quadrature(std::span<const double> values, int polar_points, int azimuth_points);

}  // namespace qnd
