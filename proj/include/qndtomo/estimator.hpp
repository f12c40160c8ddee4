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
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "qndtomo/rng.hpp"
#include "qndtomo/spin.hpp"
#include "qndtomo/trajectory.hpp"

namespace qnd {

class EstimationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EstimatorConfig {
  int m1_count = 250;
  int m2_count = 250;
  double shell_radius = 0.75;
  double cap_half_angle = std::numbers::pi / 4.0;
  int baseline_count = 1700;
  std::uint64_t rng_seed = 0;

  void validate() const;
};

struct CandidateScore {
  BlochVector candidate;
  double llr = 0.0;
  bool valid = true;
};

enum class EstimatorKind { kScsMle, kBackactionFree };

std::string to_string(EstimatorKind kind);
EstimatorKind estimator_kind_from_string(const std::string& name);

struct EstimateReport {
  EstimatorKind kind = EstimatorKind::kScsMle;
  /// Unit Bloch vector of the reported pure state.
  BlochVector estimate;
  /// Stage-1 reference: the maximally mixed state (zero vector).
  BlochVector reference_stage1;
  /// Stage-1 argmax on the mixed shell (norm = shell radius).
  BlochVector winner_stage1;
  /// Stage-2 reference n*/|n*|. For the backaction-free estimator: the first sample.
  BlochVector reference_stage2;
  std::vector<CandidateScore> stage1;
  std::vector<CandidateScore> stage2;
  std::size_t n_invalid = 0;
  std::size_t n_invalid_stage2 = 0;
};

std::vector<BlochVector> sample_sphere(int count, Rng& rng);
/// `count` vectors of norm exactly `radius` with isotropic directions.
std::vector<BlochVector> sample_shell(int count, double radius, Rng& rng);
/// Area-uniform unit vectors on {n : n.center >= cos(half_angle)}.
std::vector<BlochVector> sample_cap(int count, const BlochVector& center, double half_angle,
                                    Rng& rng);

/// Index of the largest valid score; ties go to the lowest index. Returns
/// scores.size() when nothing is valid.
std::size_t argmax_valid(std::span<const CandidateScore> scores);

/// Two-stage maximum-likelihood estimate with the spin-coherent filter.
/// Throws EstimationError when every stage-1 candidate (or the stage-2
/// reference) is numerically invalid.
EstimateReport estimate_mle(const MeasurementRecord& record, const ControlWaveform& waveform,
                            const EstimatorConfig& config);

/// Single-stage argmax over uniform sphere samples with the backaction-free
/// signal model; the first sample is the reference.
EstimateReport estimate_backaction_free(const MeasurementRecord& record,
                                        const ControlWaveform& waveform,
                                        const EstimatorConfig& config);

EstimateReport estimate(EstimatorKind kind, const MeasurementRecord& record,
                        const ControlWaveform& waveform, const EstimatorConfig& config);

enum class DensityMode { kSphere, kCap };

/// Mean over points of min over other points of (1 - qubit fidelity).
double nearest_neighbor_infidelity(std::span<const BlochVector> points);
/// Draws `count` points (uniform sphere, or a pi/4 cap around +z) and measures them.
double sample_density_check(int count, DensityMode mode, Rng& rng,
                            double cap_half_angle = std::numbers::pi / 4.0);

}  // namespace qnd
