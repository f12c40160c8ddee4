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

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "qndtomo/rng.hpp"
#include "qndtomo/spin.hpp"

namespace qnd {

/// Raised when truth generation cannot proceed at the configured step size.
class StepSizeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

BlochVector random_unit_vector(Rng& rng);

/// One constant-field stretch of the control: b(t) = larmor * axis on [start, start + duration).
struct ControlSegment {
  BlochVector axis;
  double start = 0.0;
  double duration = 0.0;
};

/// Piecewise-constant control field made of pi/2 rotations about the segment
/// axes. An empty waveform means b(t) = 0 for all t.
class ControlWaveform {
 public:
  ControlWaveform() = default;
  /// Each segment lasts tau = pi / (2 larmor); axes are normalized-checked.
  ControlWaveform(std::vector<BlochVector> axes, double larmor);

  const std::vector<ControlSegment>& segments() const { return segments_; }
  double larmor() const { return larmor_; }
  double segment_duration() const;
  double total_time() const;
  bool empty() const { return segments_.empty(); }
  std::vector<BlochVector> axes() const;

  /// b(t); zero outside [0, T) and for the empty waveform.
  BlochVector field(double t) const;

 private:
  std::vector<ControlSegment> segments_;
  double larmor_ = 0.0;
};

ControlWaveform random_waveform(int num_rotations, double larmor, Rng& rng);

struct TrajectoryConfig {
  int num_qubits = 1;
  double kappa = 1.0;
  double total_time = 0.8;
  double dt = 1e-4;
  std::uint64_t rng_seed = 0;
  /// Truth generation fails if |norm - 1| before renormalization exceeds this in any step.
  double max_norm_drift = 0.05;

  std::size_t num_steps() const;
  void validate() const;
};

/// Increments dy_i over [t_i, t_i + dt), i = 0..n-1, of the integrated photocurrent.
struct MeasurementRecord {
  static constexpr int kFormatVersion = 1;

  double dt = 0.0;
  std::vector<double> increments;
  double kappa = 1.0;
  int num_qubits = 1;
  std::uint64_t seed = 0;

  std::size_t num_steps() const { return increments.size(); }
  double total_time() const { return dt * static_cast<double>(increments.size()); }
  /// y(t_k) for k = 0..n (cumulative sum, y(0) = 0).
  std::vector<double> integrated() const;
  void validate() const;
};

/// Maps a waveform onto a uniform time grid. Segment boundaries must land on
/// grid points (tau / dt integral).
class ControlSchedule {
 public:
  ControlSchedule(const ControlWaveform& waveform, double dt, std::size_t num_steps);

  /// Segment active during step i, or -1 when no control acts.
  int segment_at_step(std::size_t i) const;
  double step_angle() const { return step_angle_; }
  const std::vector<BlochVector>& axes() const { return axes_; }
  std::size_t num_steps() const { return num_steps_; }

 private:
  std::vector<BlochVector> axes_;
  std::size_t num_steps_ = 0;
  std::size_t steps_per_segment_ = 0;
  double step_angle_ = 0.0;
};

/// Output of an exact conditional-Schrodinger propagation.
struct CseRun {
  /// <Jz> at t_k = k dt, k = 0..n (n+1 values).
  std::vector<double> jz;
  /// Grid index of each snapshot, in emission (ascending step) order.
  std::vector<std::size_t> snapshot_steps;
  std::vector<SymmetricState> snapshots;
  bool stable = true;
  std::size_t failed_step = 0;
  std::string failure;
  double max_norm_drift = 0.0;
};

struct TruthRun {
  MeasurementRecord record;
  /// Wiener increments dw_i actually drawn (dy_i = dw_i + sqrt(kappa) <Jz>_i dt).
  std::vector<double> noise;
  CseRun trajectory;
};

/// Generates a record from |n>^{tensor N} by integrating the conditional
/// Schrodinger equation with innovation dv = dw. Snapshot times are rounded
/// to the grid. Throws StepSizeError if the norm guard fires.
TruthRun simulate_truth(const BlochVector& initial, const TrajectoryConfig& config,
                        const ControlWaveform& waveform,
                        std::span<const double> snapshot_times = {});

/// Filters `initial` against an external record. Never throws on numerical
/// blow-up: the run is marked unstable instead.
CseRun propagate_cse(const MeasurementRecord& record, const SymmetricState& initial,
                     const ControlWaveform& waveform,
                     std::span<const double> snapshot_times = {});

struct ScsRun {
  /// z(t_k), k = 0..n.
  std::vector<double> z;
  /// Full Bloch vectors at t_k when requested.
  std::vector<BlochVector> bloch;
  bool stable = true;
  std::size_t failed_step = 0;
  std::string failure;
};

/// Per-step control propagators for one (waveform, grid) pair. Shared
/// read-only by every candidate filtered against the same record.
class CsePropagator {
 public:
  CsePropagator(int num_qubits, const ControlWaveform& waveform, double dt, std::size_t num_steps);

  int num_qubits() const { return num_qubits_; }
  const ControlSchedule& schedule() const { return schedule_; }
  /// exp(-i angle e.J) for segment s.
  const ComplexMatrix& step_unitary(int segment) const { return unitaries_[segment]; }
  const std::vector<double>& m_values() const { return m_; }

 private:
  int num_qubits_;
  ControlSchedule schedule_;
  std::vector<ComplexMatrix> unitaries_;
  std::vector<double> m_;
};

/// Separable spin-coherent approximation: the Bloch vector is filtered
/// against the record with innovation dv = dy - sqrt(kappa) (N/2) z dt.
/// Mixed initial conditions (|n| < 1) are allowed.
ScsRun propagate_scs(const MeasurementRecord& record, const BlochVector& initial,
                     const ControlWaveform& waveform, bool keep_bloch = false);

/// Reusable form of propagate_scs: per-step rotations are built once.
class ScsPropagator {
 public:
  ScsPropagator(const MeasurementRecord& record, const ControlWaveform& waveform);

  ScsRun run(const BlochVector& initial, bool keep_bloch = false) const;
  const MeasurementRecord& record() const { return *record_; }

 private:
  const MeasurementRecord* record_;
  ControlSchedule schedule_;
  std::vector<std::array<double, 9>> rotations_;
};

/// Rows r_k with z(t_k) = r_k . n(0) under the control rotations alone.
std::vector<BlochVector> heisenberg_z_rows(const ControlWaveform& waveform, double dt,
                                           std::size_t num_steps);

/// z(t_k), k = 0..n, for n(t) = R(t) n(0). Independent of any record.
std::vector<double> propagate_backaction_free(const BlochVector& initial,
                                              const ControlWaveform& waveform, double dt,
                                              std::size_t num_steps);

/// Per-time RMS over trials of (<Jz>/J - z). Each trial contributes one exact
/// and one approximate series of equal length.
std::vector<double> rms_z_error(std::span<const std::vector<double>> exact_jz,
                                std::span<const std::vector<double>> approx_z, double spin);

}  // namespace qnd
