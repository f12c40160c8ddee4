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

#include "qndtomo/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace qnd {

namespace {

constexpr double kAxisTolerance = 1e-12;
constexpr double kCollapseNorm = 1e-8;

// Rodrigues rotation by `angle` about unit `axis`, row-major.
std::array<double, 9> rotation_matrix(const BlochVector& axis, double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  const double t = 1.0 - c;
  const double x = axis.x, y = axis.y, z = axis.z;
  return {t * x * x + c,     t * x * y - s * z, t * x * z + s * y,
          t * x * y + s * z, t * y * y + c,     t * y * z - s * x,
          t * x * z - s * y, t * y * z + s * x, t * z * z + c};
}

BlochVector rotate(const std::array<double, 9>& r, const BlochVector& v) {
  return {r[0] * v.x + r[1] * v.y + r[2] * v.z, r[3] * v.x + r[4] * v.y + r[5] * v.z,
          r[6] * v.x + r[7] * v.y + r[8] * v.z};
}

std::array<double, 9> multiply(const std::array<double, 9>& a, const std::array<double, 9>& b) {
  std::array<double, 9> out{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) out[3 * i + j] += a[3 * i + k] * b[3 * k + j];
  return out;
}

std::vector<std::size_t> snapshot_steps_for(std::span<const double> times, double dt,
                                            std::size_t num_steps) {
  std::vector<std::size_t> steps;
  steps.reserve(times.size());
  for (double t : times) {
    const double k = std::round(t / dt);
    if (k < 0.0 || k > static_cast<double>(num_steps)) {
      throw std::invalid_argument("snapshot time outside [0, T]");
    }
    steps.push_back(static_cast<std::size_t>(k));
  }
  return steps;
}

double jz_of(const ComplexVector& psi, const std::vector<double>& m) {
  double acc = 0.0;
  for (Eigen::Index k = 0; k < psi.size(); ++k) acc += m[k] * std::norm(psi[k]);
  return acc;
}

enum class StepOutcome { kOk, kCollapsed, kNonFinite };

// One Euler-Maruyama measurement increment on the CSE (diagonal in the Dicke
// basis), renormalization, then the exact control propagator for the step.
StepOutcome cse_step(ComplexVector& psi, const CsePropagator& prop, std::size_t step, double c,
                     double dv, double kappa, double dt, double& drift) {
  const auto& m = prop.m_values();
  const double sk = std::sqrt(kappa);
  for (Eigen::Index k = 0; k < psi.size(); ++k) {
    const double d = m[k] - c;
    psi[k] *= 1.0 - 0.125 * kappa * d * d * dt + 0.5 * sk * d * dv;
  }
  const double norm = psi.norm();
  if (!std::isfinite(norm)) return StepOutcome::kNonFinite;
  if (norm < kCollapseNorm) return StepOutcome::kCollapsed;
  drift = std::abs(norm - 1.0);
  psi /= norm;
  const int seg = prop.schedule().segment_at_step(step);
  if (seg >= 0) psi = prop.step_unitary(seg) * psi;
  return StepOutcome::kOk;
}

void check_alignment(const MeasurementRecord& record, const ControlWaveform& waveform) {
  record.validate();
  if (!waveform.empty() &&
      std::abs(waveform.total_time() - record.total_time()) > 1e-9 * std::max(1.0, record.total_time())) {
    throw std::invalid_argument("record and waveform cover different time spans");
  }
}

}  // namespace

BlochVector random_unit_vector(Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double z = 2.0 * u(rng) - 1.0;
  const double phi = 2.0 * std::numbers::pi * u(rng);
  const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
  return {r * std::cos(phi), r * std::sin(phi), z};
}

ControlWaveform::ControlWaveform(std::vector<BlochVector> axes, double larmor) : larmor_(larmor) {
  if (!(larmor > 0.0) && !axes.empty()) {
    throw std::invalid_argument("ControlWaveform: larmor frequency must be positive");
  }
  const double tau = axes.empty() ? 0.0 : std::numbers::pi / (2.0 * larmor);
  segments_.reserve(axes.size());
  for (std::size_t i = 0; i < axes.size(); ++i) {
    if (std::abs(axes[i].norm() - 1.0) > kAxisTolerance) {
      throw std::invalid_argument("ControlWaveform: axes must be unit vectors");
    }
    segments_.push_back({axes[i], static_cast<double>(i) * tau, tau});
  }
}

double ControlWaveform::segment_duration() const {
  return segments_.empty() ? 0.0 : segments_.front().duration;
}

double ControlWaveform::total_time() const {
  return static_cast<double>(segments_.size()) * segment_duration();
}

std::vector<BlochVector> ControlWaveform::axes() const {
  std::vector<BlochVector> out;
  out.reserve(segments_.size());
  for (const auto& s : segments_) out.push_back(s.axis);
  return out;
}

BlochVector ControlWaveform::field(double t) const {
  if (segments_.empty() || t < 0.0) return {};
  const auto i = static_cast<std::size_t>(std::floor(t / segment_duration()));
  if (i >= segments_.size()) return {};
  return segments_[i].axis * larmor_;
}

ControlWaveform random_waveform(int num_rotations, double larmor, Rng& rng) {
  if (num_rotations < 0) throw std::invalid_argument("random_waveform: negative rotation count");
  if (!(larmor > 0.0)) throw std::invalid_argument("random_waveform: larmor must be positive");
  std::vector<BlochVector> axes;
  axes.reserve(num_rotations);
  for (int i = 0; i < num_rotations; ++i) axes.push_back(random_unit_vector(rng));
  return ControlWaveform(std::move(axes), larmor);
}

std::size_t TrajectoryConfig::num_steps() const {
  validate();
  return static_cast<std::size_t>(std::llround(total_time / dt));
}

void TrajectoryConfig::validate() const {
  if (num_qubits < 1) throw std::invalid_argument("TrajectoryConfig: num_qubits must be >= 1");
  if (!(kappa > 0.0)) throw std::invalid_argument("TrajectoryConfig: kappa must be positive");
  if (!(dt > 0.0)) throw std::invalid_argument("TrajectoryConfig: dt must be positive");
  if (!(total_time >= 0.0)) throw std::invalid_argument("TrajectoryConfig: negative total time");
  const double steps = total_time / dt;
  if (std::abs(steps - std::round(steps)) > 1e-6) {
    throw std::invalid_argument("TrajectoryConfig: total_time is not a multiple of dt");
  }
  if (!(max_norm_drift > 0.0)) throw std::invalid_argument("TrajectoryConfig: bad max_norm_drift");
}

std::vector<double> MeasurementRecord::integrated() const {
  std::vector<double> y(increments.size() + 1, 0.0);
  for (std::size_t i = 0; i < increments.size(); ++i) y[i + 1] = y[i] + increments[i];
  return y;
}

void MeasurementRecord::validate() const {
  if (!(dt > 0.0)) throw std::invalid_argument("MeasurementRecord: dt must be positive");
  if (!(kappa >= 0.0)) throw std::invalid_argument("MeasurementRecord: kappa must be >= 0");
  if (num_qubits < 1) throw std::invalid_argument("MeasurementRecord: num_qubits must be >= 1");
  for (double v : increments) {
    if (!std::isfinite(v)) throw std::invalid_argument("MeasurementRecord: non-finite increment");
  }
}

ControlSchedule::ControlSchedule(const ControlWaveform& waveform, double dt, std::size_t num_steps)
    : axes_(waveform.axes()), num_steps_(num_steps) {
  if (waveform.empty()) return;
  const double ratio = waveform.segment_duration() / dt;
  const double rounded = std::round(ratio);
  if (rounded < 1.0 || std::abs(ratio - rounded) > 1e-6 * std::max(1.0, ratio)) {
    throw std::invalid_argument("ControlSchedule: segment duration is not a multiple of dt");
  }
  steps_per_segment_ = static_cast<std::size_t>(rounded);
  if (steps_per_segment_ * axes_.size() != num_steps) {
    throw std::invalid_argument("ControlSchedule: waveform does not tile the time grid");
  }
  step_angle_ = (std::numbers::pi / 2.0) / static_cast<double>(steps_per_segment_);
}

int ControlSchedule::segment_at_step(std::size_t i) const {
  if (steps_per_segment_ == 0 || i >= num_steps_) return -1;
  return static_cast<int>(i / steps_per_segment_);
}

CsePropagator::CsePropagator(int num_qubits, const ControlWaveform& waveform, double dt,
                             std::size_t num_steps)
    : num_qubits_(num_qubits), schedule_(waveform, dt, num_steps), m_(jz_diagonal(num_qubits)) {
  if (waveform.empty()) return;
  const CollectiveOps ops = build_ops(num_qubits);
  unitaries_.reserve(schedule_.axes().size());
  for (const auto& axis : schedule_.axes()) {
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> eig(ops.along(axis));
    const Eigen::VectorXd& lam = eig.eigenvalues();
    ComplexVector phases(lam.size());
    for (Eigen::Index k = 0; k < lam.size(); ++k) {
      phases[k] = std::polar(1.0, -schedule_.step_angle() * lam[k]);
    }
    const ComplexMatrix& v = eig.eigenvectors();
    unitaries_.push_back(v * phases.asDiagonal() * v.adjoint());
  }
}

TruthRun simulate_truth(const BlochVector& initial, const TrajectoryConfig& config,
                        const ControlWaveform& waveform, std::span<const double> snapshot_times) {
  config.validate();
  const std::size_t n = config.num_steps();
  if (!waveform.empty() &&
      std::abs(waveform.total_time() - config.total_time) > 1e-9 * std::max(1.0, config.total_time)) {
    throw std::invalid_argument("simulate_truth: waveform duration differs from total_time");
  }
  const CsePropagator prop(config.num_qubits, waveform, config.dt, n);
  const auto snaps = snapshot_steps_for(snapshot_times, config.dt, n);

  TruthRun out;
  out.record.dt = config.dt;
  out.record.kappa = config.kappa;
  out.record.num_qubits = config.num_qubits;
  out.record.seed = config.rng_seed;
  out.record.increments.resize(n);
  out.noise.resize(n);
  CseRun& traj = out.trajectory;
  traj.jz.resize(n + 1);

  ComplexVector psi = spin_coherent(initial, config.num_qubits).amplitudes();
  Rng rng(config.rng_seed);
  std::normal_distribution<double> gauss(0.0, std::sqrt(config.dt));
  const double sk = std::sqrt(config.kappa);

  auto take_snapshots = [&](std::size_t step) {
    for (std::size_t s : snaps)
      if (s == step) {
        traj.snapshots.emplace_back(psi);
        traj.snapshot_steps.push_back(step);
      }
  };

  for (std::size_t i = 0; i < n; ++i) {
    take_snapshots(i);
    const double c = jz_of(psi, prop.m_values());
    traj.jz[i] = c;
    const double dw = gauss(rng);
    out.noise[i] = dw;
    out.record.increments[i] = dw + sk * c * config.dt;
    double drift = 0.0;
    const auto outcome = cse_step(psi, prop, i, c, dw, config.kappa, config.dt, drift);
    if (outcome != StepOutcome::kOk) {
      throw StepSizeError("simulate_truth: state collapsed or became non-finite at step " +
                          std::to_string(i));
    }
    traj.max_norm_drift = std::max(traj.max_norm_drift, drift);
    if (drift > config.max_norm_drift) {
      throw StepSizeError("simulate_truth: norm drift " + std::to_string(drift) + " at step " +
                          std::to_string(i) + " exceeds the guard; reduce dt");
    }
  }
  traj.jz[n] = jz_of(psi, prop.m_values());
  take_snapshots(n);
  return out;
}

CseRun propagate_cse(const MeasurementRecord& record, const SymmetricState& initial,
                     const ControlWaveform& waveform, std::span<const double> snapshot_times) {
  check_alignment(record, waveform);
  if (initial.num_qubits() != record.num_qubits) {
    throw std::invalid_argument("propagate_cse: initial state size does not match the record");
  }
  const std::size_t n = record.num_steps();
  const CsePropagator prop(record.num_qubits, waveform, record.dt, n);
  const auto snaps = snapshot_steps_for(snapshot_times, record.dt, n);

  CseRun run;
  run.jz.assign(n + 1, 0.0);
  ComplexVector psi = initial.amplitudes();
  const double sk = std::sqrt(record.kappa);
  auto take_snapshots = [&](std::size_t step) {
    for (std::size_t s : snaps)
      if (s == step) {
        run.snapshots.emplace_back(psi);
        run.snapshot_steps.push_back(step);
      }
  };

  for (std::size_t i = 0; i < n; ++i) {
    take_snapshots(i);
    const double c = jz_of(psi, prop.m_values());
    run.jz[i] = c;
    const double dv = record.increments[i] - sk * c * record.dt;
    double drift = 0.0;
    const auto outcome = cse_step(psi, prop, i, c, dv, record.kappa, record.dt, drift);
    if (outcome != StepOutcome::kOk) {
      run.stable = false;
      run.failed_step = i;
      run.failure = outcome == StepOutcome::kCollapsed ? "norm collapse" : "non-finite amplitudes";
      run.jz.resize(i + 1);
      return run;
    }
    run.max_norm_drift = std::max(run.max_norm_drift, drift);
  }
  run.jz[n] = jz_of(psi, prop.m_values());
  take_snapshots(n);
  return run;
}

ScsPropagator::ScsPropagator(const MeasurementRecord& record, const ControlWaveform& waveform)
    : record_(&record), schedule_(waveform, record.dt, record.num_steps()) {
  check_alignment(record, waveform);
  for (const auto& axis : schedule_.axes()) {
    rotations_.push_back(rotation_matrix(axis, schedule_.step_angle()));
  }
}

// The measurement increment is the single-qubit image of the CSE step:
// rho -> M rho M^dag / Tr with M = diag(a, b) in the jz basis, written out
// on the Bloch vector. For N = 1 it coincides with the CSE update.
ScsRun ScsPropagator::run(const BlochVector& initial, bool keep_bloch) const {
  if (!(initial.norm() <= 1.0 + 1e-9)) {
    throw std::invalid_argument("propagate_scs: initial Bloch vector has norm > 1");
  }
  const MeasurementRecord& rec = *record_;
  const std::size_t n = rec.num_steps();
  const double kappa = rec.kappa;
  const double dt = rec.dt;
  const double sk = std::sqrt(kappa);
  const double half_n = 0.5 * rec.num_qubits;

  ScsRun run;
  run.z.resize(n + 1);
  if (keep_bloch) run.bloch.resize(n + 1);
  BlochVector v = initial;
  for (std::size_t i = 0; i < n; ++i) {
    run.z[i] = v.z;
    if (keep_bloch) run.bloch[i] = v;
    const double c = 0.5 * v.z;
    const double dv = rec.increments[i] - sk * half_n * v.z * dt;
    const double du = 0.5 - c;
    const double dd = -0.5 - c;
    const double a = 1.0 - 0.125 * kappa * du * du * dt + 0.5 * sk * du * dv;
    const double b = 1.0 - 0.125 * kappa * dd * dd * dt + 0.5 * sk * dd * dv;
    const double up = a * a * (1.0 + v.z);
    const double down = b * b * (1.0 - v.z);
    const double trace = up + down;
    if (!std::isfinite(trace) || trace < kCollapseNorm * kCollapseNorm) {
      run.stable = false;
      run.failed_step = i;
      run.failure = std::isfinite(trace) ? "trace collapse" : "non-finite Bloch vector";
      run.z.resize(i + 1);
      if (keep_bloch) run.bloch.resize(i + 1);
      return run;
    }
    const double off = 2.0 * a * b / trace;
    v = {off * v.x, off * v.y, (up - down) / trace};
    const double len = v.norm();
    if (len > 1.0) v = v * (1.0 / len);
    const int seg = schedule_.segment_at_step(i);
    if (seg >= 0) v = rotate(rotations_[seg], v);
  }
  run.z[n] = v.z;
  if (keep_bloch) run.bloch[n] = v;
  return run;
}

ScsRun propagate_scs(const MeasurementRecord& record, const BlochVector& initial,
                     const ControlWaveform& waveform, bool keep_bloch) {
  return ScsPropagator(record, waveform).run(initial, keep_bloch);
}

std::vector<BlochVector> heisenberg_z_rows(const ControlWaveform& waveform, double dt,
                                           std::size_t num_steps) {
  const ControlSchedule schedule(waveform, dt, num_steps);
  std::vector<std::array<double, 9>> step_rot;
  for (const auto& axis : schedule.axes()) {
    step_rot.push_back(rotation_matrix(axis, schedule.step_angle()));
  }
  std::vector<BlochVector> rows(num_steps + 1);
  std::array<double, 9> total = {1, 0, 0, 0, 1, 0, 0, 0, 1};
  rows[0] = {total[6], total[7], total[8]};
  for (std::size_t i = 0; i < num_steps; ++i) {
    const int seg = schedule.segment_at_step(i);
    if (seg >= 0) total = multiply(step_rot[seg], total);
    rows[i + 1] = {total[6], total[7], total[8]};
  }
  return rows;
}

std::vector<double> propagate_backaction_free(const BlochVector& initial,
                                              const ControlWaveform& waveform, double dt,
                                              std::size_t num_steps) {
  if (std::abs(initial.norm() - 1.0) > 1e-9) {
    throw std::invalid_argument("propagate_backaction_free: initial must be a unit vector");
  }
  const auto rows = heisenberg_z_rows(waveform, dt, num_steps);
  std::vector<double> z;
  z.reserve(rows.size());
  for (const auto& r : rows) z.push_back(r.dot(initial));
  return z;
}

std::vector<double> rms_z_error(std::span<const std::vector<double>> exact_jz,
                                std::span<const std::vector<double>> approx_z, double spin) {
  if (exact_jz.size() != approx_z.size() || exact_jz.empty()) {
    throw std::invalid_argument("rms_z_error: need equal, non-zero trial counts");
  }
  if (!(spin > 0.0)) throw std::invalid_argument("rms_z_error: spin must be positive");
  const std::size_t len = exact_jz.front().size();
  std::vector<double> acc(len, 0.0);
  for (std::size_t t = 0; t < exact_jz.size(); ++t) {
    if (exact_jz[t].size() != len || approx_z[t].size() != len) {
      throw std::invalid_argument("rms_z_error: series lengths differ");
    }
    for (std::size_t k = 0; k < len; ++k) {
      const double e = exact_jz[t][k] / spin - approx_z[t][k];
      acc[k] += e * e;
    }
  }
  for (double& a : acc) a = std::sqrt(a / static_cast<double>(exact_jz.size()));
  return acc;
}

}  // namespace qnd
