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

#include "qndtomo/likelihood.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace qnd {

namespace {

MeanSignalSeries scaled_signal(std::span<const double> series, const MeasurementRecord& record,
                               double scale) {
  const std::size_t n = record.num_steps();
  if (series.size() < n) {
    throw std::invalid_argument("mean signal series shorter than the record");
  }
  MeanSignalSeries m;
  m.dt = record.dt;
  m.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) m.values[i] = scale * series[i];
  return m;
}

}  // namespace

MeanSignalSeries spin_mean_signal(std::span<const double> z, const MeasurementRecord& record) {
  return scaled_signal(z, record, std::sqrt(record.kappa) * 0.5 * record.num_qubits);
}

MeanSignalSeries jz_mean_signal(std::span<const double> jz, const MeasurementRecord& record) {
  return scaled_signal(jz, record, std::sqrt(record.kappa));
}

double log_likelihood_functional(const MeasurementRecord& record, const MeanSignalSeries& m) {
  if (m.values.size() != record.num_steps()) {
    throw std::invalid_argument("mean signal length does not match the record");
  }
  const double dt = record.dt;
  double cross = 0.0;
  double energy = 0.0;
  for (std::size_t i = 0; i < m.values.size(); ++i) {
    const double mi = m.values[i];
    if (!std::isfinite(mi)) throw std::invalid_argument("non-finite mean signal");
    cross += mi * record.increments[i];
    energy += mi * mi;
  }
  return cross - 0.5 * energy * dt;
}

LLRValue llr_general(const MeasurementRecord& record, const MeanSignalSeries& m1,
                     const MeanSignalSeries& m2) {
  record.validate();
  LLRValue out;
  out.candidate_id = 0;
  out.reference_id = 1;
  out.value = log_likelihood_functional(record, m1) - log_likelihood_functional(record, m2);
  out.valid = std::isfinite(out.value);
  return out;
}

LLRValue llr_scs(const MeasurementRecord& record, const BlochVector& candidate,
                 const BlochVector& reference, const ControlWaveform& waveform) {
  const ScsPropagator prop(record, waveform);
  const ScsRun cand = prop.run(candidate);
  const ScsRun ref = prop.run(reference);
  LLRValue out;
  out.reference_id = 1;
  if (!cand.stable || !ref.stable) {
    out.valid = false;
    return out;
  }
  out.value = log_likelihood_functional(record, spin_mean_signal(cand.z, record)) -
              log_likelihood_functional(record, spin_mean_signal(ref.z, record));
  out.valid = std::isfinite(out.value);
  return out;
}

LLRValue llr_backaction_free(const MeasurementRecord& record, const BlochVector& candidate,
                             const BlochVector& reference, const ControlWaveform& waveform) {
  record.validate();
  const std::size_t n = record.num_steps();
  const auto zc = propagate_backaction_free(candidate, waveform, record.dt, n);
  const auto zr = propagate_backaction_free(reference, waveform, record.dt, n);
  LLRValue out;
  out.reference_id = 1;
  out.value = log_likelihood_functional(record, spin_mean_signal(zc, record)) -
              log_likelihood_functional(record, spin_mean_signal(zr, record));
  out.valid = std::isfinite(out.value);
  return out;
}

LLRValue llr_cse(const MeasurementRecord& record, const SymmetricState& candidate,
                 const SymmetricState& reference, const ControlWaveform& waveform) {
  const CseRun cand = propagate_cse(record, candidate, waveform);
  const CseRun ref = propagate_cse(record, reference, waveform);
  LLRValue out;
  out.reference_id = 1;
  if (!cand.stable || !ref.stable) {
    out.valid = false;
    return out;
  }
  out.value = log_likelihood_functional(record, jz_mean_signal(cand.jz, record)) -
              log_likelihood_functional(record, jz_mean_signal(ref.jz, record));
  out.valid = std::isfinite(out.value);
  return out;
}

double step_log_density(double dy, double m, double dt) {
  const double r = dy - m * dt;
  return -0.5 * r * r / dt - 0.5 * std::log(2.0 * std::numbers::pi * dt);
}

}  // namespace qnd
