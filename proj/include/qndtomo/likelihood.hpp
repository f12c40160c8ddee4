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
#include <span>
#include <vector>

#include "qndtomo/spin.hpp"
#include "qndtomo/trajectory.hpp"

namespace qnd {

/// Drift m_i of the record model, sampled at left endpoints t_i (i = 0..n-1).
struct MeanSignalSeries {
  std::vector<double> values;
  double dt = 0.0;
};

/// lambda = ln Lambda(candidate, reference). Only meaningful when `valid`.
struct LLRValue {
  double value = 0.0;
  std::size_t candidate_id = 0;
  std::size_t reference_id = 0;
  bool valid = true;
};

/// sqrt(kappa) (N/2) z_i for the first record.num_steps() entries of a
/// z(t_k) series (the final point t_n is not part of any Ito sum).
MeanSignalSeries spin_mean_signal(std::span<const double> z, const MeasurementRecord& record);

/// sqrt(kappa) <Jz>_i from an exact <Jz> series.
MeanSignalSeries jz_mean_signal(std::span<const double> jz, const MeasurementRecord& record);

/// Log-likelihood functional of one model relative to the pure-noise model
/// (m = 0): S(m) = sum_i m_i dy_i - 1/2 sum_i m_i^2 dt. lambda(1, 2) = S(m1) - S(m2).
/// Argmax over candidates only needs S, so the reference never affects it.
double log_likelihood_functional(const MeasurementRecord& record, const MeanSignalSeries& m);

/// Left-endpoint (Ito) discretization of the continuous-time likelihood ratio.
/// Throws on length mismatch or non-finite inputs.
LLRValue llr_general(const MeasurementRecord& record, const MeanSignalSeries& m1,
                     const MeanSignalSeries& m2);

/// Candidate and reference filtered with the separable spin-coherent model.
/// valid = false when either propagation is unstable.
LLRValue llr_scs(const MeasurementRecord& record, const BlochVector& candidate,
                 const BlochVector& reference, const ControlWaveform& waveform);

/// Mean signal from control rotations alone (no conditioning on the record).
LLRValue llr_backaction_free(const MeasurementRecord& record, const BlochVector& candidate,
                             const BlochVector& reference, const ControlWaveform& waveform);

/// Exact many-body variant built on propagate_cse. Intended for small-N
/// validation; the estimators never use it.
LLRValue llr_cse(const MeasurementRecord& record, const SymmetricState& candidate,
                 const SymmetricState& reference, const ControlWaveform& waveform);

/// Per-step Gaussian log-density ln N(dy; m dt, dt) of the finite-step
/// likelihood. Not an estimator objective: two models with drifts m1, m2
/// differ per step by (m1 - m2) dy - (m1^2 - m2^2) dt / 2, which is O(sqrt(dt))
/// against an O(1) shot-noise term, so the product over steps is dominated by
/// noise as dt -> 0. Only the ratio (the functional above) survives the limit.
double step_log_density(double dy, double m, double dt);

}  // namespace qnd
