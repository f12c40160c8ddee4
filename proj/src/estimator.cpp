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

#include "qndtomo/estimator.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <utility>

#include "qndtomo/likelihood.hpp"

namespace qnd {

namespace {

// Orthonormal pair completing `c` to a right-handed frame.
std::pair<BlochVector, BlochVector> frame_around(const BlochVector& c) {
  const BlochVector helper = std::abs(c.x) < 0.9 ? BlochVector{1, 0, 0} : BlochVector{0, 1, 0};
  const BlochVector e1 = helper.cross(c).normalized();
  const BlochVector e2 = c.cross(e1);
  return {e1, e2};
}

std::vector<CandidateScore> score_scs(const ScsPropagator& prop, const MeasurementRecord& record,
                                      std::span<const BlochVector> candidates, double reference_s) {
  std::vector<CandidateScore> out;
  out.reserve(candidates.size());
  for (const auto& c : candidates) {
    const ScsRun run = prop.run(c);
    CandidateScore s{c, 0.0, run.stable};
    if (run.stable) {
      s.llr = log_likelihood_functional(record, spin_mean_signal(run.z, record)) - reference_s;
      s.valid = std::isfinite(s.llr);
    }
    out.push_back(s);
  }
  return out;
}

std::size_t count_invalid(std::span<const CandidateScore> scores) {
  return static_cast<std::size_t>(
      std::count_if(scores.begin(), scores.end(), [](const auto& s) { return !s.valid; }));
}

}  // namespace

void EstimatorConfig::validate() const {
  if (m1_count < 1 || m2_count < 1 || baseline_count < 1) {
    throw std::invalid_argument("EstimatorConfig: candidate counts must be >= 1");
  }
  if (!(shell_radius > 0.0 && shell_radius < 1.0)) {
    throw std::invalid_argument("EstimatorConfig: shell_radius must lie in (0, 1)");
  }
  if (!(cap_half_angle > 0.0 && cap_half_angle <= std::numbers::pi)) {
    throw std::invalid_argument("EstimatorConfig: cap_half_angle must lie in (0, pi]");
  }
}

std::string to_string(EstimatorKind kind) {
  return kind == EstimatorKind::kScsMle ? "scs_mle" : "backaction_free";
}

EstimatorKind estimator_kind_from_string(const std::string& name) {
  if (name == "scs_mle") return EstimatorKind::kScsMle;
  if (name == "backaction_free") return EstimatorKind::kBackactionFree;
  throw std::invalid_argument("unknown estimator kind: " + name);
}

std::vector<BlochVector> sample_sphere(int count, Rng& rng) {
  if (count < 0) throw std::invalid_argument("sample_sphere: negative count");
  std::vector<BlochVector> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) out.push_back(random_unit_vector(rng));
  return out;
}

std::vector<BlochVector> sample_shell(int count, double radius, Rng& rng) {
  if (!(radius > 0.0 && radius < 1.0)) {
    throw std::invalid_argument("sample_shell: radius must lie in (0, 1)");
  }
  auto pts = sample_sphere(count, rng);
  for (auto& p : pts) p = p.normalized() * radius;
  return pts;
}

std::vector<BlochVector> sample_cap(int count, const BlochVector& center, double half_angle,
                                    Rng& rng) {
  if (std::abs(center.norm() - 1.0) > 1e-9) {
    throw std::invalid_argument("sample_cap: center must be a unit vector");
  }
  if (!(half_angle > 0.0 && half_angle <= std::numbers::pi)) {
    throw std::invalid_argument("sample_cap: half_angle must lie in (0, pi]");
  }
  const BlochVector c = center.normalized();
  const auto [e1, e2] = frame_around(c);
  const double one_minus_cos = 1.0 - std::cos(half_angle);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<BlochVector> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    const double cos_t = 1.0 - u(rng) * one_minus_cos;
    const double sin_t = std::sqrt(std::max(0.0, 1.0 - cos_t * cos_t));
    const double phi = 2.0 * std::numbers::pi * u(rng);
    const BlochVector v =
        e1 * (sin_t * std::cos(phi)) + e2 * (sin_t * std::sin(phi)) + c * cos_t;
    out.push_back(v.normalized());
  }
  return out;
}

std::size_t argmax_valid(std::span<const CandidateScore> scores) {
  std::size_t best = scores.size();
  double best_value = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!scores[i].valid) continue;
    if (best == scores.size() || scores[i].llr > best_value) {
      best = i;
      best_value = scores[i].llr;
    }
  }
  return best;
}

EstimateReport estimate_mle(const MeasurementRecord& record, const ControlWaveform& waveform,
                            const EstimatorConfig& config) {
  config.validate();
  const ScsPropagator prop(record, waveform);
  Rng rng(config.rng_seed);

  EstimateReport report;
  report.kind = EstimatorKind::kScsMle;
  report.reference_stage1 = {0.0, 0.0, 0.0};

  const ScsRun ref1 = prop.run(report.reference_stage1);
  if (!ref1.stable) throw EstimationError("estimate_mle: stage-1 reference is unstable");
  const double s_ref1 = log_likelihood_functional(record, spin_mean_signal(ref1.z, record));
  const auto shell = sample_shell(config.m1_count, config.shell_radius, rng);
  report.stage1 = score_scs(prop, record, shell, s_ref1);
  const std::size_t best1 = argmax_valid(report.stage1);
  if (best1 == report.stage1.size()) {
    throw EstimationError("estimate_mle: every stage-1 candidate is invalid");
  }
  report.winner_stage1 = report.stage1[best1].candidate;
  report.reference_stage2 = report.winner_stage1.normalized();

  const ScsRun ref2 = prop.run(report.reference_stage2);
  if (!ref2.stable) throw EstimationError("estimate_mle: stage-2 reference is unstable");
  const double s_ref2 = log_likelihood_functional(record, spin_mean_signal(ref2.z, record));
  const auto cap = sample_cap(config.m2_count, report.reference_stage2, config.cap_half_angle, rng);
  report.stage2 = score_scs(prop, record, cap, s_ref2);
  const std::size_t best2 = argmax_valid(report.stage2);
  if (best2 == report.stage2.size()) {
    throw EstimationError("estimate_mle: every stage-2 candidate is invalid");
  }
  report.estimate = report.stage2[best2].candidate;
  report.n_invalid_stage2 = count_invalid(report.stage2);
  report.n_invalid = count_invalid(report.stage1) + report.n_invalid_stage2;
  return report;
}

// The backaction-free signal is linear in n(0): z_k = r_k . n. The Ito sums
// therefore collapse onto g = sum r_k dy_k and Q = sum r_k r_k^T dt, and each
// candidate costs O(1) after one pass over the record.
EstimateReport estimate_backaction_free(const MeasurementRecord& record,
                                        const ControlWaveform& waveform,
                                        const EstimatorConfig& config) {
  config.validate();
  record.validate();
  Rng rng(config.rng_seed);
  const std::size_t n = record.num_steps();
  const auto rows = heisenberg_z_rows(waveform, record.dt, n);

  std::array<double, 3> g{};
  std::array<double, 9> q{};
  for (std::size_t i = 0; i < n; ++i) {
    const std::array<double, 3> r = {rows[i].x, rows[i].y, rows[i].z};
    for (int a = 0; a < 3; ++a) {
      g[a] += r[a] * record.increments[i];
      for (int b = 0; b < 3; ++b) q[3 * a + b] += r[a] * r[b];
    }
  }
  for (double& v : q) v *= record.dt;
  const double scale = std::sqrt(record.kappa) * 0.5 * record.num_qubits;
  auto functional = [&](const BlochVector& v) {
    const std::array<double, 3> x = {v.x, v.y, v.z};
    double lin = 0.0;
    double quad = 0.0;
    for (int a = 0; a < 3; ++a) {
      lin += g[a] * x[a];
      for (int b = 0; b < 3; ++b) quad += x[a] * q[3 * a + b] * x[b];
    }
    return scale * lin - 0.5 * scale * scale * quad;
  };

  EstimateReport report;
  report.kind = EstimatorKind::kBackactionFree;
  const auto pts = sample_sphere(config.baseline_count, rng);
  report.reference_stage2 = pts.front();
  const double s_ref = functional(pts.front());
  report.stage2.reserve(pts.size());
  for (const auto& p : pts) report.stage2.push_back({p, functional(p) - s_ref, true});
  const std::size_t best = argmax_valid(report.stage2);
  report.estimate = report.stage2[best].candidate;
  report.winner_stage1 = report.estimate;
  return report;
}

EstimateReport estimate(EstimatorKind kind, const MeasurementRecord& record,
                        const ControlWaveform& waveform, const EstimatorConfig& config) {
  return kind == EstimatorKind::kScsMle ? estimate_mle(record, waveform, config)
                                        : estimate_backaction_free(record, waveform, config);
}

double nearest_neighbor_infidelity(std::span<const BlochVector> points) {
  if (points.size() < 2) throw std::invalid_argument("need at least two points");
  double total = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < points.size(); ++j) {
      if (i == j) continue;
      best = std::min(best, 1.0 - qubit_fidelity(points[i], points[j]));
    }
    total += best;
  }
  return total / static_cast<double>(points.size());
}

double sample_density_check(int count, DensityMode mode, Rng& rng, double cap_half_angle) {
  const auto pts = mode == DensityMode::kSphere
                       ? sample_sphere(count, rng)
                       : sample_cap(count, BlochVector{0, 0, 1}, cap_half_angle, rng);
  return nearest_neighbor_infidelity(pts);
}

}  // namespace qnd
