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

#include "qndtomo/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <map>
#include <mutex>
#include <thread>

namespace qnd {

namespace {

void check_timing(int num_rotations, double larmor, double total_time, double dt) {
  if (num_rotations < 0) throw ConfigError("num_rotations must be >= 0");
  if (!(dt > 0.0)) throw ConfigError("dt must be positive");
  if (!(total_time > 0.0)) throw ConfigError("total_time must be positive");
  const double steps = total_time / dt;
  if (std::abs(steps - std::round(steps)) > 1e-6) {
    throw ConfigError("total_time must be a whole number of dt steps");
  }
  if (num_rotations > 0) {
    if (!(larmor > 0.0)) throw ConfigError("larmor must be positive");
    const double expected = num_rotations * std::numbers::pi / (2.0 * larmor);
    if (std::abs(expected - total_time) > 1e-9 * std::max(1.0, total_time)) {
      throw ConfigError("total_time must equal num_rotations * pi / (2 larmor)");
    }
  }
}

void check_counts(const std::vector<int>& counts) {
  if (counts.empty()) throw ConfigError("qubit_counts must not be empty");
  for (int n : counts)
    if (n < 1) throw ConfigError("qubit counts must be >= 1");
}

ControlWaveform waveform_for(int num_rotations, double larmor, std::uint64_t seed) {
  if (num_rotations == 0) return {};
  Rng rng(seed);
  return random_waveform(num_rotations, larmor, rng);
}

}  // namespace

void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers =
      std::min<std::size_t>(count, static_cast<std::size_t>(std::max(1, threads)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

void CampaignConfig::validate() const {
  check_counts(qubit_counts);
  if (trials_per_n < 1) throw ConfigError("trials_per_n must be >= 1");
  check_timing(num_rotations, larmor, total_time, dt);
  if (!(kappa > 0.0)) throw ConfigError("kappa must be positive");
  try {
    estimator.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

std::size_t CampaignResult::failed_trials() const {
  return static_cast<std::size_t>(
      std::count_if(rows.begin(), rows.end(), [](const TrialRow& r) { return r.failed; }));
}

double CampaignResult::failed_fraction() const {
  return rows.empty() ? 0.0 : static_cast<double>(failed_trials()) / rows.size();
}

PowerLawFit fit_power_law(std::span<const double> ns, std::span<const double> values) {
  if (ns.size() != values.size()) throw std::invalid_argument("fit_power_law: size mismatch");
  if (ns.size() < 3) throw std::invalid_argument("fit_power_law: need at least 3 points");
  const std::size_t n = ns.size();
  std::vector<double> x(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(ns[i] > 0.0) || !(values[i] > 0.0)) {
      throw std::invalid_argument("fit_power_law: all points must be positive");
    }
    x[i] = std::log(ns[i]);
    y[i] = std::log(values[i]);
  }
  double xm = 0.0, ym = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    xm += x[i];
    ym += y[i];
  }
  xm /= n;
  ym /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - xm) * (x[i] - xm);
    sxy += (x[i] - xm) * (y[i] - ym);
  }
  if (!(sxx > 0.0)) throw std::invalid_argument("fit_power_law: need distinct N values");
  PowerLawFit fit;
  fit.b = sxy / sxx;
  const double ln_a = ym - fit.b * xm;
  fit.a = std::exp(ln_a);
  double rss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - ln_a - fit.b * x[i];
    rss += r * r;
  }
  const double s2 = rss / static_cast<double>(n - 2);
  fit.b_err = std::sqrt(s2 / sxx);
  // delta method: se(a) = a * se(ln a)
  fit.a_err = fit.a * std::sqrt(s2 * (1.0 / n + xm * xm / sxx));
  return fit;
}

std::vector<AggregateRow> aggregate_rows(std::span<const TrialRow> rows) {
  std::map<int, std::vector<const TrialRow*>> by_n;
  for (const auto& r : rows) by_n[r.num_qubits].push_back(&r);
  std::vector<AggregateRow> out;
  for (const auto& [n, group] : by_n) {
    AggregateRow agg;
    agg.num_qubits = n;
    agg.optimal_bound = 1.0 / (n + 2.0);
    double sum = 0.0;
    int ok = 0;
    for (const TrialRow* r : group) {
      if (r->failed) {
        ++agg.failed;
        continue;
      }
      sum += r->infidelity;
      ++ok;
    }
    agg.trials = ok;
    if (ok == 0) {
      agg.mean_infidelity = std::numeric_limits<double>::quiet_NaN();
      agg.std_error = std::numeric_limits<double>::quiet_NaN();
    } else {
      agg.mean_infidelity = sum / ok;
      double ss = 0.0;
      for (const TrialRow* r : group) {
        if (r->failed) continue;
        const double d = r->infidelity - agg.mean_infidelity;
        ss += d * d;
      }
      const double var = ok > 1 ? ss / (ok - 1) : 0.0;
      agg.std_error = std::sqrt(var / ok);
    }
    out.push_back(agg);
  }
  return out;
}

CampaignResult run_campaign(const CampaignConfig& config, EstimatorKind kind, int threads) {
  config.validate();
  const std::uint64_t master = config.master_seed;
  const ControlWaveform shared =
      waveform_for(config.num_rotations, config.larmor, derive_seed(master, {kTagWaveform}));

  struct Job {
    int n;
    int trial;
  };
  std::vector<Job> jobs;
  for (int n : config.qubit_counts)
    for (int t = 0; t < config.trials_per_n; ++t) jobs.push_back({n, t});

  CampaignResult result;
  result.kind = kind;
  result.rows.resize(jobs.size());
  parallel_for(jobs.size(), threads, [&](std::size_t idx) {
    const auto [n, trial] = jobs[idx];
    const auto un = static_cast<std::uint64_t>(n);
    const auto ut = static_cast<std::uint64_t>(trial);
    const auto start = std::chrono::steady_clock::now();
    TrialRow row;
    row.num_qubits = n;
    row.trial = trial;
    row.kind = kind;
    Rng state_rng(derive_seed(master, {kTagTruthState, un, ut}));
    row.truth = random_unit_vector(state_rng);
    try {
      const ControlWaveform fresh =
          config.shared_waveform
              ? ControlWaveform{}
              : waveform_for(config.num_rotations, config.larmor,
                             derive_seed(master, {kTagWaveform, un, ut}));
      const ControlWaveform& wf = config.shared_waveform ? shared : fresh;
      TrajectoryConfig tc;
      tc.num_qubits = n;
      tc.kappa = config.kappa;
      tc.total_time = config.total_time;
      tc.dt = config.dt;
      tc.max_norm_drift = config.max_norm_drift;
      tc.rng_seed = derive_seed(master, {kTagTruthNoise, un, ut});
      const TruthRun truth = simulate_truth(row.truth, tc, wf);
      EstimatorConfig ec = config.estimator;
      ec.rng_seed = derive_seed(master, {kTagEstimator, un, ut});
      const EstimateReport rep = estimate(kind, truth.record, wf, ec);
      row.estimate = rep.estimate;
      row.infidelity = 1.0 - qubit_fidelity(row.truth, rep.estimate);
      row.n_invalid = rep.n_invalid;
      row.n_invalid_stage2 = rep.n_invalid_stage2;
      row.stage2_count = rep.stage2.size();
    } catch (const std::exception& e) {
      row.failed = true;
      row.error = e.what();
    }
    row.wall_time =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.rows[idx] = std::move(row);
  });

  std::stable_sort(result.rows.begin(), result.rows.end(), [](const TrialRow& a, const TrialRow& b) {
    return a.num_qubits != b.num_qubits ? a.num_qubits < b.num_qubits : a.trial < b.trial;
  });
  result.aggregates = aggregate_rows(result.rows);
  std::vector<double> ns, ys;
  for (const auto& agg : result.aggregates) {
    if (agg.trials > 0 && agg.mean_infidelity > 0.0) {
      ns.push_back(agg.num_qubits);
      ys.push_back(agg.mean_infidelity);
    }
  }
  if (ns.size() >= 3) result.fit = fit_power_law(ns, ys);
  return result;
}

void ApproxStudyConfig::validate() const {
  check_counts(qubit_counts);
  if (trials < 1) throw ConfigError("trials must be >= 1");
  check_timing(num_rotations, larmor, total_time, dt);
  if (sample_every < 1) throw ConfigError("sample_every must be >= 1");
  if (control_modes.empty()) throw ConfigError("control_modes must not be empty");
}

std::vector<ApproxSeries> run_approximation_study(const ApproxStudyConfig& config, int threads) {
  config.validate();
  const std::uint64_t master = config.master_seed;
  const auto n_steps = static_cast<std::size_t>(std::llround(config.total_time / config.dt));
  std::vector<std::size_t> sample_steps;
  for (std::size_t k = 0; k <= n_steps; k += static_cast<std::size_t>(config.sample_every)) {
    sample_steps.push_back(k);
  }
  if (sample_steps.back() != n_steps) sample_steps.push_back(n_steps);
  std::vector<double> sample_times;
  for (std::size_t k : sample_steps) sample_times.push_back(k * config.dt);

  struct Cell {
    int n;
    bool controls;
  };
  std::vector<Cell> cells;
  for (int n : config.qubit_counts)
    for (bool c : config.control_modes) cells.push_back({n, c});

  std::vector<ApproxSeries> out;
  for (const auto& cell : cells) {
    const int n = cell.n;
    const auto un = static_cast<std::uint64_t>(n);
    const ControlWaveform shared =
        cell.controls ? waveform_for(config.num_rotations, config.larmor,
                                     derive_seed(master, {kTagWaveform}))
                      : ControlWaveform{};
    const auto trials = static_cast<std::size_t>(config.trials);
    std::vector<std::vector<double>> exact(trials), approx(trials), fid(trials);
    parallel_for(trials, threads, [&](std::size_t t) {
      const auto ut = static_cast<std::uint64_t>(t);
      const ControlWaveform wf =
          (cell.controls && !config.shared_waveform)
              ? waveform_for(config.num_rotations, config.larmor,
                             derive_seed(master, {kTagWaveform, un, ut}))
              : shared;
      Rng state_rng(derive_seed(master, {kTagTruthState, un, ut}));
      const BlochVector n0 = random_unit_vector(state_rng);
      TrajectoryConfig tc;
      tc.num_qubits = n;
      tc.kappa = config.kappa;
      tc.total_time = config.total_time;
      tc.dt = config.dt;
      tc.max_norm_drift = config.max_norm_drift;
      tc.rng_seed = derive_seed(master, {kTagTruthNoise, un, ut});
      const TruthRun truth = simulate_truth(n0, tc, wf, sample_times);
      const ScsRun scs = propagate_scs(truth.record, n0, wf, true);
      if (!scs.stable) throw std::runtime_error("approximation study: SCS filter unstable");
      exact[t] = truth.trajectory.jz;
      approx[t] = scs.z;
      fid[t].resize(sample_steps.size());
      for (std::size_t s = 0; s < sample_steps.size(); ++s) {
        const BlochVector nt = scs.bloch[sample_steps[s]].normalized();
        fid[t][s] = fidelity(truth.trajectory.snapshots[s], spin_coherent(nt, n));
      }
    });

    ApproxSeries series;
    series.num_qubits = n;
    series.with_controls = cell.controls;
    series.times = sample_times;
    const auto rms = rms_z_error(exact, approx, 0.5 * n);
    series.max_rms_z_err = *std::max_element(rms.begin(), rms.end());
    series.mean_fidelity.assign(sample_steps.size(), 0.0);
    for (std::size_t s = 0; s < sample_steps.size(); ++s) {
      for (std::size_t t = 0; t < trials; ++t) series.mean_fidelity[s] += fid[t][s];
      series.mean_fidelity[s] /= static_cast<double>(trials);
      series.rms_z_err.push_back(rms[sample_steps[s]]);
    }
    series.min_mean_fidelity =
        *std::min_element(series.mean_fidelity.begin(), series.mean_fidelity.end());
    series.final_mean_fidelity = series.mean_fidelity.back();
    out.push_back(std::move(series));
  }
  return out;
}

void SqueezeConfig::validate() const {
  if (num_qubits < 1) throw ConfigError("num_qubits must be >= 1");
  if (with_controls) check_timing(num_rotations, larmor, total_time, dt);
  else check_timing(0, larmor, total_time, dt);
  if (sample_every < 1) throw ConfigError("sample_every must be >= 1");
  if (q_polar_points < 2 || q_azimuth_points < 2) throw ConfigError("Q grid too small");
  for (double t : q_times)
    if (t < 0.0 || t > total_time + 1e-12) throw ConfigError("q_times must lie in [0, T]");
}

SqueezeDemoResult run_squeezing_demo(const SqueezeConfig& config) {
  config.validate();
  SqueezeDemoResult out;
  out.waveform = config.with_controls
                     ? waveform_for(config.num_rotations, config.larmor,
                                    derive_seed(config.seed, {kTagWaveform}))
                     : ControlWaveform{};
  const auto n_steps = static_cast<std::size_t>(std::llround(config.total_time / config.dt));
  std::vector<double> times;
  for (std::size_t k = 0; k <= n_steps; k += static_cast<std::size_t>(config.sample_every)) {
    times.push_back(k * config.dt);
  }
  if (std::llround(times.back() / config.dt) != static_cast<long long>(n_steps)) {
    times.push_back(config.total_time);
  }
  std::vector<double> all_times = times;
  all_times.insert(all_times.end(), config.q_times.begin(), config.q_times.end());

  TrajectoryConfig tc;
  tc.num_qubits = config.num_qubits;
  tc.kappa = config.kappa;
  tc.total_time = config.total_time;
  tc.dt = config.dt;
  tc.max_norm_drift = config.max_norm_drift;
  tc.rng_seed = derive_seed(config.seed, {kTagTruthNoise});
  const TruthRun truth = simulate_truth({1.0, 0.0, 0.0}, tc, out.waveform, all_times);
  const CollectiveOps ops = build_ops(config.num_qubits);
  const auto y = truth.record.integrated();

  std::map<std::size_t, const SymmetricState*> by_step;
  for (std::size_t i = 0; i < truth.trajectory.snapshots.size(); ++i) {
    by_step.emplace(truth.trajectory.snapshot_steps[i], &truth.trajectory.snapshots[i]);
  }
  auto state_at = [&](double t) -> const SymmetricState& {
    return *by_step.at(static_cast<std::size_t>(std::llround(t / config.dt)));
  };

  for (double t : times) {
    const SymmetricState& s = state_at(t);
    const double xi = squeezing_parameter(s, ops);
    out.times.push_back(t);
    out.xi_squared.push_back(xi);
    out.xi_squared_db.push_back(to_decibels(xi));
    out.record.push_back(y[static_cast<std::size_t>(std::llround(t / config.dt))]);
    out.mean_spin.push_back(mean_spin(s, ops));
  }
  const auto grid = sphere_grid(config.q_polar_points, config.q_azimuth_points);
  for (double t : config.q_times) {
    QSnapshot snap;
    snap.time = t;
    snap.grid = grid;
    snap.values = q_function(state_at(t), grid);
    out.q_snapshots.push_back(std::move(snap));
  }
  return out;
}

GaussLegendre gauss_legendre(int order) {
  if (order < 1) throw std::invalid_argument("gauss_legendre: order must be >= 1");
  GaussLegendre gl;
  gl.nodes.resize(order);
  gl.weights.resize(order);
  const int half = (order + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (order + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = x;
      for (int k = 2; k <= order; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (order == 1) p0 = 1.0;
      dp = order * (x * p1 - p0) / (x * x - 1.0);
      const double step = p1 / dp;
      x -= step;
      if (std::abs(step) < 1e-15) break;
    }
    // Descending x = cos(theta) gives ascending theta.
    gl.nodes[i] = x;
    gl.nodes[order - 1 - i] = -x;
    gl.weights[i] = gl.weights[order - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  return gl;
}

std::vector<SpherePoint> sphere_grid(int polar_points, int azimuth_points) {
  const auto gl = gauss_legendre(polar_points);
  std::vector<SpherePoint> grid;
  grid.reserve(static_cast<std::size_t>(polar_points) * azimuth_points);
  const double dph = 2.0 * std::numbers::pi / azimuth_points;
  for (int i = 0; i < polar_points; ++i)
    for (int j = 0; j < azimuth_points; ++j) grid.push_back({std::acos(gl.nodes[i]), j * dph});
  return grid;
}

double sphere_quadrature(std::span<const double> values, int polar_points, int azimuth_points) {
  if (values.size() != static_cast<std::size_t>(polar_points) * azimuth_points) {
    throw std::invalid_argument("sphere_quadrature: value count does not match the grid");
  }
  const auto gl = gauss_legendre(polar_points);
  const double dph = 2.0 * std::numbers::pi / azimuth_points;
  double acc = 0.0;
  for (int i = 0; i < polar_points; ++i) {
    double row = 0.0;
    for (int j = 0; j < azimuth_points; ++j) row += values[i * azimuth_points + j];
    acc += gl.weights[i] * dph * row;
  }
  return acc;
}

}  // namespace qnd
