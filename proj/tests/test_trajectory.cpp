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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "qndtomo/rng.hpp"
#include "qndtomo/spin.hpp"
#include "qndtomo/trajectory.hpp"

using namespace qnd;

namespace {

constexpr double kLarmor = 25.0 * std::numbers::pi;

TrajectoryConfig config_for(int n, double total_time, std::uint64_t seed, double dt = 1e-4) {
  TrajectoryConfig c;
  c.num_qubits = n;
  c.total_time = total_time;
  c.dt = dt;
  c.rng_seed = seed;
  return c;
}

double rms_diff(const std::vector<double>& a, const std::vector<double>& b, double scale = 1.0) {
  REQUIRE(a.size() == b.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += std::pow(a[i] / scale - b[i], 2);
  return std::sqrt(acc / static_cast<double>(a.size()));
}

MeasurementRecord white_record(std::size_t n, double dt, double kappa, int num_qubits, Rng& rng) {
  std::normal_distribution<double> g(0.0, std::sqrt(dt));
  MeasurementRecord r;
  r.dt = dt;
  r.kappa = kappa;
  r.num_qubits = num_qubits;
  for (std::size_t i = 0; i < n; ++i) r.increments.push_back(g(rng));
  return r;
}

}  // namespace

TEST_CASE("random waveform geometry") {
  Rng rng(1);
  const auto w = random_waveform(40, kLarmor, rng);
  CHECK(std::abs(w.total_time() - 0.8) < 1e-12);
  CHECK(w.segments().size() == 40);
  CHECK(w.segment_duration() * w.larmor() == doctest::Approx(std::numbers::pi / 2).epsilon(1e-14));
  double t = 0.0;
  for (const auto& s : w.segments()) {
    CHECK(std::abs(s.start - t) < 1e-12);
    CHECK(std::abs(s.axis.norm() - 1.0) < 1e-12);
    CHECK(s.duration * w.larmor() == doctest::Approx(std::numbers::pi / 2).epsilon(1e-14));
    t = s.start + s.duration;
  }
  CHECK(std::abs(t - 0.8) < 1e-12);

  const auto& s3 = w.segments()[3];
  const auto b = w.field(s3.start + 0.5 * s3.duration);
  CHECK((b - s3.axis * kLarmor).norm() < 1e-12);
  CHECK(w.field(0.9).norm() == 0.0);
  CHECK(w.field(-0.1).norm() == 0.0);
}

TEST_CASE("empty waveform") {
  Rng rng(1);
  const auto w = random_waveform(0, 3.0, rng);
  CHECK(w.empty());
  CHECK(w.total_time() == 0.0);
  CHECK(w.field(0.1).norm() == 0.0);
  CHECK_THROWS(random_waveform(-1, 3.0, rng));
  CHECK_THROWS(random_waveform(3, 0.0, rng));
  CHECK_THROWS(ControlWaveform({BlochVector{1, 1, 0}}, 1.0));
}

TEST_CASE("random axes are isotropic") {
  Rng rng(99);
  const int n = 10000;
  BlochVector sum;
  for (int i = 0; i < n; ++i) sum = sum + random_unit_vector(rng);
  const double sigma = std::sqrt(1.0 / 3.0 / n);
  CHECK(std::abs(sum.x / n) < 3 * sigma);
  CHECK(std::abs(sum.y / n) < 3 * sigma);
  CHECK(std::abs(sum.z / n) < 3 * sigma);
}

TEST_CASE("control schedule maps segments onto the grid") {
  Rng rng(2);
  const auto w = random_waveform(40, kLarmor, rng);
  const ControlSchedule sched(w, 1e-4, 8000);
  CHECK(sched.step_angle() == doctest::Approx(std::numbers::pi / 400));
  CHECK(sched.segment_at_step(0) == 0);
  CHECK(sched.segment_at_step(199) == 0);
  CHECK(sched.segment_at_step(200) == 1);
  CHECK(sched.segment_at_step(7999) == 39);
  CHECK_THROWS(ControlSchedule(w, 1e-4, 7000));
  CHECK_THROWS(ControlSchedule(w, 3e-4, 2667));
  const ControlSchedule none(ControlWaveform{}, 1e-4, 100);
  CHECK(none.segment_at_step(50) == -1);
}

TEST_CASE("config validation") {
  auto c = config_for(10, 0.8, 1);
  CHECK_NOTHROW(c.validate());
  CHECK(c.num_steps() == 8000);
  c.dt = 3e-4;
  CHECK_THROWS(c.validate());
  c = config_for(0, 0.8, 1);
  CHECK_THROWS(c.validate());
  c = config_for(10, 0.8, 1);
  c.kappa = 0.0;
  CHECK_THROWS(c.validate());
  Rng rng(1);
  const auto w = random_waveform(10, kLarmor, rng);
  CHECK_THROWS(simulate_truth({1, 0, 0}, config_for(3, 0.8, 1), w));
}

TEST_CASE("record along x has zero initial drift") {
  // Mean of dy/dt over [0, 0.01] has standard deviation 1/sqrt(0.01) = 10.
  int within = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto run = simulate_truth({1, 0, 0}, config_for(50, 0.01, seed), ControlWaveform{});
    double y = 0.0;
    for (double dy : run.record.increments) y += dy;
    if (std::abs(y / 0.01) < 30.0) ++within;
    CHECK(std::abs(run.trajectory.jz.front()) < 1e-10);
  }
  CHECK(within >= 19);
}

TEST_CASE("record mean along z grows at (N/2) sqrt(kappa)") {
  const int paths = 1000;
  const double t = 0.01;
  double sum = 0.0;
  double sum2 = 0.0;
  for (int p = 0; p < paths; ++p) {
    const auto run = simulate_truth({0, 0, 1}, config_for(50, t, 1000 + p), ControlWaveform{});
    const double y = run.record.integrated().back();
    sum += y;
    sum2 += y * y;
  }
  const double mean = sum / paths;
  const double var = sum2 / paths - mean * mean;
  CHECK(std::abs(mean - 25.0 * t) < 3.0 * std::sqrt(var / paths));
  CHECK(var == doctest::Approx(t).epsilon(0.15));
}

TEST_CASE("truth innovations are standard normal") {
  Rng wrng(5);
  const auto w = random_waveform(40, kLarmor, wrng);
  std::size_t count = 0;
  double sum = 0.0;
  double sum2 = 0.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto run = simulate_truth(random_unit_vector(wrng), config_for(25, 0.8, seed), w);
    REQUIRE(run.noise.size() == run.record.increments.size());
    const double sdt = std::sqrt(run.record.dt);
    for (std::size_t i = 0; i < run.noise.size(); ++i) {
      const double z = run.noise[i] / sdt;
      sum += z;
      sum2 += z * z;
      ++count;
      // dy = dw + sqrt(kappa) <Jz> dt, left endpoint.
      CHECK(std::abs(run.record.increments[i] - run.noise[i] - run.trajectory.jz[i] * run.record.dt) <
            1e-12);
    }
  }
  const double n = static_cast<double>(count);
  CHECK(std::abs(sum / n) < 4.0 / std::sqrt(n));
  CHECK(std::abs(sum2 / n - 1.0) < 0.05);
}

TEST_CASE("reproducibility") {
  Rng wrng(8);
  const auto w = random_waveform(40, kLarmor, wrng);
  const auto a = simulate_truth({0, 1, 0}, config_for(20, 0.8, 77), w);
  const auto b = simulate_truth({0, 1, 0}, config_for(20, 0.8, 77), w);
  const auto c = simulate_truth({0, 1, 0}, config_for(20, 0.8, 78), w);
  CHECK(a.record.increments == b.record.increments);
  CHECK(a.trajectory.jz == b.trajectory.jz);
  CHECK(a.record.increments != c.record.increments);
  CHECK(a.record.seed == 77);
  CHECK(a.record.num_qubits == 20);
}

TEST_CASE("snapshots and norm guard") {
  const double times[] = {0.0, 0.05, 0.1};
  for (int n : {1, 2, 4}) {
    const auto run = simulate_truth({1, 0, 0}, config_for(n, 0.1, 3), ControlWaveform{}, times);
    REQUIRE(run.trajectory.snapshots.size() == 3);
    CHECK(run.trajectory.snapshot_steps == std::vector<std::size_t>{0, 500, 1000});
    for (const auto& s : run.trajectory.snapshots) CHECK(std::abs(s.amplitudes().norm() - 1.0) < 1e-12);
    CHECK(run.trajectory.max_norm_drift < 10.0 * 1e-4);
    CHECK(fidelity(run.trajectory.snapshots[0], spin_coherent({1, 0, 0}, n)) ==
          doctest::Approx(1.0));
  }
  const double bad[] = {0.2};
  CHECK_THROWS(simulate_truth({1, 0, 0}, config_for(2, 0.1, 3), ControlWaveform{}, bad));

  auto coarse = config_for(100, 1.0, 3, 0.05);
  CHECK_THROWS_AS(simulate_truth({1, 0, 0}, coarse, ControlWaveform{}), StepSizeError);
}

TEST_CASE("CSE replays the truth trajectory") {
  Rng wrng(4);
  const auto w = random_waveform(40, kLarmor, wrng);
  const BlochVector n0 = random_unit_vector(wrng);
  const auto truth = simulate_truth(n0, config_for(30, 0.8, 11), w);
  const auto replay = propagate_cse(truth.record, spin_coherent(n0, 30), w);
  REQUIRE(replay.stable);
  REQUIRE(replay.jz.size() == truth.trajectory.jz.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < replay.jz.size(); ++i) {
    worst = std::max(worst, std::abs(replay.jz[i] - truth.trajectory.jz[i]));
  }
  CHECK(worst < 1e-8);
}

TEST_CASE("single qubit: spin-coherent filter equals exact filter") {
  Rng rng(21);
  for (int rep = 0; rep < 10; ++rep) {
    const bool controls = rep % 2 == 1;
    const auto w = controls ? random_waveform(40, kLarmor, rng) : ControlWaveform{};
    const BlochVector truth = random_unit_vector(rng);
    const BlochVector filter = random_unit_vector(rng);
    const auto run = simulate_truth(truth, config_for(1, 0.8, 500 + rep), w);
    const auto cse = propagate_cse(run.record, spin_coherent(filter, 1), w);
    const auto scs = propagate_scs(run.record, filter, w);
    REQUIRE(cse.stable);
    REQUIRE(scs.stable);
    CHECK(rms_diff(cse.jz, scs.z, 0.5) < 1e-6);
  }
}

TEST_CASE("filter from a wrong initial condition converges") {
  // 60 degrees away from truth; final relative Jz error averaged over 50 records.
  Rng rng(31);
  const auto w = random_waveform(40, kLarmor, rng);
  double total = 0.0;
  const int records = 50;
  for (int r = 0; r < records; ++r) {
    const BlochVector truth = random_unit_vector(rng);
    BlochVector perp = truth.cross(random_unit_vector(rng)).normalized();
    const double a = std::numbers::pi / 3;
    const BlochVector start = truth * std::cos(a) + perp * std::sin(a);
    const auto run = simulate_truth(truth, config_for(25, 0.8, 900 + r), w);
    const auto filt = propagate_cse(run.record, spin_coherent(start.normalized(), 25), w);
    REQUIRE(filt.stable);
    total += std::abs(filt.jz.back() - run.trajectory.jz.back()) / 12.5;
  }
  CHECK(total / records < 0.2);
}

TEST_CASE("CSE flags numerical blow-up instead of throwing") {
  MeasurementRecord r;
  r.dt = 1e-4;
  r.kappa = 1.0;
  r.num_qubits = 100;
  r.increments.assign(100, 0.0);
  r.increments[10] = 1e300;
  const auto run = propagate_cse(r, spin_coherent({1, 0, 0}, 100), ControlWaveform{});
  CHECK_FALSE(run.stable);
  CHECK(run.failed_step == 10);
  CHECK_FALSE(run.failure.empty());
}

TEST_CASE("rotation exactness without measurement") {
  Rng rng(41);
  const std::vector<BlochVector> axes = {random_unit_vector(rng), random_unit_vector(rng),
                                         random_unit_vector(rng)};
  const ControlWaveform w(axes, kLarmor);
  const auto record = white_record(600, 1e-4, 0.0, 12, rng);
  const BlochVector n0 = random_unit_vector(rng);
  const double times[] = {0.0, 0.013, 0.02, 0.037, 0.06};
  const auto cse = propagate_cse(record, spin_coherent(n0, 12), w, times);
  const auto scs = propagate_scs(record, n0, w, true);
  REQUIRE(cse.snapshots.size() == 5);
  for (std::size_t k = 0; k < cse.snapshots.size(); ++k) {
    const auto step = cse.snapshot_steps[k];
    const auto expected = spin_coherent(scs.bloch[step].normalized(), 12);
    CHECK(fidelity(cse.snapshots[k], expected) > 1.0 - 1e-6);
  }
}

TEST_CASE("spin-coherent filter from the maximally mixed state") {
  Rng rng(51);
  const auto run = simulate_truth({0, 0, 1}, config_for(40, 0.8, 6), ControlWaveform{});
  const auto scs = propagate_scs(run.record, {0, 0, 0}, ControlWaveform{}, true);
  REQUIRE(scs.stable);
  for (const auto& b : scs.bloch) {
    CHECK(b.x == 0.0);
    CHECK(b.y == 0.0);
    CHECK(b.norm() <= 1.0 + 1e-12);
  }
  for (double z : scs.z) CHECK(std::abs(z) <= 1.0);
  // The record is strongly polarized: the filter should learn +z.
  CHECK(scs.z.back() > 0.9);

  const auto mixed = propagate_scs(run.record, {0.2, -0.3, 0.1}, ControlWaveform{}, true);
  for (const auto& b : mixed.bloch) CHECK(b.norm() <= 1.0 + 1e-12);
}

TEST_CASE("ScsPropagator is reusable and agrees with the free function") {
  Rng rng(61);
  const auto w = random_waveform(40, kLarmor, rng);
  const auto run = simulate_truth(random_unit_vector(rng), config_for(15, 0.8, 3), w);
  const ScsPropagator prop(run.record, w);
  for (int rep = 0; rep < 3; ++rep) {
    const auto n0 = random_unit_vector(rng);
    CHECK(prop.run(n0).z == propagate_scs(run.record, n0, w).z);
  }
}

TEST_CASE("backaction-free propagation") {
  const BlochVector z{0, 0, 1};
  const auto flat = propagate_backaction_free({0.3, 0.4, std::sqrt(0.75)}, ControlWaveform{}, 1e-4, 50);
  REQUIRE(flat.size() == 51);
  for (double v : flat) CHECK(v == doctest::Approx(std::sqrt(0.75)));

  // A pi/2 turn about x takes +z to -y.
  const ControlWaveform about_x({BlochVector{1, 0, 0}}, kLarmor);
  const auto turned = propagate_backaction_free(z, about_x, 1e-4, 200);
  CHECK(std::abs(turned.back()) < 1e-12);
  Rng rng(71);
  const auto rec = white_record(200, 1e-4, 0.0, 1, rng);
  const auto full = propagate_scs(rec, z, about_x, true);
  CHECK((full.bloch.back() - BlochVector{0, -1, 0}).norm() < 1e-12);

  // Three arbitrary segments: agrees with the spin-coherent filter at kappa = 0.
  const ControlWaveform three({random_unit_vector(rng), random_unit_vector(rng), random_unit_vector(rng)},
                              kLarmor);
  const auto rec3 = white_record(600, 1e-4, 0.0, 20, rng);
  const BlochVector n0 = random_unit_vector(rng);
  const auto bf = propagate_backaction_free(n0, three, 1e-4, 600);
  const auto sc = propagate_scs(rec3, n0, three);
  REQUIRE(bf.size() == sc.z.size());
  for (std::size_t i = 0; i < bf.size(); ++i) CHECK(std::abs(bf[i] - sc.z[i]) < 1e-12);

  const auto rows = heisenberg_z_rows(three, 1e-4, 600);
  REQUIRE(rows.size() == 601);
  for (std::size_t i = 0; i < rows.size(); i += 37) CHECK(std::abs(rows[i].dot(n0) - bf[i]) < 1e-12);
  CHECK_THROWS(propagate_backaction_free({0.5, 0, 0}, three, 1e-4, 600));
}

TEST_CASE("rms z error") {
  const std::vector<std::vector<double>> jz = {{1.0, 0.5, -1.0}, {0.0, 2.0, 1.0}};
  const std::vector<std::vector<double>> z = {{0.5, 0.25, -0.5}, {0.0, 1.0, 0.5}};
  for (double e : rms_z_error(jz, z, 2.0)) CHECK(e == doctest::Approx(0.0));
  std::vector<std::vector<double>> shifted = z;
  for (auto& s : shifted)
    for (auto& v : s) v -= 0.1;
  for (double e : rms_z_error(jz, shifted, 2.0)) CHECK(e == doctest::Approx(0.1));
  const std::vector<std::vector<double>> short_z = {{0.5}, {0.0}};
  CHECK_THROWS(rms_z_error(jz, short_z, 2.0));
}

TEST_CASE("step halving changes the spin-coherent filter by little") {
  // Common Wiener path: the coarse record sums pairs of fine increments.
  Rng rng(81);
  const auto w = random_waveform(40, kLarmor, rng);
  double acc = 0.0;
  const int trials = 10;
  for (int t = 0; t < trials; ++t) {
    const BlochVector n0 = random_unit_vector(rng);
    const auto fine = simulate_truth(n0, config_for(25, 0.8, 300 + t, 5e-5), w);
    MeasurementRecord coarse = fine.record;
    coarse.dt = 1e-4;
    coarse.increments.clear();
    for (std::size_t i = 0; i + 1 < fine.record.increments.size(); i += 2) {
      coarse.increments.push_back(fine.record.increments[i] + fine.record.increments[i + 1]);
    }
    const auto zf = propagate_scs(fine.record, n0, w).z.back();
    const auto zc = propagate_scs(coarse, n0, w).z.back();
    acc += std::pow(zf - zc, 2);
  }
  CHECK(std::sqrt(acc / trials) < 1e-3);
}

TEST_CASE("record integration and validation") {
  MeasurementRecord r;
  r.dt = 0.5;
  r.increments = {1.0, -2.0, 0.5};
  const auto y = r.integrated();
  CHECK(y == std::vector<double>{0.0, 1.0, -1.0, -0.5});
  CHECK(r.total_time() == 1.5);
  CHECK_NOTHROW(r.validate());
  r.increments[1] = std::numeric_limits<double>::infinity();
  CHECK_THROWS(r.validate());
}
