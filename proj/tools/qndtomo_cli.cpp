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

// qndtomo: command-line driver for simulation, estimation and campaigns.

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qndtomo/estimator.hpp"
#include "qndtomo/harness.hpp"
#include "qndtomo/io.hpp"
#include "qndtomo/trajectory.hpp"

namespace fs = std::filesystem;
using qnd::io::Json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitConfig = 2;
constexpr int kExitFailures = 3;
constexpr double kFailureBudget = 0.05;

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  int threads = 1;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config, "JSON config file")->check(CLI::ExistingFile);
  app->add_option("--seed", c.seed, "master seed");
  app->add_option("--out", c.out, "output directory");
  app->add_option("--threads", c.threads, "worker threads")->check(CLI::PositiveNumber);
}

Json load_config(const Common& c) {
  return c.config.empty() ? Json::object() : qnd::io::read_json_file(c.config);
}

template <typename T>
void apply(const std::optional<T>& v, T& target) {
  if (v) target = *v;
}

fs::path prepare_out(const std::string& dir) {
  fs::create_directories(dir);
  return dir;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

std::string iso_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Timestamps and timings live here only, so result files stay byte-stable.
void write_meta(const fs::path& dir, const std::string& command, const std::string& started,
                double wall, int threads, Json extra = Json::object()) {
  extra["command"] = command;
  extra["started_at"] = started;
  extra["wall_time_s"] = wall;
  extra["threads"] = threads;
  qnd::io::write_json_file(dir / "meta.json", extra);
}

std::string time_label(double t) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", t);
  return buf;
}

qnd::MeasurementRecord read_record(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw qnd::ConfigError("cannot open record " + path.string());
  return path.extension() == ".bin" ? qnd::io::read_record_binary(in) : qnd::io::read_record_csv(in);
}

// ---- simulate ------------------------------------------------------------

struct SimulateArgs {
  std::optional<int> num_qubits;
  std::optional<int> trials;
  std::optional<int> rotations;
  std::optional<double> total_time;
  std::optional<double> dt;
  std::optional<std::vector<double>> initial;
  bool binary = false;
};

int run_simulate(const Common& common, const SimulateArgs& args) {
  const Json j = load_config(common);
  int num_qubits = 50;
  int trials = 1;
  int rotations = 40;
  double larmor = 25.0 * std::numbers::pi;
  double total_time = 0.8;
  double dt = 1e-4;
  double kappa = 1.0;
  double max_drift = 0.05;
  std::uint64_t seed = 1;
  std::optional<std::vector<double>> initial;
  std::string out_dir = "out";
  for (const auto& [key, value] : j.items()) {
    if (key == "num_qubits") num_qubits = value.get<int>();
    else if (key == "trials") trials = value.get<int>();
    else if (key == "num_rotations") rotations = value.get<int>();
    else if (key == "larmor") larmor = value.get<double>();
    else if (key == "total_time") total_time = value.get<double>();
    else if (key == "dt") dt = value.get<double>();
    else if (key == "kappa") kappa = value.get<double>();
    else if (key == "max_norm_drift") max_drift = value.get<double>();
    else if (key == "seed") seed = value.get<std::uint64_t>();
    else if (key == "initial") initial = value.get<std::vector<double>>();
    else if (key == "output_dir") out_dir = value.get<std::string>();
    else if (key != "version") throw qnd::ConfigError("simulate: unknown key '" + key + "'");
  }
  apply(args.num_qubits, num_qubits);
  apply(args.trials, trials);
  apply(args.rotations, rotations);
  apply(args.total_time, total_time);
  apply(args.dt, dt);
  apply(common.seed, seed);
  apply(common.out, out_dir);
  if (args.initial) initial = args.initial;
  if (trials < 1) throw qnd::ConfigError("trials must be >= 1");
  if (initial && initial->size() != 3) throw qnd::ConfigError("initial must have 3 components");
  if (rotations > 0 && std::abs(rotations * std::numbers::pi / (2 * larmor) - total_time) > 1e-9) {
    throw qnd::ConfigError("total_time must equal num_rotations * pi / (2 larmor)");
  }

  qnd::Rng wrng(qnd::derive_seed(seed, {qnd::kTagWaveform}));
  const auto waveform =
      rotations > 0 ? qnd::random_waveform(rotations, larmor, wrng) : qnd::ControlWaveform{};
  qnd::TrajectoryConfig tc;
  tc.num_qubits = num_qubits;
  tc.kappa = kappa;
  tc.total_time = total_time;
  tc.dt = dt;
  tc.max_norm_drift = max_drift;
  try {
    tc.validate();
  } catch (const std::invalid_argument& e) {
    throw qnd::ConfigError(e.what());
  }

  const fs::path dir = prepare_out(out_dir);
  qnd::io::write_json_file(dir / "waveform.json", qnd::io::waveform_to_json(waveform));
  Json truths = Json::array();
  std::vector<qnd::TruthRun> runs(static_cast<std::size_t>(trials));
  std::vector<qnd::BlochVector> starts(runs.size());
  for (std::size_t t = 0; t < runs.size(); ++t) {
    qnd::Rng srng(qnd::derive_seed(seed, {qnd::kTagTruthState, static_cast<std::uint64_t>(t)}));
    starts[t] = initial ? qnd::BlochVector{(*initial)[0], (*initial)[1], (*initial)[2]}
                        : qnd::random_unit_vector(srng);
  }
  qnd::parallel_for(runs.size(), common.threads, [&](std::size_t t) {
    auto cfg = tc;
    cfg.rng_seed = qnd::derive_seed(seed, {qnd::kTagTruthNoise, static_cast<std::uint64_t>(t)});
    runs[t] = qnd::simulate_truth(starts[t], cfg, waveform);
  });
  for (std::size_t t = 0; t < runs.size(); ++t) {
    const std::string stem = "record_" + std::to_string(t);
    std::ofstream csv(dir / (stem + ".csv"), std::ios::binary);
    qnd::io::write_record_csv(csv, runs[t].record);
    if (args.binary) {
      std::ofstream bin(dir / (stem + ".bin"), std::ios::binary);
      qnd::io::write_record_binary(bin, runs[t].record);
    }
    std::ostringstream jz;
    jz << "step,t,jz\n";
    const auto& series = runs[t].trajectory.jz;
    for (std::size_t k = 0; k < series.size(); ++k) {
      jz << k << ',' << qnd::io::format_double(k * dt) << ',' << qnd::io::format_double(series[k])
         << '\n';
    }
    write_text(dir / ("jz_" + std::to_string(t) + ".csv"), jz.str());
    truths.push_back({{"trial", t},
                      {"initial", qnd::io::bloch_to_json(starts[t])},
                      {"seed", runs[t].record.seed}});
  }
  qnd::io::write_json_file(dir / "truth.json",
                           {{"num_qubits", num_qubits}, {"kappa", kappa}, {"trials", truths}});
  return kExitOk;
}

// ---- estimate ------------------------------------------------------------

struct EstimateArgs {
  std::string record;
  std::string waveform;
  std::string kind = "scs_mle";
  std::optional<std::vector<double>> truth;
};

int run_estimate(const Common& common, const EstimateArgs& args) {
  Json j = load_config(common);
  auto cfg = qnd::io::estimator_config_from_json(j);
  apply(common.seed, cfg.rng_seed);
  const auto kind = [&] {
    try {
      return qnd::estimator_kind_from_string(args.kind);
    } catch (const std::invalid_argument& e) {
      throw qnd::ConfigError(e.what());
    }
  }();
  const auto record = read_record(args.record);
  const auto waveform = args.waveform.empty()
                            ? qnd::ControlWaveform{}
                            : qnd::io::waveform_from_json(qnd::io::read_json_file(args.waveform));
  const auto report = qnd::estimate(kind, record, waveform, cfg);

  const fs::path dir = prepare_out(common.out.value_or("out"));
  Json out = qnd::io::report_to_json(report);
  if (args.truth) {
    if (args.truth->size() != 3) throw qnd::ConfigError("--truth needs 3 components");
    const qnd::BlochVector t{(*args.truth)[0], (*args.truth)[1], (*args.truth)[2]};
    out["truth"] = qnd::io::bloch_to_json(t);
    out["infidelity"] = 1.0 - qnd::qubit_fidelity(t.normalized(), report.estimate);
  }
  qnd::io::write_json_file(dir / "estimate.json", out);
  for (const auto& [name, scores] : {std::pair{"llr_stage1.csv", &report.stage1},
                                     std::pair{"llr_stage2.csv", &report.stage2}}) {
    std::ofstream csv(dir / name, std::ios::binary);
    qnd::io::write_llr_table_csv(csv, *scores);
  }
  std::printf("estimate %s %s %s\n", qnd::io::format_double(report.estimate.x).c_str(),
              qnd::io::format_double(report.estimate.y).c_str(),
              qnd::io::format_double(report.estimate.z).c_str());
  return kExitOk;
}

// ---- campaign ------------------------------------------------------------

struct CampaignArgs {
  std::string kind = "scs_mle";
  std::optional<std::vector<int>> qubit_counts;
  std::optional<int> trials;
  bool fresh_waveforms = false;
};

int run_campaign_cmd(const Common& common, const CampaignArgs& args) {
  auto cfg = qnd::io::campaign_config_from_json(load_config(common));
  apply(args.qubit_counts, cfg.qubit_counts);
  apply(args.trials, cfg.trials_per_n);
  apply(common.seed, cfg.master_seed);
  apply(common.out, cfg.output_dir);
  if (args.fresh_waveforms) cfg.shared_waveform = false;
  cfg.validate();

  std::vector<qnd::EstimatorKind> kinds;
  if (args.kind == "both") {
    kinds = {qnd::EstimatorKind::kScsMle, qnd::EstimatorKind::kBackactionFree};
  } else {
    try {
      kinds = {qnd::estimator_kind_from_string(args.kind)};
    } catch (const std::invalid_argument& e) {
      throw qnd::ConfigError(e.what());
    }
  }

  const fs::path dir = prepare_out(cfg.output_dir);
  qnd::io::write_json_file(dir / "config.json", qnd::io::campaign_config_to_json(cfg));
  std::vector<qnd::TrialRow> all_rows;
  Json aggregates = Json::array();
  Json fits = Json::array();
  std::size_t failed = 0;
  for (auto kind : kinds) {
    const auto result = qnd::run_campaign(cfg, kind, common.threads);
    all_rows.insert(all_rows.end(), result.rows.begin(), result.rows.end());
    aggregates.push_back(qnd::io::aggregates_to_json(result));
    fits.push_back(qnd::io::fit_to_json(result));
    failed += result.failed_trials();
    for (const auto& a : result.aggregates) {
      std::printf("%s N=%d mean_infidelity=%.6g std_error=%.3g failed=%d\n",
                  qnd::to_string(kind).c_str(), a.num_qubits, a.mean_infidelity, a.std_error,
                  a.failed);
    }
    if (result.fit) {
      std::printf("%s fit a=%.4g +- %.2g b=%.4g +- %.2g\n", qnd::to_string(kind).c_str(),
                  result.fit->a, result.fit->a_err, result.fit->b, result.fit->b_err);
    }
  }
  std::ofstream rows(dir / "rows.csv", std::ios::binary);
  qnd::io::write_rows_csv(rows, all_rows);
  qnd::io::write_json_file(dir / "aggregate.json", {{"results", aggregates}});
  qnd::io::write_json_file(dir / "fit.json", {{"results", fits}});

  const double fraction = all_rows.empty() ? 0.0 : static_cast<double>(failed) / all_rows.size();
  if (fraction > kFailureBudget) {
    std::fprintf(stderr, "campaign: %zu of %zu trials failed (budget %.0f%%)\n", failed,
                 all_rows.size(), 100 * kFailureBudget);
    return kExitFailures;
  }
  return kExitOk;
}

// ---- approx-study ----------------------------------------------------------

struct ApproxArgs {
  std::optional<std::vector<int>> qubit_counts;
  std::optional<int> trials;
  bool shared_waveform = false;
};

int run_approx(const Common& common, const ApproxArgs& args) {
  auto cfg = qnd::io::approx_config_from_json(load_config(common));
  apply(args.qubit_counts, cfg.qubit_counts);
  apply(args.trials, cfg.trials);
  apply(common.seed, cfg.master_seed);
  apply(common.out, cfg.output_dir);
  if (args.shared_waveform) cfg.shared_waveform = true;
  cfg.validate();
  const auto series = qnd::run_approximation_study(cfg, common.threads);

  const fs::path dir = prepare_out(cfg.output_dir);
  std::ostringstream csv;
  csv << "N,with_controls,t,mean_fidelity,rms_z_err\n";
  Json summary = Json::array();
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.times.size(); ++i) {
      csv << s.num_qubits << ',' << (s.with_controls ? 1 : 0) << ','
          << qnd::io::format_double(s.times[i]) << ',' << qnd::io::format_double(s.mean_fidelity[i])
          << ',' << qnd::io::format_double(s.rms_z_err[i]) << '\n';
    }
    summary.push_back({{"N", s.num_qubits},
                       {"with_controls", s.with_controls},
                       {"min_mean_fidelity", s.min_mean_fidelity},
                       {"final_mean_fidelity", s.final_mean_fidelity},
                       {"max_rms_z_err", s.max_rms_z_err}});
    std::printf("N=%d controls=%d min_fidelity=%.4f final_fidelity=%.4f max_rms_z_err=%.4f\n",
                s.num_qubits, s.with_controls ? 1 : 0, s.min_mean_fidelity, s.final_mean_fidelity,
                s.max_rms_z_err);
  }
  write_text(dir / "approx.csv", csv.str());
  qnd::io::write_json_file(dir / "approx_summary.json",
                           {{"config", qnd::io::approx_config_to_json(cfg)}, {"series", summary}});
  return kExitOk;
}

// ---- squeeze-demo ----------------------------------------------------------

struct SqueezeArgs {
  std::optional<int> num_qubits;
  bool with_controls = false;
  std::optional<double> total_time;
};

int run_squeeze(const Common& common, const SqueezeArgs& args) {
  auto cfg = qnd::io::squeeze_config_from_json(load_config(common));
  apply(args.num_qubits, cfg.num_qubits);
  apply(args.total_time, cfg.total_time);
  apply(common.seed, cfg.seed);
  apply(common.out, cfg.output_dir);
  if (args.with_controls) cfg.with_controls = true;
  cfg.validate();
  const auto r = qnd::run_squeezing_demo(cfg);

  const fs::path dir = prepare_out(cfg.output_dir);
  std::ostringstream csv;
  csv << "t,xi_squared,xi_squared_db,y,jx,jy,jz\n";
  for (std::size_t i = 0; i < r.times.size(); ++i) {
    csv << qnd::io::format_double(r.times[i]) << ',' << qnd::io::format_double(r.xi_squared[i])
        << ',' << qnd::io::format_double(r.xi_squared_db[i]) << ','
        << qnd::io::format_double(r.record[i]) << ',' << qnd::io::format_double(r.mean_spin[i].x)
        << ',' << qnd::io::format_double(r.mean_spin[i].y) << ','
        << qnd::io::format_double(r.mean_spin[i].z) << '\n';
  }
  write_text(dir / "squeezing.csv", csv.str());
  for (const auto& snap : r.q_snapshots) {
    std::ostringstream q;
    q << "polar,azimuth,q\n";
    for (std::size_t i = 0; i < snap.values.size(); ++i) {
      q << qnd::io::format_double(snap.grid[i].polar) << ','
        << qnd::io::format_double(snap.grid[i].azimuth) << ','
        << qnd::io::format_double(snap.values[i]) << '\n';
    }
    write_text(dir / ("qfunc_" + time_label(snap.time) + ".csv"), q.str());
  }
  qnd::io::write_json_file(dir / "waveform.json", qnd::io::waveform_to_json(r.waveform));
  qnd::io::write_json_file(dir / "squeeze_config.json", qnd::io::squeeze_config_to_json(cfg));
  return kExitOk;
}

// ---- fit -------------------------------------------------------------------

int run_fit(const Common& common, const std::string& input) {
  std::vector<double> ns, ys;
  Json results = Json::array();
  auto fit_one = [&](const std::string& label) {
    if (ns.size() < 3) throw qnd::ConfigError("fit: " + label + " needs at least 3 N values with a positive mean");
    const auto f = qnd::fit_power_law(ns, ys);
    results.push_back({{"kind", label}, {"a", f.a}, {"a_err", f.a_err}, {"b", f.b}, {"b_err", f.b_err}});
    std::printf("%s a=%.4g +- %.2g b=%.4g +- %.2g\n", label.c_str(), f.a, f.a_err, f.b, f.b_err);
  };
  if (fs::path(input).extension() == ".json") {
    const Json j = qnd::io::read_json_file(input);
    for (const auto& res : j.at("results")) {
      ns.clear();
      ys.clear();
      for (const auto& a : res.at("aggregates")) {
        if (!a.at("mean_infidelity").is_number() || !(a.at("mean_infidelity").get<double>() > 0.0)) continue;
        ns.push_back(a.at("N").get<double>());
        ys.push_back(a.at("mean_infidelity").get<double>());
      }
      fit_one(res.at("kind").get<std::string>());
    }
  } else {
    std::ifstream in(input);
    if (!in) throw qnd::ConfigError("cannot open " + input);
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto comma = line.find(',');
      if (comma == std::string::npos) throw qnd::ConfigError("fit: expected N,value rows");
      ns.push_back(std::stod(line.substr(0, comma)));
      ys.push_back(std::stod(line.substr(comma + 1)));
    }
    fit_one("data");
  }
  const fs::path dir = prepare_out(common.out.value_or("out"));
  qnd::io::write_json_file(dir / "fit.json", {{"results", results}});
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Continuous-measurement qubit tomography"};
  app.require_subcommand(1);

  Common common;
  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "generate measurement records from exact dynamics");
  add_common(simulate, common);
  simulate->add_option("--num-qubits", sim.num_qubits);
  simulate->add_option("--trials", sim.trials);
  simulate->add_option("--rotations", sim.rotations);
  simulate->add_option("--total-time", sim.total_time);
  simulate->add_option("--dt", sim.dt);
  simulate->add_option("--initial", sim.initial, "initial Bloch vector x y z")->expected(3);
  simulate->add_flag("--binary", sim.binary, "also write columnar binary records");

  EstimateArgs est;
  auto* estimate = app.add_subcommand("estimate", "estimate the initial state from one record");
  add_common(estimate, common);
  estimate->add_option("--record", est.record, "record .csv or .bin")->required()->check(CLI::ExistingFile);
  estimate->add_option("--waveform", est.waveform, "waveform JSON")->check(CLI::ExistingFile);
  estimate->add_option("--kind", est.kind, "scs_mle or backaction_free");
  estimate->add_option("--truth", est.truth, "true Bloch vector, for scoring")->expected(3);

  CampaignArgs camp;
  auto* campaign = app.add_subcommand("campaign", "estimator campaign with power-law fit");
  add_common(campaign, common);
  campaign->add_option("--kind", camp.kind, "scs_mle, backaction_free or both");
  campaign->add_option("--n", camp.qubit_counts, "qubit counts")->expected(1, -1);
  campaign->add_option("--trials", camp.trials, "trials per N");
  campaign->add_flag("--fresh-waveforms", camp.fresh_waveforms, "draw a waveform per trial");

  ApproxArgs approx;
  auto* approx_cmd = app.add_subcommand("approx-study", "spin-coherent approximation quality");
  add_common(approx_cmd, common);
  approx_cmd->add_option("--n", approx.qubit_counts, "qubit counts")->expected(1, -1);
  approx_cmd->add_option("--trials", approx.trials);
  approx_cmd->add_flag("--shared-waveform", approx.shared_waveform);

  SqueezeArgs sq;
  auto* squeeze = app.add_subcommand("squeeze-demo", "squeezing and Q-function snapshots");
  add_common(squeeze, common);
  squeeze->add_option("--num-qubits", sq.num_qubits);
  squeeze->add_option("--total-time", sq.total_time);
  squeeze->add_flag("--with-controls", sq.with_controls);

  std::string fit_input;
  auto* fit = app.add_subcommand("fit", "power-law fit of N vs mean infidelity");
  add_common(fit, common);
  fit->add_option("--input", fit_input, "aggregate.json or N,value CSV")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  const auto start = std::chrono::steady_clock::now();
  const std::string started = iso_now();
  auto* chosen = app.get_subcommands().front();
  int code = kExitOk;
  try {
    if (chosen == simulate) code = run_simulate(common, sim);
    else if (chosen == estimate) code = run_estimate(common, est);
    else if (chosen == campaign) code = run_campaign_cmd(common, camp);
    else if (chosen == approx_cmd) code = run_approx(common, approx);
    else if (chosen == squeeze) code = run_squeeze(common, sq);
    else code = run_fit(common, fit_input);
  } catch (const qnd::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const nlohmann::json::exception& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitError;
  }

  // Output directory resolution mirrors the subcommands' defaults.
  std::string out_dir = common.out.value_or("out");
  if (!common.out && !common.config.empty()) {
    const Json j = qnd::io::read_json_file(common.config);
    if (j.contains("output_dir")) out_dir = j["output_dir"].get<std::string>();
  }
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (fs::exists(out_dir)) write_meta(out_dir, chosen->get_name(), started, wall, common.threads);
  return code;
}
