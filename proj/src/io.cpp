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

#include "qndtomo/io.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

namespace qnd::io {

namespace {

static_assert(std::endian::native == std::endian::little, "binary records assume little-endian");

constexpr std::array<char, 8> kRecordMagic = {'Q', 'N', 'D', 'R', 'E', 'C', '\0', '\0'};
constexpr int kWaveformVersion = 1;

template <typename T>
void put(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw std::runtime_error("truncated binary record");
  return v;
}

// Walks the object once, rejecting keys outside `allowed`.
class ConfigReader {
 public:
  ConfigReader(const Json& j, std::string context, std::set<std::string> allowed)
      : j_(j), context_(std::move(context)) {
    if (!j.is_object()) throw ConfigError(context_ + ": expected a JSON object");
    allowed.insert("version");
    for (const auto& [key, _] : j.items()) {
      if (!allowed.contains(key)) throw ConfigError(context_ + ": unknown key '" + key + "'");
    }
  }

  template <typename T>
  void take(const std::string& key, T& target) const {
    if (!j_.contains(key)) return;
    try {
      target = j_.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(context_ + ": bad value for '" + key + "': " + e.what());
    }
  }

 private:
  const Json& j_;
  std::string context_;
};

std::map<std::string, std::string> parse_meta_line(const std::string& line) {
  std::map<std::string, std::string> kv;
  std::stringstream ss(line.substr(1));
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto start = item.find_first_not_of(' ');
    if (start == std::string::npos) continue;
    item = item.substr(start);
    const auto eq = item.find('=');
    if (eq == std::string::npos) continue;
    kv[item.substr(0, eq)] = item.substr(eq + 1);
  }
  return kv;
}

}  // namespace

std::string format_double(double v) {
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

void write_record_csv(std::ostream& os, const MeasurementRecord& record) {
  os << "# format=qndtomo.record,version=" << MeasurementRecord::kFormatVersion << "\n";
  os << "# num_qubits=" << record.num_qubits << ",kappa=" << format_double(record.kappa)
     << ",dt=" << format_double(record.dt) << ",seed=" << record.seed << "\n";
  os << "step,t,dy\n";
  for (std::size_t i = 0; i < record.increments.size(); ++i) {
    os << i << ',' << format_double(static_cast<double>(i) * record.dt) << ','
       << format_double(record.increments[i]) << '\n';
  }
}

MeasurementRecord read_record_csv(std::istream& is) {
  MeasurementRecord rec;
  std::string line;
  bool have_header = false;
  bool have_format = false;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto kv = parse_meta_line(line);
      if (kv.contains("format")) {
        if (kv.at("format") != "qndtomo.record") throw std::runtime_error("not a record file");
        if (std::stoi(kv.at("version")) != MeasurementRecord::kFormatVersion) {
          throw std::runtime_error("unsupported record version");
        }
        have_format = true;
      }
      if (kv.contains("num_qubits")) rec.num_qubits = std::stoi(kv.at("num_qubits"));
      if (kv.contains("kappa")) rec.kappa = std::stod(kv.at("kappa"));
      if (kv.contains("dt")) rec.dt = std::stod(kv.at("dt"));
      if (kv.contains("seed")) rec.seed = std::stoull(kv.at("seed"));
      continue;
    }
    if (!have_header) {
      if (line != "step,t,dy") throw std::runtime_error("record CSV: unexpected header");
      have_header = true;
      continue;
    }
    const auto last = line.rfind(',');
    if (last == std::string::npos) throw std::runtime_error("record CSV: malformed row");
    rec.increments.push_back(std::stod(line.substr(last + 1)));
  }
  if (!have_format || !have_header) throw std::runtime_error("record CSV: missing header");
  rec.validate();
  return rec;
}

void write_record_binary(std::ostream& os, const MeasurementRecord& record) {
  os.write(kRecordMagic.data(), kRecordMagic.size());
  put<std::uint32_t>(os, MeasurementRecord::kFormatVersion);
  put<std::int32_t>(os, record.num_qubits);
  put<double>(os, record.kappa);
  put<double>(os, record.dt);
  put<std::uint64_t>(os, record.seed);
  put<std::uint64_t>(os, record.increments.size());
  os.write(reinterpret_cast<const char*>(record.increments.data()),
           static_cast<std::streamsize>(record.increments.size() * sizeof(double)));
}

MeasurementRecord read_record_binary(std::istream& is) {
  std::array<char, 8> magic{};
  is.read(magic.data(), magic.size());
  if (!is || magic != kRecordMagic) throw std::runtime_error("not a binary record");
  if (get<std::uint32_t>(is) != MeasurementRecord::kFormatVersion) {
    throw std::runtime_error("unsupported record version");
  }
  MeasurementRecord rec;
  rec.num_qubits = get<std::int32_t>(is);
  rec.kappa = get<double>(is);
  rec.dt = get<double>(is);
  rec.seed = get<std::uint64_t>(is);
  const auto n = get<std::uint64_t>(is);
  rec.increments.resize(n);
  is.read(reinterpret_cast<char*>(rec.increments.data()),
          static_cast<std::streamsize>(n * sizeof(double)));
  if (!is) throw std::runtime_error("truncated binary record");
  rec.validate();
  return rec;
}

Json bloch_to_json(const BlochVector& v) { return Json::array({v.x, v.y, v.z}); }

BlochVector bloch_from_json(const Json& j) {
  if (!j.is_array() || j.size() != 3) throw ConfigError("Bloch vector must be [x, y, z]");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

Json waveform_to_json(const ControlWaveform& waveform) {
  Json segs = Json::array();
  for (const auto& s : waveform.segments()) {
    segs.push_back({{"axis", bloch_to_json(s.axis)}, {"tau", s.duration}});
  }
  return {{"format", "qndtomo.waveform"},
          {"version", kWaveformVersion},
          {"larmor", waveform.larmor()},
          {"segments", segs}};
}

ControlWaveform waveform_from_json(const Json& j) {
  if (j.value("format", "") != "qndtomo.waveform") throw ConfigError("not a waveform file");
  if (j.value("version", 0) != kWaveformVersion) throw ConfigError("unsupported waveform version");
  const double larmor = j.at("larmor").get<double>();
  std::vector<BlochVector> axes;
  for (const auto& s : j.at("segments")) {
    axes.push_back(bloch_from_json(s.at("axis")));
    const double tau = s.at("tau").get<double>();
    if (std::abs(tau * larmor - std::numbers::pi / 2.0) > 1e-9) {
      throw ConfigError("waveform segment is not a pi/2 rotation");
    }
  }
  try {
    return ControlWaveform(std::move(axes), larmor);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

Json report_to_json(const EstimateReport& report) {
  auto stage = [](std::span<const CandidateScore> scores) {
    Json rows = Json::array();
    for (const auto& s : scores) {
      rows.push_back({{"candidate", bloch_to_json(s.candidate)}, {"llr", s.llr}, {"valid", s.valid}});
    }
    return rows;
  };
  return {{"format", "qndtomo.estimate"},
          {"version", 1},
          {"kind", to_string(report.kind)},
          {"estimate", bloch_to_json(report.estimate)},
          {"reference_stage1", bloch_to_json(report.reference_stage1)},
          {"winner_stage1", bloch_to_json(report.winner_stage1)},
          {"reference_stage2", bloch_to_json(report.reference_stage2)},
          {"n_invalid", report.n_invalid},
          {"n_invalid_stage2", report.n_invalid_stage2},
          {"stage1", stage(report.stage1)},
          {"stage2", stage(report.stage2)}};
}

void write_llr_table_csv(std::ostream& os, std::span<const CandidateScore> scores) {
  os << "candidate_x,candidate_y,candidate_z,llr,valid\n";
  for (const auto& s : scores) {
    os << format_double(s.candidate.x) << ',' << format_double(s.candidate.y) << ','
       << format_double(s.candidate.z) << ',' << format_double(s.llr) << ','
       << (s.valid ? 1 : 0) << '\n';
  }
}

EstimatorConfig estimator_config_from_json(const Json& j) {
  const ConfigReader r(j, "estimator",
                       {"m1_count", "m2_count", "shell_radius", "cap_half_angle", "baseline_count",
                        "rng_seed"});
  EstimatorConfig c;
  r.take("m1_count", c.m1_count);
  r.take("m2_count", c.m2_count);
  r.take("shell_radius", c.shell_radius);
  r.take("cap_half_angle", c.cap_half_angle);
  r.take("baseline_count", c.baseline_count);
  r.take("rng_seed", c.rng_seed);
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return c;
}

Json estimator_config_to_json(const EstimatorConfig& c) {
  return {{"m1_count", c.m1_count},         {"m2_count", c.m2_count},
          {"shell_radius", c.shell_radius}, {"cap_half_angle", c.cap_half_angle},
          {"baseline_count", c.baseline_count}, {"rng_seed", c.rng_seed}};
}

CampaignConfig campaign_config_from_json(const Json& j) {
  const ConfigReader r(j, "campaign",
                       {"qubit_counts", "trials_per_n", "num_rotations", "larmor", "total_time",
                        "dt", "kappa", "max_norm_drift", "estimator", "master_seed", "output_dir",
                        "shared_waveform"});
  CampaignConfig c;
  r.take("qubit_counts", c.qubit_counts);
  r.take("trials_per_n", c.trials_per_n);
  r.take("num_rotations", c.num_rotations);
  r.take("larmor", c.larmor);
  r.take("total_time", c.total_time);
  r.take("dt", c.dt);
  r.take("kappa", c.kappa);
  r.take("max_norm_drift", c.max_norm_drift);
  r.take("master_seed", c.master_seed);
  r.take("output_dir", c.output_dir);
  r.take("shared_waveform", c.shared_waveform);
  if (j.contains("estimator")) c.estimator = estimator_config_from_json(j.at("estimator"));
  c.validate();
  return c;
}

Json campaign_config_to_json(const CampaignConfig& c) {
  return {{"qubit_counts", c.qubit_counts},   {"trials_per_n", c.trials_per_n},
          {"num_rotations", c.num_rotations}, {"larmor", c.larmor},
          {"total_time", c.total_time},       {"dt", c.dt},
          {"kappa", c.kappa},                 {"max_norm_drift", c.max_norm_drift},
          {"estimator", estimator_config_to_json(c.estimator)},
          {"master_seed", c.master_seed},     {"output_dir", c.output_dir},
          {"shared_waveform", c.shared_waveform}};
}

ApproxStudyConfig approx_config_from_json(const Json& j) {
  const ConfigReader r(j, "approx-study",
                       {"qubit_counts", "trials", "num_rotations", "larmor", "total_time", "dt",
                        "kappa", "max_norm_drift", "master_seed", "shared_waveform",
                        "sample_every", "control_modes", "output_dir"});
  ApproxStudyConfig c;
  r.take("qubit_counts", c.qubit_counts);
  r.take("trials", c.trials);
  r.take("num_rotations", c.num_rotations);
  r.take("larmor", c.larmor);
  r.take("total_time", c.total_time);
  r.take("dt", c.dt);
  r.take("kappa", c.kappa);
  r.take("max_norm_drift", c.max_norm_drift);
  r.take("master_seed", c.master_seed);
  r.take("shared_waveform", c.shared_waveform);
  r.take("sample_every", c.sample_every);
  r.take("control_modes", c.control_modes);
  r.take("output_dir", c.output_dir);
  c.validate();
  return c;
}

Json approx_config_to_json(const ApproxStudyConfig& c) {
  return {{"qubit_counts", c.qubit_counts}, {"trials", c.trials},
          {"num_rotations", c.num_rotations}, {"larmor", c.larmor},
          {"total_time", c.total_time},     {"dt", c.dt},
          {"kappa", c.kappa},               {"max_norm_drift", c.max_norm_drift},
          {"master_seed", c.master_seed},   {"shared_waveform", c.shared_waveform},
          {"sample_every", c.sample_every}, {"control_modes", c.control_modes},
          {"output_dir", c.output_dir}};
}

SqueezeConfig squeeze_config_from_json(const Json& j) {
  const ConfigReader r(j, "squeeze-demo",
                       {"num_qubits", "with_controls", "num_rotations", "larmor", "total_time",
                        "dt", "kappa", "max_norm_drift", "seed", "sample_every", "q_times",
                        "q_polar_points", "q_azimuth_points", "output_dir"});
  SqueezeConfig c;
  r.take("num_qubits", c.num_qubits);
  r.take("with_controls", c.with_controls);
  r.take("num_rotations", c.num_rotations);
  r.take("larmor", c.larmor);
  r.take("total_time", c.total_time);
  r.take("dt", c.dt);
  r.take("kappa", c.kappa);
  r.take("max_norm_drift", c.max_norm_drift);
  r.take("seed", c.seed);
  r.take("sample_every", c.sample_every);
  r.take("q_times", c.q_times);
  r.take("q_polar_points", c.q_polar_points);
  r.take("q_azimuth_points", c.q_azimuth_points);
  r.take("output_dir", c.output_dir);
  c.validate();
  return c;
}

Json squeeze_config_to_json(const SqueezeConfig& c) {
  return {{"num_qubits", c.num_qubits},     {"with_controls", c.with_controls},
          {"num_rotations", c.num_rotations}, {"larmor", c.larmor},
          {"total_time", c.total_time},     {"dt", c.dt},
          {"kappa", c.kappa},               {"max_norm_drift", c.max_norm_drift},
          {"seed", c.seed},                 {"sample_every", c.sample_every},
          {"q_times", c.q_times},           {"q_polar_points", c.q_polar_points},
          {"q_azimuth_points", c.q_azimuth_points}, {"output_dir", c.output_dir}};
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

void write_rows_csv(std::ostream& os, std::span<const TrialRow> rows) {
  os << "N,trial,truth_x,truth_y,truth_z,est_x,est_y,est_z,infidelity,kind,n_invalid\n";
  for (const auto& r : rows) {
    os << r.num_qubits << ',' << r.trial << ',' << format_double(r.truth.x) << ','
       << format_double(r.truth.y) << ',' << format_double(r.truth.z) << ',';
    if (r.failed) {
      os << "nan,nan,nan,nan,";
    } else {
      os << format_double(r.estimate.x) << ',' << format_double(r.estimate.y) << ','
         << format_double(r.estimate.z) << ',' << format_double(r.infidelity) << ',';
    }
    os << to_string(r.kind) << ',' << r.n_invalid << '\n';
  }
}

Json aggregates_to_json(const CampaignResult& result) {
  Json rows = Json::array();
  for (const auto& a : result.aggregates) {
    rows.push_back({{"N", a.num_qubits},
                    {"trials", a.trials},
                    {"failed", a.failed},
                    {"mean_infidelity", a.mean_infidelity},
                    {"std_error", a.std_error},
                    {"optimal_bound", a.optimal_bound}});
  }
  return {{"kind", to_string(result.kind)},
          {"failed_trials", result.failed_trials()},
          {"aggregates", rows}};
}

Json fit_to_json(const CampaignResult& result) {
  if (!result.fit) return {{"kind", to_string(result.kind)}, {"fit", nullptr}};
  const auto& f = *result.fit;
  return {{"kind", to_string(result.kind)},
          {"a", f.a},
          {"a_err", f.a_err},
          {"b", f.b},
          {"b_err", f.b_err}};
}

}  // namespace qnd::io
