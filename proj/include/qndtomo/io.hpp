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

#include <filesystem>
#include <iosfwd>
#include <string>

#include <json.hpp>

#include "qndtomo/estimator.hpp"
#include "qndtomo/harness.hpp"
#include "qndtomo/trajectory.hpp"

namespace qnd::io {

using Json = nlohmann::json;

// Measurement records. CSV columns: step,t,dy preceded by '#' metadata lines.
// The binary form is columnar: a fixed little-endian header then the dy column.
void write_record_csv(std::ostream& os, const MeasurementRecord& record);
MeasurementRecord read_record_csv(std::istream& is);
void write_record_binary(std::ostream& os, const MeasurementRecord& record);
MeasurementRecord read_record_binary(std::istream& is);

/// {"format":"qndtomo.waveform","version":1,"larmor":..,"segments":[{"axis":[x,y,z],"tau":..}]}
Json waveform_to_json(const ControlWaveform& waveform);
ControlWaveform waveform_from_json(const Json& j);

Json bloch_to_json(const BlochVector& v);
BlochVector bloch_from_json(const Json& j);

Json report_to_json(const EstimateReport& report);
/// candidate_x,candidate_y,candidate_z,llr,valid for one stage.
void write_llr_table_csv(std::ostream& os, std::span<const CandidateScore> scores);

// Config parsing: unknown keys raise ConfigError; missing keys keep defaults.
EstimatorConfig estimator_config_from_json(const Json& j);
Json estimator_config_to_json(const EstimatorConfig& c);
CampaignConfig campaign_config_from_json(const Json& j);
Json campaign_config_to_json(const CampaignConfig& c);
ApproxStudyConfig approx_config_from_json(const Json& j);
Json approx_config_to_json(const ApproxStudyConfig& c);
SqueezeConfig squeeze_config_from_json(const Json& j);
Json squeeze_config_to_json(const SqueezeConfig& c);

Json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const Json& j);

// Campaign outputs.
void write_rows_csv(std::ostream& os, std::span<const TrialRow> rows);
Json aggregates_to_json(const CampaignResult& result);
Json fit_to_json(const CampaignResult& result);

/// Full-precision text for doubles so reruns are byte-comparable.
std::string format_double(double v);

}  // namespace qnd::io
