// Copyright 2026 The mfgsolve Authors
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

#include <istream>
#include <ostream>
#include <string>
#include <string_view>

#include "mfg/harness.hpp"
#include "mfg/measures.hpp"
#include "mfg/model.hpp"
#include "mfg/policy.hpp"

namespace mfg {

// Round-trip decimal rendering of a double (shortest %.17g form).
std::string format_double(double v);

// RFC 4180 field escaping (quotes fields containing commas, quotes, CR or LF).
std::string csv_escape(std::string_view field);

// All CSV writers emit a header row and CRLF record separators.
void write_measure_csv(std::ostream& os, const EmpiricalMeasure& m);
void write_flow_csv(std::ostream& os, const MeasureFlow& flow);
void write_policy_csv(std::ostream& os, const FeedbackPolicy& policy);
void write_sweep_csv(std::ostream& os, const SweepResult& sweep);

void write_measure_csv_file(const std::string& path, const EmpiricalMeasure& m);
void write_flow_csv_file(const std::string& path, const MeasureFlow& flow);
void write_policy_csv_file(const std::string& path, const FeedbackPolicy& policy);
void write_sweep_csv_file(const std::string& path, const SweepResult& sweep);

// Reads a measure written by write_measure_csv (columns x0..x{d-1},weight).
EmpiricalMeasure read_measure_csv(std::istream& is);
EmpiricalMeasure read_measure_csv_file(const std::string& path);

}  // namespace mfg
