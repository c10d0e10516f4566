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

#include "mfg/io.hpp"

#include <cstdio>
#include <fstream>
#include <istream>
#include <stdexcept>
#include <variant>
#include <vector>

namespace mfg {
namespace {

constexpr const char* kCrlf = "\r\n";

void require_stream(const std::ostream& os, const std::string& what) {
  if (!os) throw std::runtime_error("io: failed writing " + what);
}

template <typename Fn>
void write_file(const std::string& path, const std::string& what, Fn&& fn) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("io: cannot open " + path);
  fn(os);
  os.flush();
  if (!os) throw std::runtime_error("io: failed writing " + what + " to " + path);
}

// Minimal RFC 4180 reader: returns records of fields, handling quoted fields
// with embedded separators and doubled quotes. Accepts CRLF and LF endings.
std::vector<std::vector<std::string>> read_records(std::istream& is) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool quoted = false;
  bool any = false;
  char c;
  while (is.get(c)) {
    any = true;
    if (quoted) {
      if (c == '"') {
        if (is.peek() == '"') {
          is.get(c);
          field.push_back('"');
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        quoted = true;
        break;
      case ',':
        record.push_back(std::move(field));
        field.clear();
        break;
      case '\r':
        break;
      case '\n':
        record.push_back(std::move(field));
        field.clear();
        records.push_back(std::move(record));
        record.clear();
        break;
      default:
        field.push_back(c);
    }
  }
  if (any && (!field.empty() || !record.empty())) {
    record.push_back(std::move(field));
    records.push_back(std::move(record));
  }
  return records;
}

double parse_double(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error("io: " + what + ": not a number: '" + s + "'");
  }
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string csv_escape(std::string_view field) {
  const bool needs = field.find_first_of(",\"\r\n") != std::string_view::npos;
  if (!needs) return std::string(field);
  std::string out;
  out.reserve(field.size() + 2);
  out.push_back('"');
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

void write_measure_csv(std::ostream& os, const EmpiricalMeasure& m) {
  for (int c = 0; c < m.dim(); ++c) os << "x" << c << ",";
  os << "weight" << kCrlf;
  for (std::size_t i = 0; i < m.size(); ++i) {
    const std::span<const double> pt = m.point(i);
    for (int c = 0; c < m.dim(); ++c) {
      os << format_double(pt[static_cast<std::size_t>(c)]) << ",";
    }
    os << format_double(m.weight(i)) << kCrlf;
  }
  require_stream(os, "measure CSV");
}

void write_flow_csv(std::ostream& os, const MeasureFlow& flow) {
  os << "step,time,x0,weight" << kCrlf;
  for (std::size_t s = 0; s < flow.measures.size(); ++s) {
    const EmpiricalMeasure& m = flow.measures[s];
    if (m.dim() != 1) {
      throw std::invalid_argument("io: flow CSV supports scalar measures only");
    }
    for (std::size_t i = 0; i < m.size(); ++i) {
      os << s << "," << format_double(flow.times[s]) << ","
         << format_double(m.value(i)) << "," << format_double(m.weight(i))
         << kCrlf;
    }
  }
  require_stream(os, "flow CSV");
}

void write_policy_csv(std::ostream& os, const FeedbackPolicy& policy) {
  os << "stage,state,action" << kCrlf;
  for (int s = 0; s < policy.stages(); ++s) {
    const FeedbackPolicy::Stage& stage = policy.stage(s);
    const LinearInterpolant* interp = std::get_if<LinearInterpolant>(&stage);
    if (interp == nullptr) {
      throw std::invalid_argument("io: policy CSV supports scalar stages only");
    }
    for (std::size_t j = 0; j < interp->knots_x().size(); ++j) {
      os << s << "," << format_double(interp->knots_x()[j]) << ","
         << format_double(interp->knots_y()[j]) << kCrlf;
    }
  }
  require_stream(os, "policy CSV");
}

void write_sweep_csv(std::ostream& os, const SweepResult& sweep) {
  os << "k,converged,iterations,flow_gap,control_gap,control_gap_stderr,"
        "state_gap,state_gap_stderr"
     << kCrlf;
  for (std::size_t i = 0; i < sweep.ks.size(); ++i) {
    os << sweep.ks[i] << "," << (sweep.converged[i] != 0 ? 1 : 0) << ","
       << sweep.iterations[i] << "," << format_double(sweep.flow_gaps[i]) << ","
       << format_double(sweep.control_gaps[i]) << ","
       << format_double(sweep.control_gap_stderr[i]) << ","
       << format_double(sweep.state_gaps[i]) << ","
       << format_double(sweep.state_gap_stderr[i]) << kCrlf;
  }
  require_stream(os, "sweep CSV");
}

void write_measure_csv_file(const std::string& path, const EmpiricalMeasure& m) {
  write_file(path, "measure CSV", [&](std::ostream& os) { write_measure_csv(os, m); });
}

void write_flow_csv_file(const std::string& path, const MeasureFlow& flow) {
  write_file(path, "flow CSV", [&](std::ostream& os) { write_flow_csv(os, flow); });
}

void write_policy_csv_file(const std::string& path, const FeedbackPolicy& policy) {
  write_file(path, "policy CSV", [&](std::ostream& os) { write_policy_csv(os, policy); });
}

void write_sweep_csv_file(const std::string& path, const SweepResult& sweep) {
  write_file(path, "sweep CSV", [&](std::ostream& os) { write_sweep_csv(os, sweep); });
}

EmpiricalMeasure read_measure_csv(std::istream& is) {
  const std::vector<std::vector<std::string>> records = read_records(is);
  if (records.size() < 2) {
    throw std::runtime_error("io: measure CSV needs a header and at least one row");
  }
  const std::vector<std::string>& header = records.front();
  if (header.size() < 2 || header.back() != "weight") {
    throw std::runtime_error("io: measure CSV header must end in 'weight'");
  }
  const int dim = static_cast<int>(header.size()) - 1;
  std::vector<double> points;
  std::vector<double> weights;
  for (std::size_t r = 1; r < records.size(); ++r) {
    const std::vector<std::string>& row = records[r];
    if (row.size() != header.size()) {
      throw std::runtime_error("io: measure CSV row " + std::to_string(r) +
                               " has wrong field count");
    }
    for (int c = 0; c < dim; ++c) {
      points.push_back(parse_double(row[static_cast<std::size_t>(c)],
                                    "measure CSV row " + std::to_string(r)));
    }
    weights.push_back(parse_double(row.back(), "measure CSV row " + std::to_string(r)));
  }
  return EmpiricalMeasure(std::move(points), std::move(weights), dim);
}

EmpiricalMeasure read_measure_csv_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("io: cannot open " + path);
  return read_measure_csv(is);
}

}  // namespace mfg
