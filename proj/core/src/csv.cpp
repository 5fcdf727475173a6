// Copyright 2026 The varid Authors
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

#include "varid/csv.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "varid/errors.hpp"

namespace varid {
namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r");
  const auto last = s.find_last_not_of(" \t\r");
  if (first == std::string::npos) return {};
  return s.substr(first, last - first + 1);
}

double parse_number(const std::string& text, const std::string& where) {
  const std::string s = trim(text);
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || errno == ERANGE) {
    throw ConfigError(where + ": not a number: '" + s + "'");
  }
  return v;
}

void write_row(std::ostream& out, double first, const Vector& rest) {
  out << format_double(first);
  for (Eigen::Index i = 0; i < rest.size(); ++i) out << ',' << format_double(rest[i]);
}

}  // namespace

std::string format_double(double value) {
  if (value == 0.0) return "0";  // also folds -0
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
  if (traj.states.empty()) return;
  const auto nq = traj.states.front().q.size();
  const auto nh = traj.states.front().lambda.size();
  out << "k,t";
  for (Eigen::Index i = 0; i < nq; ++i) out << ",q_" << i;
  for (Eigen::Index i = 0; i < nq; ++i) out << ",p_" << i;
  for (Eigen::Index i = 0; i < nh; ++i) out << ",lambda_" << i;
  out << '\n';
  for (int k = 0; k < traj.size(); ++k) {
    const DiscreteState& s = traj[k];
    out << k << ',';
    Vector row(2 * nq + nh);
    row << s.q, s.p, s.lambda.size() == nh ? s.lambda : Vector::Zero(nh);
    write_row(out, traj.grid.time(k), row);
    out << '\n';
  }
}

void write_time_series_csv(std::ostream& out, const TimeSeries& series) {
  out << 't';
  for (const std::string& n : series.names) out << ',' << n;
  out << '\n';
  for (Eigen::Index k = 0; k < series.samples.rows(); ++k) {
    write_row(out, series.grid.time(static_cast<int>(k)), series.samples.row(k).transpose());
    out << '\n';
  }
}

TimeSeries parse_time_series_csv(std::istream& in, const TimeGrid& grid, double time_tol,
                                 const std::string& source) {
  std::string line;
  if (!std::getline(in, line)) throw ConfigError(source + ": empty file");
  std::vector<std::string> header = split(trim(line));
  if (header.empty() || trim(header.front()) != "t") {
    throw ConfigError(source + ": first column must be 't'");
  }
  TimeSeries series;
  series.grid = grid;
  for (std::size_t i = 1; i < header.size(); ++i) series.names.push_back(trim(header[i]));
  const auto channels = static_cast<Eigen::Index>(series.names.size());
  series.samples.resize(grid.samples(), channels);

  int row = 0;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const std::string where = source + ":" + std::to_string(line_no);
    const std::vector<std::string> fields = split(trim(line));
    if (static_cast<Eigen::Index>(fields.size()) != channels + 1) {
      throw ConfigError(where + ": expected " + std::to_string(channels + 1) + " fields");
    }
    if (row >= grid.samples()) {
      throw ConfigError(source + ": more rows than the " + std::to_string(grid.samples()) +
                        " grid samples");
    }
    const double t = parse_number(fields[0], where);
    if (std::abs(t - grid.time(row)) > time_tol) {
      throw ConfigError(where + ": time " + format_double(t) + " does not match grid time " +
                        format_double(grid.time(row)));
    }
    for (Eigen::Index c = 0; c < channels; ++c) {
      series.samples(row, c) = parse_number(fields[static_cast<std::size_t>(c + 1)], where);
    }
    ++row;
  }
  if (row != grid.samples()) {
    throw ConfigError(source + ": expected " + std::to_string(grid.samples()) + " rows, found " +
                      std::to_string(row));
  }
  return series;
}

TimeSeries read_time_series_csv(const std::filesystem::path& path, const TimeGrid& grid,
                                double time_tol) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  return parse_time_series_csv(in, grid, time_tol, path.string());
}

void write_file_atomically(const std::filesystem::path& path, const std::string& contents) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + tmp.string());
    out << contents;
    out.flush();
    if (!out) throw ConfigError("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw ConfigError("cannot rename " + tmp.string() + ": " + ec.message());
}

}  // namespace varid
