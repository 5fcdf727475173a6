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

#ifndef VARID_CSV_HPP_
#define VARID_CSV_HPP_

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "varid/estimation.hpp"

namespace varid {

// Shortest round-trip decimal representation.
std::string format_double(double value);

// Header `k,t,q_0..q_{n-1},p_0..p_{n-1},lambda_0..lambda_{m-1}`.
void write_trajectory_csv(std::ostream& out, const Trajectory& traj);

// Header `t,<names...>`.
void write_time_series_csv(std::ostream& out, const TimeSeries& series);

// Reads a `t,<names...>` file. Every row's time must match grid.time(k) within
// `time_tol` and the row count must equal grid.samples(); ConfigError otherwise.
TimeSeries read_time_series_csv(const std::filesystem::path& path, const TimeGrid& grid,
                                double time_tol = 1e-9);
TimeSeries parse_time_series_csv(std::istream& in, const TimeGrid& grid, double time_tol = 1e-9,
                                 const std::string& source = "<stream>");

// Writes through a temporary file and renames it into place.
void write_file_atomically(const std::filesystem::path& path, const std::string& contents);

}  // namespace varid

#endif  // VARID_CSV_HPP_
