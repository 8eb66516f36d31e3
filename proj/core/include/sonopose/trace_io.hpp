#pragma once

#include <filesystem>

#include "sonopose/trace.hpp"

namespace sonopose {

/// Writes `imu.csv`, `fixes.csv`, `gt.csv`, and `meta.json` (rates) under
/// `dir`, creating it if needed. All doubles use shortest round-trip
/// formatting, so load_trace(save_trace(x)) == x bit-exactly.
void save_trace(const Trace& trace, const std::filesystem::path& dir);

/// Loads a trace saved by save_trace. Without meta.json the rates are
/// inferred from timestamp spacing. Throws ParseError on malformed rows
/// (message cites file and line) and ValidationError on non-monotone
/// timestamps (message cites the line).
Trace load_trace(const std::filesystem::path& dir);

/// Imports an inertial log in the EuRoC MAV layout: `data.csv` with columns
/// timestamp [ns], gyro x/y/z [rad/s], accel x/y/z [m/s^2]. Timestamps are
/// converted to seconds relative to the first sample; fixes and ground truth
/// are left empty. `path` may be the csv file or its directory.
Trace load_euroc_imu(const std::filesystem::path& path);

}  // namespace sonopose
