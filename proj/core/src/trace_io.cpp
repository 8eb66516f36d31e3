#include "sonopose/trace_io.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "sonopose/csv.hpp"

namespace sonopose {

namespace {

const std::vector<std::string> kImuHeader = {"t",  "ax", "ay", "az",
                                             "gx", "gy", "gz"};
const std::vector<std::string> kPoseHeader = {"t",  "px", "py", "pz",
                                              "qw", "qx", "qy", "qz"};

double cell(const CsvTable& table, const std::filesystem::path& path,
            std::size_t row, std::size_t col) {
  try {
    return parse_double(table.rows[row][col]);
  } catch (const std::invalid_argument& e) {
    throw ParseError(path.string() + ":" + std::to_string(row + 2) + ": " +
                     e.what());
  }
}

std::vector<Pose> read_poses(const std::filesystem::path& path) {
  const CsvTable table = read_csv(path, kPoseHeader);
  std::vector<Pose> out;
  out.reserve(table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    Pose p;
    p.t = cell(table, path, r, 0);
    p.position = Vec3(cell(table, path, r, 1), cell(table, path, r, 2),
                      cell(table, path, r, 3));
    p.orientation = Quat(cell(table, path, r, 4), cell(table, path, r, 5),
                         cell(table, path, r, 6), cell(table, path, r, 7));
    if (!out.empty() && p.t <= out.back().t)
      throw ValidationError(path.string() + ":" + std::to_string(r + 2) +
                            ": timestamp does not increase");
    out.push_back(p);
  }
  return out;
}

void write_poses(const std::vector<Pose>& poses,
                 const std::filesystem::path& path) {
  CsvWriter w(path, kPoseHeader);
  for (const auto& p : poses) {
    w.row({format_double(p.t), format_double(p.position.x()),
           format_double(p.position.y()), format_double(p.position.z()),
           format_double(p.orientation.w()), format_double(p.orientation.x()),
           format_double(p.orientation.y()), format_double(p.orientation.z())});
  }
  w.close();
}

double infer_rate(const std::vector<double>& ts) {
  if (ts.size() < 2) return 1.0;
  return static_cast<double>(ts.size() - 1) / (ts.back() - ts.front());
}

}  // namespace

void save_trace(const Trace& trace, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    CsvWriter w(dir / "imu.csv", kImuHeader);
    for (const auto& s : trace.imu) {
      w.row({format_double(s.t), format_double(s.accel.x()),
             format_double(s.accel.y()), format_double(s.accel.z()),
             format_double(s.gyro.x()), format_double(s.gyro.y()),
             format_double(s.gyro.z())});
    }
    w.close();
  }
  write_poses(trace.fixes, dir / "fixes.csv");
  write_poses(trace.ground_truth, dir / "gt.csv");

  nlohmann::json meta;
  meta["imu_rate"] = trace.imu_rate;
  meta["fix_rate"] = trace.fix_rate;
  std::ofstream out(dir / "meta.json");
  out << meta.dump(2) << '\n';
  if (!out) throw std::runtime_error("cannot write " + (dir / "meta.json").string());
}

Trace load_trace(const std::filesystem::path& dir) {
  Trace trace;
  const auto imu_path = dir / "imu.csv";
  const CsvTable table = read_csv(imu_path, kImuHeader);
  trace.imu.reserve(table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    ImuSample s;
    s.t = cell(table, imu_path, r, 0);
    s.accel = Vec3(cell(table, imu_path, r, 1), cell(table, imu_path, r, 2),
                   cell(table, imu_path, r, 3));
    s.gyro = Vec3(cell(table, imu_path, r, 4), cell(table, imu_path, r, 5),
                  cell(table, imu_path, r, 6));
    if (!trace.imu.empty() && s.t <= trace.imu.back().t)
      throw ValidationError(imu_path.string() + ":" + std::to_string(r + 2) +
                            ": timestamp does not increase");
    trace.imu.push_back(s);
  }
  if (std::filesystem::exists(dir / "fixes.csv"))
    trace.fixes = read_poses(dir / "fixes.csv");
  if (std::filesystem::exists(dir / "gt.csv"))
    trace.ground_truth = read_poses(dir / "gt.csv");

  const auto meta_path = dir / "meta.json";
  if (std::filesystem::exists(meta_path)) {
    std::ifstream in(meta_path);
    nlohmann::json meta = nlohmann::json::parse(in);
    trace.imu_rate = meta.at("imu_rate").get<double>();
    trace.fix_rate = meta.at("fix_rate").get<double>();
  } else {
    std::vector<double> imu_ts, fix_ts;
    for (const auto& s : trace.imu) imu_ts.push_back(s.t);
    for (const auto& p : trace.fixes) fix_ts.push_back(p.t);
    trace.imu_rate = infer_rate(imu_ts);
    trace.fix_rate = trace.fixes.size() >= 2 ? infer_rate(fix_ts) : trace.imu_rate;
  }
  return trace;
}

Trace load_euroc_imu(const std::filesystem::path& path) {
  std::filesystem::path file = path;
  if (std::filesystem::is_directory(file)) file /= "data.csv";
  std::ifstream in(file);
  if (!in) throw ParseError(file.string() + ":0: cannot open");

  Trace trace;
  std::string line;
  std::size_t lineno = 0;
  std::int64_t ns0 = 0;
  bool have_first = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;  // EuRoC comment header
    std::vector<std::string> cells;
    {
      std::string cur;
      for (char c : line) {
        if (c == ',') {
          cells.push_back(cur);
          cur.clear();
        } else if (c != '\r' && c != ' ') {
          cur.push_back(c);
        }
      }
      cells.push_back(cur);
    }
    if (cells.size() != 7)
      throw ParseError(file.string() + ":" + std::to_string(lineno) +
                       ": expected 7 columns, got " + std::to_string(cells.size()));
    std::int64_t ns = 0;
    try {
      ns = std::stoll(cells[0]);
      if (!have_first) {
        ns0 = ns;
        have_first = true;
      }
      ImuSample s;
      s.t = static_cast<double>(ns - ns0) * 1e-9;
      // EuRoC stores angular rate before linear acceleration.
      s.gyro = Vec3(parse_double(cells[1]), parse_double(cells[2]),
                    parse_double(cells[3]));
      s.accel = Vec3(parse_double(cells[4]), parse_double(cells[5]),
                     parse_double(cells[6]));
      if (!trace.imu.empty() && s.t <= trace.imu.back().t)
        throw ValidationError(file.string() + ":" + std::to_string(lineno) +
                              ": timestamp does not increase");
      trace.imu.push_back(s);
    } catch (const std::invalid_argument& e) {
      throw ParseError(file.string() + ":" + std::to_string(lineno) + ": " +
                       e.what());
    }
  }
  if (trace.imu.empty())
    throw ParseError(file.string() + ":0: no samples");
  std::vector<double> ts;
  for (const auto& s : trace.imu) ts.push_back(s.t);
  trace.imu_rate = infer_rate(ts);
  trace.fix_rate = trace.imu_rate;
  return trace;
}

}  // namespace sonopose
