#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mmcplace/cost.hpp"
#include "mmcplace/model.hpp"

namespace mmcplace {

inline constexpr double kAnchorLat = 37.762;
inline constexpr double kAnchorLon = -122.43;

struct HexCell {
  int id = 0;  // 1-based, equal to the MMC's CloudId
  int q = 0;
  int r = 0;
  double lat = 0.0;
  double lon = 0.0;
};

/// Axial hex metric (|dq| + |dr| + |dq + dr|) / 2.
int axial_distance(int q1, int r1, int q2, int r2);

/// Flat-top hexagonal MMC grid. Cells are the `cells` axial positions closest
/// to the origin (ties by r, then q), numbered 1..N row-major by (r, q).
/// The backend cloud is N + 1.
class HexTopology {
 public:
  static HexTopology build(int cells, double anchor_lat = kAnchorLat,
                           double anchor_lon = kAnchorLon, double spacing = 1000.0);

  int cell_count() const { return static_cast<int>(cells_.size()); }
  int clouds() const { return cell_count() + 1; }
  CloudId backend() const { return cell_count() + 1; }
  double spacing() const { return spacing_; }
  /// Center-to-vertex distance of one cell.
  double radius() const;
  double anchor_lat() const { return anchor_lat_; }
  double anchor_lon() const { return anchor_lon_; }

  const HexCell& cell(int id) const;
  const std::vector<HexCell>& cells() const { return cells_; }
  std::optional<int> cell_at(int q, int r) const;
  std::vector<int> neighbors(int id) const;

  /// Hop count between two cells; throws std::out_of_range for unknown ids.
  int hex_distance(int a, int b) const;
  /// Nearest cell by great-circle distance, lower id on ties; nullopt when the
  /// nearest center is farther than 1.01 cell radii.
  std::optional<int> locate(double lat, double lon) const;

  /// Local equirectangular projection around the anchor, in meters (x east, y north).
  std::pair<double, double> to_meters(double lat, double lon) const;
  std::pair<double, double> to_latlon(double x, double y) const;

 private:
  std::vector<HexCell> cells_;
  std::vector<int> dist_;  // dense N x N hop table
  double anchor_lat_ = kAnchorLat;
  double anchor_lon_ = kAnchorLon;
  double spacing_ = 1000.0;
};

std::optional<int> latlon_to_cell(const HexTopology& topology, double lat, double lon);

/// Great-circle distance in meters.
double haversine_m(double lat1, double lon1, double lat2, double lon2);

class TraceIoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TraceRecord {
  std::string user;
  std::int64_t timestamp = 0;
  double lat = 0.0;
  double lon = 0.0;

  bool operator==(const TraceRecord&) const = default;
};

/// Records sorted by (user, timestamp, lat, lon).
struct MobilityTrace {
  std::vector<TraceRecord> records;
  std::size_t malformed = 0;

  void sort();
  std::vector<std::string> users() const;
};

MobilityTrace parse_trace_csv(std::istream& in);
MobilityTrace read_trace_csv(const std::filesystem::path& path);
void write_trace_csv(std::ostream& out, const MobilityTrace& trace);
void write_trace_csv(const std::filesystem::path& path, const MobilityTrace& trace);

/// One taxi file: whitespace-separated `lat lon occupancy timestamp` lines.
MobilityTrace parse_cabspotting(std::istream& in, const std::string& user);
/// Merges every `*.txt` file of a directory (files starting with '_' skipped).
/// The user name is the file stem without a leading "new_".
MobilityTrace convert_cabspotting_dir(const std::filesystem::path& dir);

/// Per-slot user activity: cell id when active, 0 otherwise.
struct UserActivity {
  std::vector<std::string> users;
  int slots = 0;
  std::int64_t start = 0;
  int slot_seconds = 60;
  std::vector<int> cells;  // [(slot - 1) * users + user]

  int user_count() const { return static_cast<int>(users.size()); }
  int cell_at(int user, int slot) const {
    return cells[static_cast<std::size_t>(slot - 1) * users.size() + user];
  }
  bool active(int user, int slot) const { return cell_at(user, slot) != 0; }
  int active_count(int slot) const;
};

struct IngestOptions {
  int slot_seconds = 60;
  int staleness = 600;
  /// Unix time of slot 1; defaults to the first record.
  std::optional<std::int64_t> start;
  /// Number of slots; 0 covers the whole trace.
  int slots = 0;
};

/// Slot s samples time start + (s - 1) * slot_seconds. A user is active when its
/// latest record at or before that time is at most `staleness` seconds old and
/// falls inside coverage; it is then attached to that record's cell.
UserActivity ingest_trace(const MobilityTrace& trace, const HexTopology& topology,
                          const IngestOptions& options = {});

struct DemandOptions {
  double mean_on = 50.0;   // slots
  double mean_off = 10.0;  // slots
  std::uint64_t seed = 1;
};

/// Alternating exponential on/off periods per user, each rounded to at least one
/// slot. An instance runs over every maximal stretch where the user is both on
/// and active. Demands are 1, lifetimes unbounded, ids ordered by (arrival, user).
std::vector<ServiceInstance> generate_service_demand(const UserActivity& activity,
                                                     const DemandOptions& options = {});

struct SyntheticEvent {
  enum class Kind { Arrival, Departure };
  Kind kind = Kind::Arrival;
  int instance = 0;
  double demand = 0.0;

  bool operator==(const SyntheticEvent&) const = default;
};

/// Single-slot arrival stream: before each arrival, with probability 0.1 a uniformly
/// chosen running instance departs. Demands are U[0.5, 1.5].
std::vector<SyntheticEvent> generate_synthetic(int n_arrivals, std::uint64_t seed,
                                               double departure_probability = 0.1,
                                               double demand_low = 0.5, double demand_high = 1.5);

struct MobilityOptions {
  int users = 10;
  int slots = 200;
  int slot_seconds = 60;
  std::int64_t start = 1212192000;  // 2008-05-31 00:00 UTC
  double speed_min = 3.0;           // m/s
  double speed_max = 10.0;
  double pause_mean = 300.0;        // s at each waypoint
  double report_mean = 60.0;        // s between location updates
  double silence_probability = 0.01;
  double silence_mean = 900.0;      // s without updates
  double area_scale = 1.15;         // waypoint disc radius relative to the grid
  std::uint64_t seed = 1;
};

/// Taxi-like random-waypoint mobility over the grid area.
MobilityTrace generate_taxi_trace(const HexTopology& topology, const MobilityOptions& options);

/// Hop distances from a scenario: users sit at their current cell, or the last
/// cell they were seen in while inactive. The backend is at distance 0 from everything.
class CellDistances final : public DistanceProvider {
 public:
  CellDistances(const HexTopology& topology, const UserActivity& activity);

  double user_distance(const ServiceInstance& instance, CloudId k, int t) const override;
  double cloud_distance(CloudId k, CloudId l) const override;

  /// Cell of a user at slot t after the last-known fallback, 0 if never seen.
  int user_cell(int user, int t) const;

 private:
  const HexTopology& topology_;
  const UserActivity& activity_;
  std::vector<int> known_;  // last-known cell per (slot, user)
};

struct DistanceParams {
  std::vector<double> r;  // [k-1]
  std::vector<double> s;  // [(k-1) * K + (l-1)]
};

/// r_k = sum of hops between k and the user cells of instances at k;
/// s_kl = hops(k, l) times the number of k -> l moves. Backend entries stay zero.
/// user_cells holds one cell per column (0 = unknown, contributes nothing).
DistanceParams distance_params(std::span<const CloudId> prev, std::span<const CloudId> now,
                               std::span<const int> user_cells, const HexTopology& topology);

}  // namespace mmcplace
