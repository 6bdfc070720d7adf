#include "mmcplace/scenario.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <tuple>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

namespace mmcplace {

namespace {

constexpr double kEarthRadius = 6371008.8;
constexpr double kDeg = std::numbers::pi / 180.0;
constexpr int kDirections[6][2] = {{1, 0}, {1, -1}, {0, -1}, {-1, 0}, {-1, 1}, {0, 1}};

std::mt19937_64 stream_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

template <class T>
bool parse_number(std::string_view s, T& out) {
  s = trim(s);
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && p == s.data() + s.size();
}

bool valid_position(double lat, double lon) {
  return std::isfinite(lat) && std::isfinite(lon) && std::abs(lat) <= 90.0 &&
         std::abs(lon) <= 180.0;
}

}  // namespace

int axial_distance(int q1, int r1, int q2, int r2) {
  const int dq = q1 - q2, dr = r1 - r2;
  return (std::abs(dq) + std::abs(dr) + std::abs(dq + dr)) / 2;
}

double haversine_m(double lat1, double lon1, double lat2, double lon2) {
  const double dlat = (lat2 - lat1) * kDeg, dlon = (lon2 - lon1) * kDeg;
  const double a = std::sin(dlat / 2) * std::sin(dlat / 2) +
                   std::cos(lat1 * kDeg) * std::cos(lat2 * kDeg) * std::sin(dlon / 2) *
                       std::sin(dlon / 2);
  return 2.0 * kEarthRadius * std::asin(std::min(1.0, std::sqrt(a)));
}

HexTopology HexTopology::build(int cells, double anchor_lat, double anchor_lon, double spacing) {
  if (cells < 1) throw std::invalid_argument("topology needs at least one cell");
  if (!(spacing > 0)) throw std::invalid_argument("cell spacing must be positive");
  if (!valid_position(anchor_lat, anchor_lon)) throw std::invalid_argument("invalid anchor");
  HexTopology topo;
  topo.anchor_lat_ = anchor_lat;
  topo.anchor_lon_ = anchor_lon;
  topo.spacing_ = spacing;

  int ring = 0;
  while (1 + 3 * ring * (ring + 1) < cells) ++ring;
  std::vector<std::array<int, 3>> pos;  // (distance, r, q)
  for (int q = -ring; q <= ring; ++q)
    for (int r = -ring; r <= ring; ++r)
      if (axial_distance(q, r, 0, 0) <= ring) pos.push_back({axial_distance(q, r, 0, 0), r, q});
  std::sort(pos.begin(), pos.end());
  pos.resize(cells);
  std::sort(pos.begin(), pos.end(), [](const auto& a, const auto& b) {
    return std::tie(a[1], a[2]) < std::tie(b[1], b[2]);
  });

  const double size = topo.radius();
  for (int i = 0; i < cells; ++i) {
    HexCell c;
    c.id = i + 1;
    c.q = pos[i][2];
    c.r = pos[i][1];
    const double x = size * 1.5 * c.q;
    const double y = size * std::sqrt(3.0) * (c.r + c.q / 2.0);
    std::tie(c.lat, c.lon) = topo.to_latlon(x, y);
    topo.cells_.push_back(c);
  }
  topo.dist_.resize(static_cast<std::size_t>(cells) * cells);
  for (int a = 0; a < cells; ++a)
    for (int b = 0; b < cells; ++b)
      topo.dist_[a * cells + b] = axial_distance(topo.cells_[a].q, topo.cells_[a].r,
                                                 topo.cells_[b].q, topo.cells_[b].r);
  return topo;
}

double HexTopology::radius() const { return spacing_ / std::sqrt(3.0); }

const HexCell& HexTopology::cell(int id) const {
  if (id < 1 || id > cell_count()) throw std::out_of_range(fmt::format("unknown cell {}", id));
  return cells_[id - 1];
}

std::optional<int> HexTopology::cell_at(int q, int r) const {
  for (const HexCell& c : cells_)
    if (c.q == q && c.r == r) return c.id;
  return std::nullopt;
}

std::vector<int> HexTopology::neighbors(int id) const {
  const HexCell& c = cell(id);
  std::vector<int> out;
  for (const auto& d : kDirections)
    if (auto n = cell_at(c.q + d[0], c.r + d[1])) out.push_back(*n);
  std::sort(out.begin(), out.end());
  return out;
}

int HexTopology::hex_distance(int a, int b) const {
  const int n = cell_count();
  if (a < 1 || a > n) throw std::out_of_range(fmt::format("unknown cell {}", a));
  if (b < 1 || b > n) throw std::out_of_range(fmt::format("unknown cell {}", b));
  return dist_[(a - 1) * n + (b - 1)];
}

std::optional<int> HexTopology::locate(double lat, double lon) const {
  if (!valid_position(lat, lon)) return std::nullopt;
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (const HexCell& c : cells_) {
    const double d = haversine_m(lat, lon, c.lat, c.lon);
    if (d < best_d - 1e-9) {
      best_d = d;
      best = c.id;
    }
  }
  if (best == 0 || best_d > 1.01 * radius()) return std::nullopt;
  return best;
}

std::pair<double, double> HexTopology::to_meters(double lat, double lon) const {
  return {(lon - anchor_lon_) * kDeg * kEarthRadius * std::cos(anchor_lat_ * kDeg),
          (lat - anchor_lat_) * kDeg * kEarthRadius};
}

std::pair<double, double> HexTopology::to_latlon(double x, double y) const {
  return {anchor_lat_ + y / kEarthRadius / kDeg,
          anchor_lon_ + x / (kEarthRadius * std::cos(anchor_lat_ * kDeg)) / kDeg};
}

std::optional<int> latlon_to_cell(const HexTopology& topology, double lat, double lon) {
  return topology.locate(lat, lon);
}

void MobilityTrace::sort() {
  std::sort(records.begin(), records.end(), [](const TraceRecord& a, const TraceRecord& b) {
    return std::tie(a.user, a.timestamp, a.lat, a.lon) <
           std::tie(b.user, b.timestamp, b.lat, b.lon);
  });
}

std::vector<std::string> MobilityTrace::users() const {
  std::vector<std::string> out;
  for (const TraceRecord& r : records) out.push_back(r.user);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

MobilityTrace parse_trace_csv(std::istream& in) {
  MobilityTrace trace;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    const std::string_view view = trim(line);
    if (view.empty()) continue;
    if (first) {
      first = false;
      if (view.starts_with("user_id")) continue;
    }
    std::vector<std::string_view> f;
    std::size_t pos = 0;
    while (true) {
      const auto comma = view.find(',', pos);
      f.push_back(view.substr(pos, comma == std::string_view::npos ? comma : comma - pos));
      if (comma == std::string_view::npos) break;
      pos = comma + 1;
    }
    TraceRecord rec;
    if (f.size() != 4 || trim(f[0]).empty() || !parse_number(f[1], rec.timestamp) ||
        !parse_number(f[2], rec.lat) || !parse_number(f[3], rec.lon) ||
        !valid_position(rec.lat, rec.lon)) {
      ++trace.malformed;
      continue;
    }
    rec.user = std::string(trim(f[0]));
    trace.records.push_back(std::move(rec));
  }
  trace.sort();
  return trace;
}

MobilityTrace read_trace_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw TraceIoError(fmt::format("cannot open trace file {}", path.string()));
  MobilityTrace trace = parse_trace_csv(in);
  if (in.bad()) throw TraceIoError(fmt::format("error reading trace file {}", path.string()));
  if (trace.malformed > 0)
    spdlog::warn("{}: skipped {} malformed records", path.string(), trace.malformed);
  return trace;
}

void write_trace_csv(std::ostream& out, const MobilityTrace& trace) {
  out << "user_id,timestamp,lat,lon\n";
  for (const TraceRecord& r : trace.records)
    out << fmt::format("{},{},{},{}\n", r.user, r.timestamp, r.lat, r.lon);
}

void write_trace_csv(const std::filesystem::path& path, const MobilityTrace& trace) {
  std::ofstream out(path);
  if (!out) throw TraceIoError(fmt::format("cannot write trace file {}", path.string()));
  write_trace_csv(out, trace);
  if (!out) throw TraceIoError(fmt::format("error writing trace file {}", path.string()));
}

MobilityTrace parse_cabspotting(std::istream& in, const std::string& user) {
  MobilityTrace trace;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    std::istringstream fields(line);
    std::string lat, lon, occ, ts, extra;
    TraceRecord rec;
    rec.user = user;
    int occupancy = 0;
    if (!(fields >> lat >> lon >> occ >> ts) || (fields >> extra) ||
        !parse_number(lat, rec.lat) || !parse_number(lon, rec.lon) ||
        !parse_number(occ, occupancy) || !parse_number(ts, rec.timestamp) ||
        !valid_position(rec.lat, rec.lon)) {
      ++trace.malformed;
      continue;
    }
    trace.records.push_back(std::move(rec));
  }
  trace.sort();
  return trace;
}

MobilityTrace convert_cabspotting_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec))
    throw TraceIoError(fmt::format("trace directory {} not found", dir.string()));
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir, ec)) {
    const auto& p = entry.path();
    if (entry.is_regular_file() && p.extension() == ".txt" &&
        !p.filename().string().starts_with("_"))
      files.push_back(p);
  }
  if (ec) throw TraceIoError(fmt::format("cannot list {}: {}", dir.string(), ec.message()));
  std::sort(files.begin(), files.end());

  MobilityTrace merged;
  for (const auto& p : files) {
    std::ifstream in(p);
    if (!in) throw TraceIoError(fmt::format("cannot open {}", p.string()));
    std::string user = p.stem().string();
    if (user.starts_with("new_")) user.erase(0, 4);
    MobilityTrace one = parse_cabspotting(in, user);
    merged.malformed += one.malformed;
    merged.records.insert(merged.records.end(), std::make_move_iterator(one.records.begin()),
                          std::make_move_iterator(one.records.end()));
  }
  merged.sort();
  return merged;
}

int UserActivity::active_count(int slot) const {
  int n = 0;
  for (int u = 0; u < user_count(); ++u) n += active(u, slot);
  return n;
}

UserActivity ingest_trace(const MobilityTrace& trace, const HexTopology& topology,
                          const IngestOptions& options) {
  if (options.slot_seconds < 1) throw std::invalid_argument("slot length must be positive");
  if (options.staleness < 0) throw std::invalid_argument("staleness must be non-negative");
  UserActivity act;
  act.slot_seconds = options.slot_seconds;
  act.users = trace.users();
  if (trace.records.empty()) {
    act.start = options.start.value_or(0);
    act.slots = options.slots;
    act.cells.assign(static_cast<std::size_t>(act.slots) * act.users.size(), 0);
    return act;
  }

  MobilityTrace sorted = trace;
  sorted.sort();
  std::int64_t first = sorted.records.front().timestamp, last = first;
  for (const TraceRecord& r : sorted.records) {
    first = std::min(first, r.timestamp);
    last = std::max(last, r.timestamp);
  }
  act.start = options.start.value_or(first);
  act.slots = options.slots > 0
                  ? options.slots
                  : static_cast<int>(std::max<std::int64_t>(0, last - act.start) /
                                     options.slot_seconds) + 1;
  const std::size_t U = act.users.size();
  act.cells.assign(static_cast<std::size_t>(act.slots) * U, 0);

  std::size_t i = 0;
  for (std::size_t u = 0; u < U; ++u) {
    const std::size_t begin = i;
    while (i < sorted.records.size() && sorted.records[i].user == act.users[u]) ++i;
    std::vector<std::optional<int>> located(i - begin);
    for (std::size_t j = begin; j < i; ++j)
      located[j - begin] = topology.locate(sorted.records[j].lat, sorted.records[j].lon);
    std::size_t latest = begin;  // one past the latest record at or before the slot time
    for (int s = 1; s <= act.slots; ++s) {
      const std::int64_t now = act.start + static_cast<std::int64_t>(s - 1) * options.slot_seconds;
      while (latest < i && sorted.records[latest].timestamp <= now) ++latest;
      if (latest == begin) continue;
      const TraceRecord& rec = sorted.records[latest - 1];
      const auto& cell = located[latest - 1 - begin];
      if (now - rec.timestamp <= options.staleness && cell)
        act.cells[static_cast<std::size_t>(s - 1) * U + u] = *cell;
    }
  }
  return act;
}

std::vector<ServiceInstance> generate_service_demand(const UserActivity& activity,
                                                     const DemandOptions& options) {
  if (!(options.mean_on > 0) || !(options.mean_off > 0))
    throw std::invalid_argument("on/off means must be positive");
  struct Run {
    int arrival, last, user;
  };
  std::vector<Run> runs;
  const int S = activity.slots;
  for (int u = 0; u < activity.user_count(); ++u) {
    auto rng = stream_rng(options.seed, static_cast<std::uint64_t>(u));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::exponential_distribution<double> on(1.0 / options.mean_on), off(1.0 / options.mean_off);
    auto draw = [&](bool state) {
      const double d = state ? on(rng) : off(rng);
      return std::max(1, static_cast<int>(std::lround(d)));
    };
    bool state = unit(rng) < options.mean_on / (options.mean_on + options.mean_off);
    int remaining = draw(state);
    int open = 0;
    for (int s = 1; s <= S; ++s) {
      const bool serving = state && activity.active(u, s);
      if (serving && open == 0) open = s;
      if (!serving && open != 0) {
        runs.push_back({open, s - 1, u});
        open = 0;
      }
      if (--remaining == 0) {
        state = !state;
        remaining = draw(state);
      }
    }
    if (open != 0) runs.push_back({open, S + 1, u});
  }
  std::sort(runs.begin(), runs.end(), [](const Run& a, const Run& b) {
    return std::tie(a.arrival, a.user) < std::tie(b.arrival, b.user);
  });
  std::vector<ServiceInstance> out;
  out.reserve(runs.size());
  for (const Run& r : runs) {
    ServiceInstance inst;
    inst.id = static_cast<int>(out.size()) + 1;
    inst.arrival_slot = r.arrival;
    if (r.last <= S) inst.departure_slot = r.last;
    inst.user = r.user;
    out.push_back(inst);
  }
  return out;
}

std::vector<SyntheticEvent> generate_synthetic(int n_arrivals, std::uint64_t seed,
                                               double departure_probability, double demand_low,
                                               double demand_high) {
  if (n_arrivals < 0) throw std::invalid_argument("arrival count must be non-negative");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> demand(demand_low, demand_high);
  std::vector<SyntheticEvent> events;
  std::vector<int> running;
  for (int n = 1; n <= n_arrivals; ++n) {
    if (unit(rng) < departure_probability && !running.empty()) {
      std::uniform_int_distribution<std::size_t> pick(0, running.size() - 1);
      const std::size_t j = pick(rng);
      events.push_back({SyntheticEvent::Kind::Departure, running[j], 0.0});
      running[j] = running.back();
      running.pop_back();
    }
    events.push_back({SyntheticEvent::Kind::Arrival, n, demand(rng)});
    running.push_back(n);
  }
  return events;
}

MobilityTrace generate_taxi_trace(const HexTopology& topology, const MobilityOptions& options) {
  if (options.users < 0 || options.slots < 0) throw std::invalid_argument("negative size");
  if (!(options.speed_min > 0) || options.speed_max < options.speed_min)
    throw std::invalid_argument("invalid speed range");
  int ring = 0;
  for (const HexCell& c : topology.cells()) ring = std::max(ring, axial_distance(c.q, c.r, 0, 0));
  const double disc = options.area_scale * topology.spacing() * (ring + 0.5);
  const double begin = static_cast<double>(options.start - 600);
  const double end = static_cast<double>(options.start) +
                     static_cast<double>(options.slots) * options.slot_seconds;

  MobilityTrace trace;
  const int width = static_cast<int>(std::to_string(std::max(0, options.users - 1)).size());
  for (int u = 0; u < options.users; ++u) {
    auto rng = stream_rng(options.seed, 0x7a11ull << 32 | static_cast<std::uint64_t>(u));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_real_distribution<double> speed(options.speed_min, options.speed_max);
    std::exponential_distribution<double> pause(1.0 / options.pause_mean);
    std::exponential_distribution<double> report(1.0 / options.report_mean);
    std::exponential_distribution<double> silence(1.0 / options.silence_mean);
    auto waypoint = [&] {
      const double rad = disc * std::sqrt(unit(rng)), ang = 2 * std::numbers::pi * unit(rng);
      return std::pair{rad * std::cos(ang), rad * std::sin(ang)};
    };
    // Current leg: move from `from` to `to` over [t_start, t_arrive], then wait until t_leave.
    auto from = waypoint(), to = waypoint();
    double t_start = begin;
    auto plan = [&](double t0) {
      const double len = std::hypot(to.first - from.first, to.second - from.second);
      const double arrive = t0 + len / speed(rng);
      return std::pair{arrive, arrive + pause(rng)};
    };
    auto [t_arrive, t_leave] = plan(t_start);
    const std::string name = fmt::format("taxi{:0{}}", u, width);

    for (double t = begin + report(rng); t < end; t += std::max(1.0, report(rng))) {
      if (unit(rng) < options.silence_probability) {
        t += silence(rng);
        continue;
      }
      while (t >= t_leave) {
        from = to;
        to = waypoint();
        t_start = t_leave;
        std::tie(t_arrive, t_leave) = plan(t_start);
      }
      const double f = t >= t_arrive ? 1.0 : (t - t_start) / (t_arrive - t_start);
      const double x = from.first + f * (to.first - from.first);
      const double y = from.second + f * (to.second - from.second);
      const auto [lat, lon] = topology.to_latlon(x, y);
      trace.records.push_back({name, static_cast<std::int64_t>(std::floor(t)), lat, lon});
    }
  }
  trace.sort();
  return trace;
}

CellDistances::CellDistances(const HexTopology& topology, const UserActivity& activity)
    : topology_(topology), activity_(activity) {
  const std::size_t U = activity.users.size();
  known_.assign(static_cast<std::size_t>(activity.slots) * U, 0);
  for (int s = 1; s <= activity.slots; ++s)
    for (std::size_t u = 0; u < U; ++u) {
      const std::size_t idx = static_cast<std::size_t>(s - 1) * U + u;
      const int c = activity.cells[idx];
      known_[idx] = c != 0 ? c : (s > 1 ? known_[idx - U] : 0);
    }
}

int CellDistances::user_cell(int user, int t) const {
  if (user < 0 || user >= activity_.user_count() || activity_.slots == 0) return 0;
  t = std::clamp(t, 1, activity_.slots);
  return known_[static_cast<std::size_t>(t - 1) * activity_.users.size() + user];
}

double CellDistances::user_distance(const ServiceInstance& instance, CloudId k, int t) const {
  if (k == topology_.backend()) return 0.0;
  const int cell = user_cell(instance.user, t);
  return cell == 0 ? 0.0 : topology_.hex_distance(k, cell);
}

double CellDistances::cloud_distance(CloudId k, CloudId l) const {
  if (k == topology_.backend() || l == topology_.backend()) return 0.0;
  return topology_.hex_distance(k, l);
}

DistanceParams distance_params(std::span<const CloudId> prev, std::span<const CloudId> now,
                               std::span<const int> user_cells, const HexTopology& topology) {
  if (prev.size() != now.size() || user_cells.size() != now.size())
    throw std::invalid_argument("distance_params: row sizes differ");
  const int K = topology.clouds();
  const CloudId k0 = topology.backend();
  DistanceParams out{std::vector<double>(K, 0.0),
                     std::vector<double>(static_cast<std::size_t>(K) * K, 0.0)};
  for (std::size_t i = 0; i < now.size(); ++i) {
    const CloudId k = now[i];
    if (k != kNotRunning && k != k0 && user_cells[i] != 0)
      out.r[k - 1] += topology.hex_distance(k, user_cells[i]);
    const CloudId from = prev[i];
    if (from != kNotRunning && k != kNotRunning && from != k && from != k0 && k != k0)
      out.s[(from - 1) * K + (k - 1)] += topology.hex_distance(from, k);
  }
  return out;
}

}  // namespace mmcplace
