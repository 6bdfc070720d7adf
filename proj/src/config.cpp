#include "mmcplace/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

namespace mmcplace {

namespace {

namespace pt = boost::property_tree;

struct BadValue {
  std::string message;
};

std::string trimmed(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return {};
  return s.substr(a, s.find_last_not_of(" \t\r\n") - a + 1);
}

template <class T>
T parse_value(const std::string& raw) {
  const std::string s = trimmed(raw);
  if constexpr (std::is_same_v<T, std::string>) {
    return s;
  } else if constexpr (std::is_same_v<T, NoiseShape>) {
    try {
      return parse_noise_shape(s);
    } catch (const std::invalid_argument& e) {
      throw BadValue{e.what()};
    }
  } else if constexpr (std::is_same_v<T, std::vector<double>>) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_value<double>(item));
    return out;
  } else {
    T v{};
    const char* b = s.data();
    const char* e = s.data() + s.size();
    if (b != e && *b == '+') ++b;
    const auto [p, ec] = std::from_chars(b, e, v);
    if (s.empty() || ec != std::errc() || p != e)
      throw BadValue{fmt::format("cannot parse '{}' as a number", s)};
    return v;
  }
}

template <class T>
std::string format_value(const T& v) {
  if constexpr (std::is_same_v<T, std::string>) {
    return v;
  } else if constexpr (std::is_same_v<T, NoiseShape>) {
    return to_string(v);
  } else if constexpr (std::is_same_v<T, std::vector<double>>) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + fmt::format("{}", v[i]);
    return out;
  } else {
    return fmt::format("{}", v);
  }
}

struct Field {
  std::string section;
  std::string key;
  std::function<std::string(const Config&)> get;
  std::function<void(Config&, const std::string&)> set;
};

template <class S, class T>
Field field(const char* section, const char* key, S Config::*sec, T S::*member) {
  return {section, key, [=](const Config& c) { return format_value(c.*sec.*member); },
          [=](Config& c, const std::string& v) { c.*sec.*member = parse_value<T>(v); }};
}

const std::vector<Field>& fields() {
  using C = Config;
  static const std::vector<Field> table = {
      field("scenario", "cells", &C::scenario, &ScenarioSection::cells),
      field("scenario", "anchor_lat", &C::scenario, &ScenarioSection::anchor_lat),
      field("scenario", "anchor_lon", &C::scenario, &ScenarioSection::anchor_lon),
      field("scenario", "spacing", &C::scenario, &ScenarioSection::spacing),
      field("scenario", "slots", &C::scenario, &ScenarioSection::slots),
      field("scenario", "slot_seconds", &C::scenario, &ScenarioSection::slot_seconds),
      field("scenario", "staleness", &C::scenario, &ScenarioSection::staleness),
      field("scenario", "start", &C::scenario, &ScenarioSection::start),
      field("scenario", "trace", &C::scenario, &ScenarioSection::trace),
      field("scenario", "users", &C::scenario, &ScenarioSection::users),
      field("scenario", "mobility_seed", &C::scenario, &ScenarioSection::mobility_seed),
      field("scenario", "speed_min", &C::scenario, &ScenarioSection::speed_min),
      field("scenario", "speed_max", &C::scenario, &ScenarioSection::speed_max),
      field("scenario", "pause_mean", &C::scenario, &ScenarioSection::pause_mean),
      field("scenario", "report_mean", &C::scenario, &ScenarioSection::report_mean),
      field("scenario", "a_max", &C::scenario, &ScenarioSection::a_max),
      field("scenario", "b_max", &C::scenario, &ScenarioSection::b_max),
      field("scenario", "max_departures", &C::scenario, &ScenarioSection::max_departures),
      field("demand", "mean_on", &C::demand, &DemandSection::mean_on),
      field("demand", "mean_off", &C::demand, &DemandSection::mean_off),
      field("demand", "local_demand", &C::demand, &DemandSection::local_demand),
      field("demand", "migration_demand", &C::demand, &DemandSection::migration_demand),
      field("demand", "max_lifetime", &C::demand, &DemandSection::max_lifetime),
      field("cost", "capacity", &C::cost, &CostSection::capacity),
      field("cost", "backend_local", &C::cost, &CostSection::backend_local),
      field("cost", "backend_migration", &C::cost, &CostSection::backend_migration),
      field("cost", "distance_local", &C::cost, &CostSection::distance_local),
      field("cost", "distance_migration", &C::cost, &CostSection::distance_migration),
      field("predictor", "beta", &C::predictor, &PredictorSection::beta),
      field("predictor", "alpha", &C::predictor, &PredictorSection::alpha),
      field("predictor", "noise", &C::predictor, &PredictorSection::noise),
      field("predictor", "instance_bound", &C::predictor, &PredictorSection::instance_bound),
      field("window", "gamma", &C::window, &WindowSection::gamma),
      field("window", "sigma", &C::window, &WindowSection::sigma),
      field("window", "window", &C::window, &WindowSection::window),
      field("window", "max_window", &C::window, &WindowSection::max_window),
      field("window", "t_min", &C::window, &WindowSection::t_min),
      field("window", "t_max", &C::window, &WindowSection::t_max),
      field("window", "betas", &C::window, &WindowSection::betas),
      field("simulate", "seed", &C::simulate, &SimulateSection::seed),
      field("simulate", "seeds", &C::simulate, &SimulateSection::seeds),
      field("simulate", "policies", &C::simulate, &SimulateSection::policies),
      field("simulate", "jobs", &C::simulate, &SimulateSection::jobs),
      field("simulate", "out_dir", &C::simulate, &SimulateSection::out_dir),
      field("oracle", "model", &C::oracle, &OracleSection::model),
      field("oracle", "instances", &C::oracle, &OracleSection::instances),
      field("oracle", "trials", &C::oracle, &OracleSection::trials),
      field("oracle", "clouds", &C::oracle, &OracleSection::clouds),
      field("oracle", "slots", &C::oracle, &OracleSection::slots),
      field("oracle", "seed", &C::oracle, &OracleSection::seed),
      field("synthetic", "arrivals", &C::synthetic, &SyntheticSection::arrivals),
      field("synthetic", "seeds", &C::synthetic, &SyntheticSection::seeds),
      field("synthetic", "clouds", &C::synthetic, &SyntheticSection::clouds),
      field("synthetic", "capacity", &C::synthetic, &SyntheticSection::capacity),
      field("synthetic", "backend_local", &C::synthetic, &SyntheticSection::backend_local),
      field("synthetic", "departure_probability", &C::synthetic,
            &SyntheticSection::departure_probability),
      field("synthetic", "demand_low", &C::synthetic, &SyntheticSection::demand_low),
      field("synthetic", "demand_high", &C::synthetic, &SyntheticSection::demand_high),
  };
  return table;
}

void check(const Config& c, const std::string& source,
           const std::function<int(const std::string&)>& line_of);

// Line of every "section.key" and "[section]" in the raw text.
std::map<std::string, int> locate_lines(const std::string& text) {
  std::map<std::string, int> lines;
  std::istringstream in(text);
  std::string line, section;
  for (int n = 1; std::getline(in, line); ++n) {
    const std::string t = trimmed(line);
    if (t.empty() || t[0] == ';' || t[0] == '#') continue;
    if (t.front() == '[' && t.back() == ']') {
      section = trimmed(t.substr(1, t.size() - 2));
      lines.emplace(section, n);
      continue;
    }
    const auto eq = t.find('=');
    if (eq != std::string::npos) lines.emplace(section + "." + trimmed(t.substr(0, eq)), n);
  }
  return lines;
}

}  // namespace

ConfigError::ConfigError(std::string source, int line, std::string field, const std::string& message)
    : std::runtime_error(fmt::format("{}{}{}: {}", source, line > 0 ? fmt::format(":{}", line) : "",
                                     field.empty() ? "" : fmt::format(" [{}]", field), message)),
      source_(std::move(source)),
      line_(line),
      field_(std::move(field)) {}

NoiseShape parse_noise_shape(const std::string& text) {
  if (text == "uniform") return NoiseShape::Uniform;
  if (text == "gaussian") return NoiseShape::TruncatedGaussian;
  throw std::invalid_argument(fmt::format("unknown noise shape '{}' (uniform|gaussian)", text));
}

std::string to_string(NoiseShape shape) {
  return shape == NoiseShape::Uniform ? "uniform" : "gaussian";
}

Config parse_config(std::istream& in, const std::string& source) {
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();
  const auto lines = locate_lines(text);
  auto line_of = [&](const std::string& key) {
    const auto it = lines.find(key);
    return it == lines.end() ? 0 : it->second;
  };

  pt::ptree tree;
  try {
    std::istringstream ini(text);
    pt::ini_parser::read_ini(ini, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(source, static_cast<int>(e.line()), "", e.message());
  }

  Config config;
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty())
      throw ConfigError(source, line_of("." + section), section, "key outside any section");
    for (const auto& [key, value] : body) {
      const std::string name = section + "." + key;
      const auto& table = fields();
      const auto f = std::find_if(table.begin(), table.end(), [&](const Field& x) {
        return x.section == section && x.key == key;
      });
      if (f == table.end()) {
        const bool known_section = std::any_of(table.begin(), table.end(),
                                               [&](const Field& x) { return x.section == section; });
        throw ConfigError(source, known_section ? line_of(name) : line_of(section), name,
                          known_section ? "unknown key" : "unknown section");
      }
      try {
        f->set(config, value.data());
      } catch (const BadValue& e) {
        throw ConfigError(source, line_of(name), name, e.message);
      }
    }
  }

  check(config, source, line_of);
  return config;
}

Config load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string(), 0, "", "cannot open config file");
  return parse_config(in, path.string());
}

void write_config(std::ostream& out, const Config& config) {
  std::string section;
  for (const Field& f : fields()) {
    if (f.section != section) {
      out << (section.empty() ? "" : "\n") << "[" << f.section << "]\n";
      section = f.section;
    }
    out << f.key << " = " << f.get(config) << "\n";
  }
}

std::string to_string(const Config& config) {
  std::ostringstream out;
  write_config(out, config);
  return out.str();
}

void validate(const Config& config, const std::string& source) {
  check(config, source, [](const std::string&) { return 0; });
}

namespace {

void check(const Config& c, const std::string& source,
           const std::function<int(const std::string&)>& line_of) {
  auto require = [&](bool ok, const char* field, const char* message) {
    if (!ok) throw ConfigError(source, line_of(field), field, message);
  };
  const auto& s = c.scenario;
  require(s.cells >= 1, "scenario.cells", "must be at least 1");
  require(c.scenario.cells + 1 <= 256, "scenario.cells", "at most 255 cells supported");
  require(std::abs(s.anchor_lat) <= 90, "scenario.anchor_lat", "must lie in [-90, 90]");
  require(std::abs(s.anchor_lon) <= 180, "scenario.anchor_lon", "must lie in [-180, 180]");
  require(s.spacing > 0, "scenario.spacing", "must be positive");
  require(s.slots >= 0, "scenario.slots", "must be non-negative");
  require(s.slot_seconds >= 1, "scenario.slot_seconds", "must be positive");
  require(s.staleness >= 0, "scenario.staleness", "must be non-negative");
  require(s.users >= 0, "scenario.users", "must be non-negative");
  require(s.speed_min > 0, "scenario.speed_min", "must be positive");
  require(s.speed_max >= s.speed_min, "scenario.speed_max", "must be >= speed_min");
  require(s.pause_mean > 0, "scenario.pause_mean", "must be positive");
  require(s.report_mean > 0, "scenario.report_mean", "must be positive");
  require(s.a_max > 0, "scenario.a_max", "must be positive");
  require(s.b_max > 0, "scenario.b_max", "must be positive");
  require(s.max_departures >= 0, "scenario.max_departures", "must be non-negative");

  require(c.demand.mean_on > 0, "demand.mean_on", "must be positive");
  require(c.demand.mean_off > 0, "demand.mean_off", "must be positive");
  require(c.demand.local_demand > 0, "demand.local_demand", "must be positive");
  require(c.demand.migration_demand > 0, "demand.migration_demand", "must be positive");
  require(c.demand.max_lifetime >= 0, "demand.max_lifetime", "must be non-negative");

  require(c.cost.capacity > 0, "cost.capacity", "must be positive");
  require(c.cost.backend_local >= 0, "cost.backend_local", "must be non-negative");
  require(c.cost.backend_migration >= 0, "cost.backend_migration", "must be non-negative");
  require(c.cost.distance_local >= 0, "cost.distance_local", "must be non-negative");
  require(c.cost.distance_migration >= 0, "cost.distance_migration", "must be non-negative");

  require(c.predictor.beta >= 0, "predictor.beta", "must be non-negative");
  require(c.predictor.alpha > 1, "predictor.alpha", "must exceed 1");
  require(c.predictor.instance_bound >= 0, "predictor.instance_bound", "must be non-negative");

  const auto& w = c.window;
  require(w.gamma >= 1, "window.gamma", "must be at least 1");
  require(w.sigma >= 0, "window.sigma", "must be non-negative");
  require(w.window >= 0, "window.window", "must be non-negative");
  require(w.max_window >= 0, "window.max_window", "must be non-negative");
  require(w.t_min >= 1, "window.t_min", "must be at least 1");
  require(w.t_max >= w.t_min, "window.t_max", "must be >= t_min");
  require(!w.betas.empty(), "window.betas", "needs at least one value");
  for (double b : w.betas) require(b >= 0, "window.betas", "values must be non-negative");

  require(c.simulate.seeds >= 1, "simulate.seeds", "must be at least 1");
  require(c.simulate.jobs >= 0, "simulate.jobs", "must be non-negative");
  const std::string& p = c.simulate.policies;
  require(p == "all" || (!p.empty() && std::all_of(p.begin(), p.end(), [](char ch) {
                           return std::string("abcdeABCDE,").find(ch) != std::string::npos;
                         })),
          "simulate.policies", "expected 'all' or letters from a-e");

  require(c.oracle.model == "linear" || c.oracle.model == "quadratic", "oracle.model",
          "expected linear or quadratic");
  require(c.oracle.instances >= 0, "oracle.instances", "must be non-negative");
  require(c.oracle.trials >= 0, "oracle.trials", "must be non-negative");
  require(c.oracle.clouds >= 1 && c.oracle.clouds <= 256, "oracle.clouds", "must lie in [1, 256]");
  require(c.oracle.slots >= 1, "oracle.slots", "must be at least 1");

  const auto& y = c.synthetic;
  require(y.arrivals >= 0, "synthetic.arrivals", "must be non-negative");
  require(y.seeds >= 1, "synthetic.seeds", "must be at least 1");
  require(y.clouds >= 2, "synthetic.clouds", "needs at least one MMC and the backend");
  require(y.capacity > 0, "synthetic.capacity", "must be positive");
  require(y.backend_local >= 0, "synthetic.backend_local", "must be non-negative");
  require(y.departure_probability >= 0 && y.departure_probability <= 1,
          "synthetic.departure_probability", "must lie in [0, 1]");
  require(y.demand_low > 0 && y.demand_high >= y.demand_low, "synthetic.demand_low",
          "need 0 < demand_low <= demand_high");
}

}  // namespace

}  // namespace mmcplace
