#include "mcdetect/config_io.hpp"

#include <fstream>
#include <set>

namespace mcdetect::model {

using nlohmann::json;

namespace {

// Walks a JSON object, recording problems instead of stopping at the first.
class Reader {
 public:
  explicit Reader(std::vector<Violation>& out) : out_(out) {}

  bool expect_object(const json& node, const std::string& path,
                     const std::set<std::string>& allowed) {
    if (!node.is_object()) {
      out_.push_back({path.empty() ? "<root>" : path, "expected a JSON object"});
      return false;
    }
    for (const auto& [key, value] : node.items()) {
      if (!allowed.contains(key)) {
        out_.push_back({join(path, key), "unknown key"});
      }
    }
    return true;
  }

  double number(const json& node, const std::string& path, const std::string& key,
                std::optional<double> fallback = std::nullopt) {
    const auto it = node.find(key);
    if (it == node.end()) {
      if (!fallback) {
        out_.push_back({join(path, key), "required number is missing"});
        return 0.0;
      }
      return *fallback;
    }
    if (!it->is_number()) {
      out_.push_back({join(path, key), "expected a number"});
      return 0.0;
    }
    return it->get<double>();
  }

  std::uint64_t count(const json& node, const std::string& path, const std::string& key,
                      std::uint64_t fallback) {
    const auto it = node.find(key);
    if (it == node.end()) {
      return fallback;
    }
    if (!it->is_number_unsigned() && !(it->is_number_integer() && it->get<std::int64_t>() >= 0)) {
      out_.push_back({join(path, key), "expected a non-negative integer"});
      return fallback;
    }
    return it->get<std::uint64_t>();
  }

  bool boolean(const json& node, const std::string& path, const std::string& key, bool fallback) {
    const auto it = node.find(key);
    if (it == node.end()) {
      return fallback;
    }
    if (!it->is_boolean()) {
      out_.push_back({join(path, key), "expected a boolean"});
      return fallback;
    }
    return it->get<bool>();
  }

  void add(std::string field, std::string constraint) {
    out_.push_back({std::move(field), std::move(constraint)});
  }

  static std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
  }

 private:
  std::vector<Violation>& out_;
};

std::vector<double> read_grid(Reader& reader, const json& node, const std::string& path) {
  if (node.is_array()) {
    std::vector<double> grid;
    for (const auto& v : node) {
      if (!v.is_number()) {
        reader.add(path, "grid entries must be numbers");
        return {};
      }
      grid.push_back(v.get<double>());
    }
    return grid;
  }
  if (!reader.expect_object(node, path, {"start", "stop", "points", "spacing"})) {
    return {};
  }
  const double start = reader.number(node, path, "start");
  const double stop = reader.number(node, path, "stop");
  const auto points = reader.count(node, path, "points", 200);
  const std::string spacing = node.value("spacing", std::string("log"));
  try {
    if (spacing == "log") {
      return log_grid(start, stop, points);
    }
    if (spacing == "linear") {
      return linear_grid(start, stop, points);
    }
    reader.add(path + ".spacing", "must be \"log\" or \"linear\"");
  } catch (const std::invalid_argument& e) {
    reader.add(path, e.what());
  }
  return {};
}

}  // namespace

Scenario parse_scenario(const json& doc) {
  std::vector<Violation> violations;
  Reader reader(violations);
  Scenario scenario;
  if (!reader.expect_object(doc, "", {"classes", "exclusion_radius", "target", "marker",
                                      "single_nm", "simulation"})) {
    throw ValidationError(std::move(violations));
  }

  auto& sys = scenario.system;
  if (const auto it = doc.find("classes"); it == doc.end() || !it->is_array()) {
    reader.add("classes", "expected an array of NM classes");
  } else {
    for (std::size_t i = 0; i < it->size(); ++i) {
      const auto& node = (*it)[i];
      const std::string path = "classes[" + std::to_string(i) + "]";
      if (!reader.expect_object(node, path, {"radius", "diffusion", "density"})) {
        continue;
      }
      sys.classes.push_back({reader.number(node, path, "radius"),
                             reader.number(node, path, "diffusion"),
                             reader.number(node, path, "density")});
    }
  }
  sys.exclusion_radius = reader.number(doc, "", "exclusion_radius");

  if (const auto it = doc.find("target"); it != doc.end()) {
    if (reader.expect_object(*it, "target", {"diffusion", "degradation_rate"})) {
      sys.target.diffusion = reader.number(*it, "target", "diffusion", 0.0);
      sys.target.degradation_rate = reader.number(*it, "target", "degradation_rate", 0.0);
    }
  }
  if (const auto it = doc.find("marker"); it != doc.end()) {
    if (reader.expect_object(*it, "marker", {"emission_rate", "diffusion", "threshold"})) {
      sys.marker = MarkerSpec{reader.number(*it, "marker", "emission_rate"),
                              reader.number(*it, "marker", "diffusion"),
                              reader.number(*it, "marker", "threshold")};
    }
  }
  if (const auto it = doc.find("single_nm"); it != doc.end()) {
    if (reader.expect_object(*it, "single_nm", {"radius", "diffusion", "distance"})) {
      sys.single_nm = SingleNmSpec{reader.number(*it, "single_nm", "radius"),
                                   reader.number(*it, "single_nm", "diffusion"),
                                   reader.number(*it, "single_nm", "distance")};
    }
  }

  if (const auto it = doc.find("simulation"); it != doc.end()) {
    const std::string path = "simulation";
    if (reader.expect_object(*it, path, {"time_step", "horizon", "window_radius", "trials",
                                         "master_seed", "t_grid", "bridge_correction"})) {
      SimConfig sim;
      sim.time_step = reader.number(*it, path, "time_step", sim.time_step);
      sim.window_radius = reader.number(*it, path, "window_radius", sim.window_radius);
      sim.trials = reader.count(*it, path, "trials", sim.trials);
      sim.master_seed = reader.count(*it, path, "master_seed", sim.master_seed);
      sim.bridge_correction = reader.boolean(*it, path, "bridge_correction", sim.bridge_correction);
      if (const auto g = it->find("t_grid"); g != it->end()) {
        sim.t_grid = read_grid(reader, *g, path + ".t_grid");
      }
      const double last = sim.t_grid.empty() ? sim.horizon : sim.t_grid.back();
      sim.horizon = reader.number(*it, path, "horizon", last);
      scenario.sim = sim;
    }
  }

  if (violations.empty()) {
    auto more = check(sys);
    violations.insert(violations.end(), more.begin(), more.end());
    if (scenario.sim) {
      auto sim_violations = check(*scenario.sim, sys);
      violations.insert(violations.end(), sim_violations.begin(), sim_violations.end());
    }
  }
  if (!violations.empty()) {
    throw ValidationError(std::move(violations));
  }
  return scenario;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ValidationError({{path.string(), "cannot open config file"}});
  }
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError({{path.string(), std::string("malformed JSON: ") + e.what()}});
  }
  return parse_scenario(doc);
}

json to_json(const SystemConfig& config) {
  json doc;
  doc["classes"] = json::array();
  for (const auto& c : config.classes) {
    doc["classes"].push_back(
        {{"radius", c.radius}, {"diffusion", c.diffusion}, {"density", c.density}});
  }
  doc["exclusion_radius"] = config.exclusion_radius;
  doc["target"] = {{"diffusion", config.target.diffusion},
                   {"degradation_rate", config.target.degradation_rate}};
  if (config.marker) {
    doc["marker"] = {{"emission_rate", config.marker->emission_rate},
                     {"diffusion", config.marker->diffusion},
                     {"threshold", config.marker->threshold}};
  }
  if (config.single_nm) {
    doc["single_nm"] = {{"radius", config.single_nm->radius},
                        {"diffusion", config.single_nm->diffusion},
                        {"distance", config.single_nm->distance}};
  }
  return doc;
}

json to_json(const SimConfig& sim) {
  return {{"time_step", sim.time_step},
          {"horizon", sim.horizon},
          {"window_radius", sim.window_radius},
          {"trials", sim.trials},
          {"master_seed", sim.master_seed},
          {"t_grid", sim.t_grid},
          {"bridge_correction", sim.bridge_correction}};
}

json to_json(const Scenario& scenario) {
  json doc = to_json(scenario.system);
  if (scenario.sim) {
    doc["simulation"] = to_json(*scenario.sim);
  }
  return doc;
}

}  // namespace mcdetect::model
