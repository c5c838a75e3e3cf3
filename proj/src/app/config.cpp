#include "rcpose/app/config.hpp"

#include <cstdlib>
#include <set>

#include "rcpose/app/manifest.hpp"
#include "rcpose/errors.hpp"

namespace rcpose::app {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

template <typename T>
void Read(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigurationError(std::string("config key '") + key + "': " + e.what());
  }
}

void RejectUnknown(const json& j, const std::set<std::string>& known, const std::string& where) {
  for (const auto& item : j.items()) {
    if (!known.contains(item.key())) {
      throw ConfigurationError("unknown config key '" + where + item.key() + "'");
    }
  }
}

}  // namespace

RefinementConfig ConfigFromJson(const json& j, RefinementConfig c) {
  if (!j.is_object()) throw ConfigurationError("config must be a JSON object");
  RejectUnknown(j,
                {"lattice", "iterations", "step_size", "beta1", "beta2", "epsilon", "plateau",
                 "fd_step", "mode", "cull", "crop_resolution", "crop_margin", "top_k",
                 "init_only", "workers"},
                "");
  if (j.contains("lattice")) {
    const json& l = j.at("lattice");
    if (l.is_string()) {
      c.lattice = ParseLattice(l.get<std::string>());
    } else {
      if (!l.is_object()) throw ConfigurationError("config key 'lattice' must be an object or \"m,n\"");
      RejectUnknown(l, {"viewpoints", "inplane"}, "lattice.");
      Read(l, "viewpoints", c.lattice.viewpoints);
      Read(l, "inplane", c.lattice.inplane);
    }
  }
  Read(j, "iterations", c.iterations);
  Read(j, "step_size", c.step_size);
  Read(j, "beta1", c.beta1);
  Read(j, "beta2", c.beta2);
  Read(j, "epsilon", c.epsilon);
  if (j.contains("plateau")) {
    const json& p = j.at("plateau");
    if (!p.is_object()) throw ConfigurationError("config key 'plateau' must be an object");
    RejectUnknown(p, {"factor", "patience", "threshold", "min_step"}, "plateau.");
    Read(p, "factor", c.plateau.factor);
    Read(p, "patience", c.plateau.patience);
    Read(p, "threshold", c.plateau.threshold);
    Read(p, "min_step", c.plateau.min_step);
  }
  Read(j, "fd_step", c.fd_step);
  if (j.contains("mode")) {
    std::string mode;
    Read(j, "mode", mode);
    c.mode = ParseLossMode(mode);
  }
  Read(j, "cull", c.cull);
  Read(j, "crop_resolution", c.crop_resolution);
  Read(j, "crop_margin", c.crop_margin);
  Read(j, "top_k", c.top_k);
  Read(j, "init_only", c.init_only);
  Read(j, "workers", c.workers);
  return c;
}

ordered_json ConfigToJson(const RefinementConfig& c) {
  ordered_json j;
  j["lattice"] = {{"viewpoints", c.lattice.viewpoints}, {"inplane", c.lattice.inplane}};
  j["iterations"] = c.iterations;
  j["step_size"] = c.step_size;
  j["beta1"] = c.beta1;
  j["beta2"] = c.beta2;
  j["epsilon"] = c.epsilon;
  j["plateau"] = {{"factor", c.plateau.factor},
                  {"patience", c.plateau.patience},
                  {"threshold", c.plateau.threshold},
                  {"min_step", c.plateau.min_step}};
  j["fd_step"] = c.fd_step;
  j["mode"] = ToString(c.mode);
  j["cull"] = c.cull;
  j["crop_resolution"] = c.crop_resolution;
  j["crop_margin"] = c.crop_margin;
  j["top_k"] = c.top_k;
  j["init_only"] = c.init_only;
  j["workers"] = c.workers;
  return j;
}

LatticeSpec ParseLattice(const std::string& text) {
  const auto comma = text.find(',');
  LatticeSpec spec;
  try {
    if (comma == std::string::npos) throw std::invalid_argument("no comma");
    std::size_t used = 0;
    spec.viewpoints = std::stoi(text.substr(0, comma), &used);
    if (used != comma) throw std::invalid_argument("trailing text");
    const std::string rest = text.substr(comma + 1);
    spec.inplane = std::stoi(rest, &used);
    if (used != rest.size()) throw std::invalid_argument("trailing text");
  } catch (const std::exception&) {
    throw ConfigurationError("lattice must be given as m,n (got '" + text + "')");
  }
  return spec;
}

RefinementConfig ResolveConfig(const std::optional<std::filesystem::path>& config_path,
                               const ConfigOverrides& o) {
  RefinementConfig c;
  std::optional<std::filesystem::path> path = config_path;
  if (!path) {
    if (const char* env = std::getenv(kConfigEnvVar); env != nullptr && *env != '\0') path = env;
  }
  if (path) {
    RequireFile(*path, "config file");
    c = ConfigFromJson(ReadJsonFile(*path), c);
  }
  if (o.iterations) c.iterations = *o.iterations;
  if (o.lattice) c.lattice = *o.lattice;
  if (o.crop_resolution) c.crop_resolution = *o.crop_resolution;
  if (o.fd_step) c.fd_step = *o.fd_step;
  if (o.workers) c.workers = *o.workers;
  if (o.mode) c.mode = *o.mode;
  if (o.no_culling) c.cull = false;
  if (o.init_only) c.init_only = true;
  c.Validate();
  return c;
}

}  // namespace rcpose::app
