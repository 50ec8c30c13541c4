#pragma once

/// @file config.hpp
/// Case configuration as JSON: schema, presets and a lossless round trip.
///
/// Schema (all keys optional except "case"; unknown keys are rejected):
///   case          "tgv" | "cavity" | "channel-cylinder" | "oscillating-cylinder" | "acoustics"
///   scheme        "staggered" | "collocated"
///   n             nodes per side (tgv, cavity, acoustics)
///   l0            cell width (channel-cylinder, oscillating-cylinder)
///   arrangement   { "type": "uniform" | "randomized", "alpha": a, "seed": s }
///   fluid         { "rho", "eta", "dt", "beta", "criterion": "relative" | "absolute",
///                   "tolerance", "max_iterations", "jacobi" }
///   flow          { "U", "L", "D", "frequency", "half_width" }
///   obstacle      { "mode": "none" | "fitted" | "damping", "alpha0", "radius", "center": [x, y] }
///   acoustics     { "rho", "c", "dt", "pulse_radius", "pulse_center": [x, y] }
///   run           { "t_end", "max_steps", "steady" }
///   output        { "directory", "every", "snapshot_times": [...], "formats": ["csv", "vtk"] }

#include <json.hpp>

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "mcd/acoustics.hpp"
#include "mcd/geometry.hpp"
#include "mcd/linalg.hpp"

namespace mcd {

struct ArrangementConfig {
  std::string type = "uniform";
  double alpha = 0.0;
  std::uint64_t seed = 0;

  Arrangement to_arrangement() const {
    return type == "randomized" ? Arrangement::randomized(alpha, seed) : Arrangement::uniform();
  }
};

struct FluidConfig {
  double rho = 1.0;
  double eta = 0.01;
  double dt = 1e-5;
  double beta = 0.99;
  std::string criterion = "relative";
  double tolerance = 1e-7;
  int max_iterations = 10000;
  bool jacobi = false;
};

struct FlowConfig {
  double U = 1.0;
  double L = 1.0;
  double D = 1.0;
  double frequency = 1.0;
  double half_width = 5.0;
};

struct ObstacleConfig {
  std::string mode = "none";
  double alpha0 = 0.0;
  double radius = 0.5;
  Vec2 center;
};

struct AcousticsConfig {
  double rho = 1050.0;
  double c = 1000.0;
  double dt = 5e-8;
  double pulse_radius = 0.1;
  Vec2 pulse_center{0.5, 0.5};
};

struct RunConfig {
  double t_end = 0.1;
  int max_steps = 100000000;
  bool steady = false;
};

struct OutputConfig {
  std::string directory = ".";
  int every = 1;
  std::vector<double> snapshot_times;
  std::vector<std::string> formats{"csv"};
};

struct CaseConfig {
  std::string name = "tgv";
  std::string scheme = "staggered";
  int n = 32;
  double l0 = 1.0 / 16.0;
  ArrangementConfig arrangement;
  FluidConfig fluid;
  FlowConfig flow;
  ObstacleConfig obstacle;
  AcousticsConfig acoustics;
  RunConfig run;
  OutputConfig output;

  Scheme scheme_kind() const { return scheme == "collocated" ? Scheme::collocated : Scheme::staggered; }

  SolveOptions solve_options() const {
    SolveOptions o;
    o.criterion = fluid.criterion == "absolute" ? Criterion::absolute : Criterion::relative;
    o.tolerance = fluid.tolerance;
    o.max_iterations = fluid.max_iterations;
    o.jacobi = fluid.jacobi;
    return o;
  }

  std::optional<DampingSpec> damping() const {
    if (obstacle.mode != "damping") return std::nullopt;
    return DampingSpec{obstacle.alpha0, obstacle.radius, obstacle.center};
  }

  void validate() const;
};

namespace detail {

inline const std::set<std::string>& known_cases() {
  static const std::set<std::string> k{"tgv", "cavity", "channel-cylinder", "oscillating-cylinder",
                                       "acoustics"};
  return k;
}

inline void check_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed,
                       const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || it.key() == a;
    if (!ok) throw ConfigError("unknown key '" + it.key() + "' in " + where);
  }
}

template <class T>
void read(const nlohmann::json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

inline void read_vec(const nlohmann::json& j, const char* key, Vec2& out) {
  if (!j.contains(key)) return;
  const auto& a = j.at(key);
  if (!a.is_array() || a.size() != 2 || !a[0].is_number() || !a[1].is_number()) {
    throw ConfigError(std::string("'") + key + "' must be a 2-element numeric array");
  }
  out = {a[0].get<double>(), a[1].get<double>()};
}

}  // namespace detail

inline void CaseConfig::validate() const {
  if (!detail::known_cases().count(name)) throw ConfigError("unknown case '" + name + "'");
  if (scheme != "staggered" && scheme != "collocated") throw ConfigError("scheme must be staggered or collocated");
  if (arrangement.type != "uniform" && arrangement.type != "randomized") {
    throw ConfigError("arrangement type must be uniform or randomized");
  }
  if (fluid.criterion != "relative" && fluid.criterion != "absolute") {
    throw ConfigError("criterion must be relative or absolute");
  }
  if (obstacle.mode != "none" && obstacle.mode != "fitted" && obstacle.mode != "damping") {
    throw ConfigError("obstacle mode must be none, fitted or damping");
  }
  if (n < 3) throw ConfigError("n must be at least 3");
  if (!(l0 > 0.0)) throw ConfigError("l0 must be positive");
  if (!(fluid.rho > 0.0) || !(fluid.dt > 0.0) || !(fluid.eta >= 0.0)) {
    throw ConfigError("fluid rho, dt must be positive and eta non-negative");
  }
  if (!(fluid.beta >= 0.0 && fluid.beta <= 1.0)) throw ConfigError("beta must lie in [0, 1]");
  if (!(acoustics.rho > 0.0) || !(acoustics.c > 0.0) || !(acoustics.dt > 0.0)) {
    throw ConfigError("acoustics rho, c, dt must be positive");
  }
  if (!(run.t_end >= 0.0) || run.max_steps < 0) throw ConfigError("run horizon must be non-negative");
  if (output.every < 1) throw ConfigError("output.every must be >= 1");
  for (const auto& f : output.formats) {
    if (f != "csv" && f != "vtk") throw ConfigError("output format must be csv or vtk");
  }
}

inline nlohmann::json to_json(const CaseConfig& c) {
  using nlohmann::json;
  json j;
  j["case"] = c.name;
  j["scheme"] = c.scheme;
  j["n"] = c.n;
  j["l0"] = c.l0;
  j["arrangement"] = {{"type", c.arrangement.type}, {"alpha", c.arrangement.alpha}, {"seed", c.arrangement.seed}};
  j["fluid"] = {{"rho", c.fluid.rho},
                {"eta", c.fluid.eta},
                {"dt", c.fluid.dt},
                {"beta", c.fluid.beta},
                {"criterion", c.fluid.criterion},
                {"tolerance", c.fluid.tolerance},
                {"max_iterations", c.fluid.max_iterations},
                {"jacobi", c.fluid.jacobi}};
  j["flow"] = {{"U", c.flow.U}, {"L", c.flow.L}, {"D", c.flow.D}, {"frequency", c.flow.frequency},
               {"half_width", c.flow.half_width}};
  j["obstacle"] = {{"mode", c.obstacle.mode},
                   {"alpha0", c.obstacle.alpha0},
                   {"radius", c.obstacle.radius},
                   {"center", {c.obstacle.center.x, c.obstacle.center.y}}};
  j["acoustics"] = {{"rho", c.acoustics.rho},
                    {"c", c.acoustics.c},
                    {"dt", c.acoustics.dt},
                    {"pulse_radius", c.acoustics.pulse_radius},
                    {"pulse_center", {c.acoustics.pulse_center.x, c.acoustics.pulse_center.y}}};
  j["run"] = {{"t_end", c.run.t_end}, {"max_steps", c.run.max_steps}, {"steady", c.run.steady}};
  j["output"] = {{"directory", c.output.directory},
                 {"every", c.output.every},
                 {"snapshot_times", c.output.snapshot_times},
                 {"formats", c.output.formats}};
  return j;
}

/// Parses on top of `base` so that presets can be partially overridden.
inline CaseConfig from_json(const nlohmann::json& j, CaseConfig c = {}) {
  using detail::read;
  detail::check_keys(j, {"case", "scheme", "n", "l0", "arrangement", "fluid", "flow", "obstacle", "acoustics", "run", "output"},
                     "config");
  read(j, "case", c.name);
  read(j, "scheme", c.scheme);
  read(j, "n", c.n);
  read(j, "l0", c.l0);
  if (j.contains("arrangement")) {
    const auto& a = j["arrangement"];
    detail::check_keys(a, {"type", "alpha", "seed"}, "arrangement");
    read(a, "type", c.arrangement.type);
    read(a, "alpha", c.arrangement.alpha);
    read(a, "seed", c.arrangement.seed);
  }
  if (j.contains("fluid")) {
    const auto& f = j["fluid"];
    detail::check_keys(f, {"rho", "eta", "dt", "beta", "criterion", "tolerance", "max_iterations", "jacobi"},
                       "fluid");
    read(f, "rho", c.fluid.rho);
    read(f, "eta", c.fluid.eta);
    read(f, "dt", c.fluid.dt);
    read(f, "beta", c.fluid.beta);
    read(f, "criterion", c.fluid.criterion);
    read(f, "tolerance", c.fluid.tolerance);
    read(f, "max_iterations", c.fluid.max_iterations);
    read(f, "jacobi", c.fluid.jacobi);
  }
  if (j.contains("flow")) {
    const auto& f = j["flow"];
    detail::check_keys(f, {"U", "L", "D", "frequency", "half_width"}, "flow");
    read(f, "U", c.flow.U);
    read(f, "L", c.flow.L);
    read(f, "D", c.flow.D);
    read(f, "frequency", c.flow.frequency);
    read(f, "half_width", c.flow.half_width);
  }
  if (j.contains("obstacle")) {
    const auto& o = j["obstacle"];
    detail::check_keys(o, {"mode", "alpha0", "radius", "center"}, "obstacle");
    read(o, "mode", c.obstacle.mode);
    read(o, "alpha0", c.obstacle.alpha0);
    read(o, "radius", c.obstacle.radius);
    detail::read_vec(o, "center", c.obstacle.center);
  }
  if (j.contains("acoustics")) {
    const auto& a = j["acoustics"];
    detail::check_keys(a, {"rho", "c", "dt", "pulse_radius", "pulse_center"}, "acoustics");
    read(a, "rho", c.acoustics.rho);
    read(a, "c", c.acoustics.c);
    read(a, "dt", c.acoustics.dt);
    read(a, "pulse_radius", c.acoustics.pulse_radius);
    detail::read_vec(a, "pulse_center", c.acoustics.pulse_center);
  }
  if (j.contains("run")) {
    const auto& r = j["run"];
    detail::check_keys(r, {"t_end", "max_steps", "steady"}, "run");
    read(r, "t_end", c.run.t_end);
    read(r, "max_steps", c.run.max_steps);
    read(r, "steady", c.run.steady);
  }
  if (j.contains("output")) {
    const auto& o = j["output"];
    detail::check_keys(o, {"directory", "every", "snapshot_times", "formats"}, "output");
    read(o, "directory", c.output.directory);
    read(o, "every", c.output.every);
    read(o, "snapshot_times", c.output.snapshot_times);
    read(o, "formats", c.output.formats);
  }
  c.validate();
  return c;
}

inline CaseConfig parse_config(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return from_json(j);
}

inline std::string serialize_config(const CaseConfig& c) { return to_json(c).dump(2); }

/// Desk-scale presets. `reynolds` applies to cavity (Re = rho U L / eta) and
/// the cylinder cases (Re = rho U D / eta) when positive.
inline CaseConfig preset(const std::string& name, int n = 0, double reynolds = 0.0) {
  CaseConfig c;
  c.name = name;
  if (name == "tgv") {
    c.n = n > 0 ? n : 32;
    c.fluid = {1.0, 0.01, 1e-5, 0.99, "absolute", 1e-7, 10000, false};
    c.flow.U = 1.0;
    c.flow.L = 1.0;
    c.run.t_end = 0.1;
  } else if (name == "cavity") {
    c.n = n > 0 ? n : 65;
    const double re = reynolds > 0.0 ? reynolds : 100.0;
    c.fluid = {1.0, 1.0 / re, 0.128 / c.n, 0.99, "relative", 1e-7, 10000, false};
    c.run.t_end = 200.0;
    c.run.steady = true;
  } else if (name == "channel-cylinder") {
    c.l0 = 1.0 / 16.0;
    const double re = reynolds > 0.0 ? reynolds : 200.0;
    c.fluid = {1.0, 1.0 / re, 0.01 * 5e-3, 0.99, "relative", 1e-5, 10000, false};
    c.obstacle = {"damping", 1e4, 0.5, {0.0, 0.0}};
    c.run.t_end = 2.0;
  } else if (name == "oscillating-cylinder") {
    c.l0 = 1.0 / 20.0;
    c.flow = {5.0, 1.0, 1.0, 1.0, 5.0};
    const double re = reynolds > 0.0 ? reynolds : 100.0;
    c.fluid = {1.0, c.flow.U * c.flow.D / re, 1.0 / 900.0, 0.99, "relative", 1e-5, 10000, false};
    c.obstacle = {"fitted", 0.0, 0.5, {0.0, 0.0}};
    c.run.t_end = 3.0;
  } else if (name == "acoustics") {
    c.n = n > 0 ? n : 65;
    c.acoustics = {1050.0, 1000.0, 5e-8, 0.1, {0.5, 0.5}};
    c.run.t_end = 3e-4;
  } else {
    throw ConfigError("unknown preset '" + name + "'");
  }
  c.validate();
  return c;
}

}  // namespace mcd
