#include "blockade/config_io.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "blockade/errors.hpp"

namespace blockade {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

[[noreturn]] void invalid(const std::string& path, const std::string& what) {
  throw Error(ErrorCode::ConfigInvalid, (path.empty() ? std::string("<root>") : path) + ": " + what);
}

// Strict view of one JSON object: every key must be consumed or listed.
class Node {
 public:
  Node(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) invalid(path_, "expected an object");
  }

  void allow(std::initializer_list<const char*> keys) const {
    const std::set<std::string> ok(keys.begin(), keys.end());
    for (const auto& [k, v] : j_.items()) {
      if (!ok.count(k)) invalid(child(k), "unknown key");
    }
  }

  bool has(const std::string& key) const { return j_.contains(key) && !j_.at(key).is_null(); }
  const json& at(const std::string& key) const {
    if (!has(key)) invalid(child(key), "required key missing");
    return j_.at(key);
  }
  std::string child(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  double number(const std::string& key) const {
    const json& v = at(key);
    if (!v.is_number()) invalid(child(key), "expected a number");
    return v.get<double>();
  }
  double number(const std::string& key, double fallback) const { return has(key) ? number(key) : fallback; }

  int integer(const std::string& key) const {
    const json& v = at(key);
    if (!v.is_number_integer()) invalid(child(key), "expected an integer");
    return v.get<int>();
  }
  int integer(const std::string& key, int fallback) const { return has(key) ? integer(key) : fallback; }

  bool boolean(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    if (!at(key).is_boolean()) invalid(child(key), "expected true or false");
    return at(key).get<bool>();
  }

  std::string string(const std::string& key) const {
    const json& v = at(key);
    if (!v.is_string()) invalid(child(key), "expected a string");
    return v.get<std::string>();
  }
  std::string string(const std::string& key, const std::string& fallback) const {
    return has(key) ? string(key) : fallback;
  }

  Node object(const std::string& key) const { return Node(at(key), child(key)); }

 private:
  const json& j_;
  std::string path_;
};

Emitter parse_emitter(const Node& n) {
  n.allow({"freq", "coupling", "decay"});
  return Emitter{n.number("freq"), n.number("coupling"), n.number("decay", 0.0)};
}

Witness parse_witness(const Node& n) {
  n.allow({"freq", "coupling", "anharmonicity", "decay", "levels"});
  Witness w;
  w.freq = n.number("freq");
  w.coupling = n.number("coupling");
  w.anharmonicity = n.number("anharmonicity", 0.0);
  w.decay = n.number("decay", w.decay);
  w.levels = n.integer("levels", w.levels);
  return w;
}

SystemSpec parse_system(const Node& n) {
  n.allow({"cavity_freq", "cavity_decay", "cavity_truncation", "emitters", "drive", "witness"});
  SystemSpec s;
  s.cavity_freq = n.number("cavity_freq");
  s.cavity_decay = n.number("cavity_decay", 0.0);
  s.cavity_truncation = n.integer("cavity_truncation", s.cavity_truncation);
  if (n.has("emitters")) {
    const json& e = n.at("emitters");
    const std::string path = n.child("emitters");
    if (e.is_array()) {
      for (std::size_t i = 0; i < e.size(); ++i) {
        s.emitters.push_back(parse_emitter(Node(e[i], path + "[" + std::to_string(i) + "]")));
      }
    } else {
      const Node group(e, path);
      group.allow({"count", "freq", "coupling", "decay"});
      const int count = group.integer("count");
      if (count < 0) invalid(group.child("count"), "must be >= 0");
      s.emitters.assign(static_cast<std::size_t>(count),
                        Emitter{group.number("freq", s.cavity_freq), group.number("coupling"),
                                group.number("decay", 0.0)});
    }
  }
  if (n.has("drive")) {
    const Node d = n.object("drive");
    d.allow({"amplitude", "freq"});
    s.drive = Drive{d.number("amplitude"), d.number("freq", s.cavity_freq)};
  }
  if (n.has("witness")) s.witness = parse_witness(n.object("witness"));
  try {
    s.validate();
  } catch (const Error& e) {
    invalid("system", e.what());
  }
  return s;
}

ordered_json system_json(const SystemSpec& s) {
  ordered_json j;
  j["cavity_freq"] = s.cavity_freq;
  j["cavity_decay"] = s.cavity_decay;
  j["cavity_truncation"] = s.cavity_truncation;
  ordered_json emitters = ordered_json::array();
  for (const auto& e : s.emitters) emitters.push_back({{"freq", e.freq}, {"coupling", e.coupling}, {"decay", e.decay}});
  j["emitters"] = std::move(emitters);
  if (s.drive) j["drive"] = {{"amplitude", s.drive->amplitude}, {"freq", s.drive->freq}};
  if (s.witness) j["witness"] = {{"freq", s.witness->freq},
                                 {"coupling", s.witness->coupling},
                                 {"anharmonicity", s.witness->anharmonicity},
                                 {"decay", s.witness->decay},
                                 {"levels", s.witness->levels}};
  return j;
}

AxisUnit parse_unit(const Node& n) {
  const std::string u = n.string("unit", "mhz");
  if (u == "mhz") return AxisUnit::Mhz;
  if (u == "kappa") return AxisUnit::Kappa;
  if (u == "g") return AxisUnit::G;
  invalid(n.child("unit"), "expected mhz, kappa or g");
}

std::string unit_name(AxisUnit u) {
  switch (u) {
    case AxisUnit::Mhz: return "mhz";
    case AxisUnit::Kappa: return "kappa";
    case AxisUnit::G: return "g";
  }
  return "mhz";
}

SweepAxis parse_axis(const Node& n, const std::string& path) {
  n.allow({"values", "start", "stop", "steps", "spacing", "unit"});
  const AxisUnit unit = parse_unit(n);
  std::vector<double> values;
  const bool listed = n.has("values");
  if (listed) {
    if (n.has("start") || n.has("stop") || n.has("steps")) invalid(path, "give values or a range, not both");
    const json& v = n.at("values");
    if (!v.is_array()) invalid(n.child("values"), "expected an array of numbers");
    for (const auto& x : v) {
      if (!x.is_number()) invalid(n.child("values"), "expected an array of numbers");
      values.push_back(x.get<double>());
    }
  }
  const std::string spacing = n.string("spacing", "linear");
  if (spacing != "linear" && spacing != "log") invalid(n.child("spacing"), "expected linear or log");
  try {
    if (listed) return SweepAxis::list(std::move(values), unit);
    return SweepAxis::range(n.number("start"), n.number("stop"), n.integer("steps"),
                            spacing == "log" ? AxisSpacing::Log : AxisSpacing::Linear, unit);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::ConfigInvalid || std::string(e.what()).find(path) != std::string::npos) throw;
    invalid(path, e.what());
  }
}

}  // namespace

SystemSpec parse_system_spec(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ConfigInvalid, std::string("malformed JSON: ") + e.what());
  }
  return parse_system(Node(j, ""));
}

std::string system_spec_to_json(const SystemSpec& spec, int indent) { return system_json(spec).dump(indent); }

ExperimentConfig parse_experiment_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ConfigInvalid, std::string("malformed JSON: ") + e.what());
  }
  const Node root(j, "");
  root.allow({"kind", "system", "sweep", "drive_rule", "readout", "truncation", "calibration", "ladder", "output",
              "seed", "threads"});
  ExperimentConfig cfg;
  cfg.kind = experiment_kind_from_string(root.string("kind"));
  cfg.system = parse_system(root.object("system"));
  if (root.has("sweep")) {
    const Node sweep = root.object("sweep");
    for (const auto& [name, value] : root.at("sweep").items()) {
      cfg.sweep[name] = parse_axis(Node(value, sweep.child(name)), sweep.child(name));
    }
  }
  if (root.has("drive_rule")) cfg.drive_rule = drive_rule_from_string(root.string("drive_rule"));
  if (root.has("readout")) {
    const Node r = root.object("readout");
    r.allow({"witness", "linewidth", "points_per_linewidth", "min_prominence", "tolerance_chi", "noise"});
    if (r.has("witness")) cfg.readout.witness = parse_witness(r.object("witness"));
    if (r.has("linewidth")) cfg.readout.linewidth = r.number("linewidth");
    cfg.readout.points_per_linewidth = r.number("points_per_linewidth", cfg.readout.points_per_linewidth);
    cfg.readout.min_prominence = r.number("min_prominence", cfg.readout.min_prominence);
    cfg.readout.tolerance_chi = r.number("tolerance_chi", cfg.readout.tolerance_chi);
    cfg.readout.noise = r.number("noise", cfg.readout.noise);
  }
  if (root.has("truncation")) {
    const Node t = root.object("truncation");
    t.allow({"adaptive", "tail_tolerance", "max"});
    cfg.truncation.adaptive = t.boolean("adaptive", cfg.truncation.adaptive);
    cfg.truncation.tail_tolerance = t.number("tail_tolerance", cfg.truncation.tail_tolerance);
    cfg.truncation.max_truncation = t.integer("max", cfg.truncation.max_truncation);
  }
  if (root.has("calibration")) {
    const Node c = root.object("calibration");
    c.allow({"eta_per_volt", "duration_us", "samples", "fit_points"});
    cfg.calibration.eta_per_volt = c.number("eta_per_volt", cfg.calibration.eta_per_volt);
    cfg.calibration.duration_us = c.number("duration_us", cfg.calibration.duration_us);
    cfg.calibration.samples = c.integer("samples", cfg.calibration.samples);
    const int fit_points = c.integer("fit_points", static_cast<int>(cfg.calibration.fit_points));
    if (fit_points < 2) invalid(c.child("fit_points"), "must be >= 2");
    cfg.calibration.fit_points = static_cast<std::size_t>(fit_points);
  }
  if (root.has("ladder")) {
    const Node l = root.object("ladder");
    l.allow({"emitters", "n_max"});
    if (l.has("emitters")) {
      const json& e = l.at("emitters");
      cfg.ladder.emitters.clear();
      if (e.is_number_integer()) {
        cfg.ladder.emitters.push_back(e.get<int>());
      } else if (e.is_array()) {
        for (const auto& x : e) {
          if (!x.is_number_integer()) invalid(l.child("emitters"), "expected integers");
          cfg.ladder.emitters.push_back(x.get<int>());
        }
      } else {
        invalid(l.child("emitters"), "expected an integer or a list of integers");
      }
    }
    cfg.ladder.n_max = l.integer("n_max", cfg.ladder.n_max);
  }
  cfg.output = root.string("output", "");
  if (root.has("seed")) {
    if (!root.at("seed").is_number_unsigned()) invalid("seed", "expected a nonnegative integer");
    cfg.seed = root.at("seed").get<std::uint64_t>();
  }
  cfg.threads = root.integer("threads", cfg.threads);
  cfg.validate();
  return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open config '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  try {
    return parse_experiment_config(text.str());
  } catch (const Error& e) {
    throw Error(e.code(), path + ": " + e.what());
  }
}

std::string experiment_config_to_json(const ExperimentConfig& cfg, int indent) {
  ordered_json j;
  j["kind"] = to_string(cfg.kind);
  j["system"] = system_json(cfg.system);
  ordered_json sweep = ordered_json::object();
  for (const auto& [name, axis] : cfg.sweep) sweep[name] = {{"values", axis.values}, {"unit", unit_name(axis.unit)}};
  j["sweep"] = std::move(sweep);
  j["drive_rule"] = to_string(cfg.drive_rule);
  const Witness& w = cfg.readout.witness;
  ordered_json readout;
  readout["witness"] = {{"freq", w.freq},
                        {"coupling", w.coupling},
                        {"anharmonicity", w.anharmonicity},
                        {"decay", w.decay},
                        {"levels", w.levels}};
  if (cfg.readout.linewidth) readout["linewidth"] = *cfg.readout.linewidth;
  readout["points_per_linewidth"] = cfg.readout.points_per_linewidth;
  readout["min_prominence"] = cfg.readout.min_prominence;
  readout["tolerance_chi"] = cfg.readout.tolerance_chi;
  readout["noise"] = cfg.readout.noise;
  j["readout"] = std::move(readout);
  j["truncation"] = {{"adaptive", cfg.truncation.adaptive},
                     {"tail_tolerance", cfg.truncation.tail_tolerance},
                     {"max", cfg.truncation.max_truncation}};
  j["calibration"] = {{"eta_per_volt", cfg.calibration.eta_per_volt},
                      {"duration_us", cfg.calibration.duration_us},
                      {"samples", cfg.calibration.samples},
                      {"fit_points", cfg.calibration.fit_points}};
  j["ladder"] = {{"emitters", cfg.ladder.emitters}, {"n_max", cfg.ladder.n_max}};
  j["output"] = cfg.output;
  if (cfg.seed) j["seed"] = *cfg.seed;
  j["threads"] = cfg.threads;
  return j.dump(indent);
}

}  // namespace blockade
