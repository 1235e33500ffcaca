#pragma once

// Experiment configuration: JSON schema, validation with field paths, and
// the bundled presets.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hotica/common.hpp"
#include "hotica/easi.hpp"
#include "hotica/hot_ica.hpp"
#include "hotica/scene.hpp"
#include "hotica/spectral.hpp"

namespace hotica {

using nlohmann::json;

enum class Separator { cf, hot };

struct ExperimentConfig {
  std::string name = "custom";
  SceneConfig scene;
  StftPlan stft;
  LearnConfig learn;
  SensitivityProfile sensitivity;  // empty means neutral
  Separator separator = Separator::hot;

  SensitivityProfile effective_profile() const {
    SensitivityProfile p = sensitivity;
    if (p.eta_tx.empty()) p.eta_tx.assign(scene.tx.size(), 1.0);
    if (p.eta_rx.empty()) p.eta_rx.assign(scene.rx.size(), 1.0);
    return p;
  }
};

inline void validate(const ExperimentConfig& cfg) {
  validate(cfg.scene);
  validate(cfg.stft);
  if (std::abs(cfg.stft.sample_rate - cfg.scene.sample_rate) > 0.0) {
    throw Error(ErrorKind::config, "stft.sample_rate must equal scene.sample_rate");
  }
  validate(cfg.learn);
  validate(cfg.effective_profile(), cfg.scene.tx.size(), cfg.scene.rx.size());
}

namespace detail {

class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(path_, "expected an object");
  }

  [[noreturn]] static void fail(const std::string& path, const std::string& what) {
    throw Error(ErrorKind::config, path + ": " + what);
  }

  bool has(const char* key) const { return j_.contains(key); }
  std::string path(const char* key) const { return path_ + "." + key; }

  double number(const char* key, double fallback) const {
    if (!has(key)) return fallback;
    return number_at(j_.at(key), path(key));
  }
  double number(const char* key) const {
    if (!has(key)) fail(path(key), "missing required field");
    return number_at(j_.at(key), path(key));
  }
  std::uint64_t uint(const char* key, std::uint64_t fallback) const {
    if (!has(key)) return fallback;
    const auto& v = j_.at(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
      fail(path(key), "expected a non-negative integer");
    }
    return v.get<std::uint64_t>();
  }
  bool boolean(const char* key, bool fallback) const {
    if (!has(key)) return fallback;
    if (!j_.at(key).is_boolean()) fail(path(key), "expected true or false");
    return j_.at(key).get<bool>();
  }
  std::string string(const char* key, const std::string& fallback) const {
    if (!has(key)) return fallback;
    if (!j_.at(key).is_string()) fail(path(key), "expected a string");
    return j_.at(key).get<std::string>();
  }
  Vec2 vec2(const char* key, Vec2 fallback) const {
    if (!has(key)) return fallback;
    return vec2_at(j_.at(key), path(key));
  }
  Vec2 vec2(const char* key) const {
    if (!has(key)) fail(path(key), "missing required field");
    return vec2_at(j_.at(key), path(key));
  }
  std::vector<double> numbers(const char* key) const {
    std::vector<double> out;
    if (!has(key)) return out;
    const auto& v = j_.at(key);
    if (!v.is_array()) fail(path(key), "expected an array of numbers");
    for (std::size_t i = 0; i < v.size(); ++i) {
      out.push_back(number_at(v[i], path(key) + "[" + std::to_string(i) + "]"));
    }
    return out;
  }
  const json& array(const char* key) const {
    static const json empty = json::array();
    if (!has(key)) return empty;
    if (!j_.at(key).is_array()) fail(path(key), "expected an array");
    return j_.at(key);
  }
  const json& at(const char* key) const { return j_.at(key); }

 private:
  static double number_at(const json& v, const std::string& path) {
    if (!v.is_number()) fail(path, "expected a number");
    return v.get<double>();
  }
  static Vec2 vec2_at(const json& v, const std::string& path) {
    if (!v.is_array() || v.size() != 2) fail(path, "expected [x, y]");
    return {number_at(v[0], path + "[0]"), number_at(v[1], path + "[1]")};
  }

  const json& j_;
  std::string path_;
};

inline json to_json(Vec2 v) { return json::array({v.x, v.y}); }

inline AntennaSpec antenna_from_json(const json& j, const std::string& path) {
  Reader r(j, path);
  AntennaSpec a;
  a.position = r.vec2("position");
  a.boresight = r.vec2("boresight", a.boresight);
  a.directivity_exponent = r.number("directivity_exponent", a.directivity_exponent);
  return a;
}

inline json antenna_to_json(const AntennaSpec& a) {
  return {{"position", to_json(a.position)},
          {"boresight", to_json(a.boresight)},
          {"directivity_exponent", a.directivity_exponent}};
}

}  // namespace detail

inline Taper taper_from_string(const std::string& s, const std::string& path) {
  if (s == "rectangular") return Taper::rectangular;
  if (s == "hann") return Taper::hann;
  detail::Reader::fail(path, "unknown taper '" + s + "' (rectangular|hann)");
}

inline std::string to_string(Taper t) { return t == Taper::hann ? "hann" : "rectangular"; }
inline std::string to_string(Separator s) { return s == Separator::cf ? "cf" : "hot"; }
inline std::string to_string(BinAggregation a) {
  return a == BinAggregation::averaged ? "averaged" : "sequential";
}
inline std::string to_string(InitKind k) { return k == InitKind::scaled_random ? "scaled_random" : "identity"; }

inline Separator separator_from_string(const std::string& s, const std::string& path = "separator") {
  if (s == "cf") return Separator::cf;
  if (s == "hot") return Separator::hot;
  detail::Reader::fail(path, "unknown separator '" + s + "' (cf|hot)");
}

inline SceneConfig scene_from_json(const json& j) {
  detail::Reader r(j, "scene");
  SceneConfig s;
  s.wavelength = r.number("wavelength", s.wavelength);
  s.scatter_coeff = r.number("scatter_coeff", s.scatter_coeff);
  s.noise_coeff = r.number("noise_coeff", s.noise_coeff);
  s.sample_rate = r.number("sample_rate", s.sample_rate);
  s.duration = r.number("duration", s.duration);
  s.rng_seed = r.uint("rng_seed", s.rng_seed);

  const auto& targets = r.array("targets");
  for (std::size_t k = 0; k < targets.size(); ++k) {
    const std::string path = "scene.targets[" + std::to_string(k) + "]";
    detail::Reader t(targets[k], path);
    ScatterPoint sp;
    sp.position = t.vec2("position");
    // Chest motion defaults to pointing at the array origin.
    const double d = norm(sp.position);
    Vec2 fallback = d > 0.0 ? (-1.0 / d) * sp.position : Vec2{0.0, -1.0};
    sp.displacement_axis = t.vec2("displacement_axis", fallback);
    if (!t.has("vitals")) detail::Reader::fail(path + ".vitals", "missing required field");
    detail::Reader v(t.at("vitals"), path + ".vitals");
    sp.vitals.resp_amplitude = v.number("resp_amplitude");
    sp.vitals.resp_freq = v.number("resp_freq");
    sp.vitals.resp_phase = v.number("resp_phase", 0.0);
    sp.vitals.heart_amplitude = v.number("heart_amplitude");
    sp.vitals.heart_freq = v.number("heart_freq");
    sp.vitals.heart_phase = v.number("heart_phase", 0.0);
    s.targets.push_back(sp);
  }
  const auto& tx = r.array("tx");
  for (std::size_t i = 0; i < tx.size(); ++i) {
    s.tx.push_back(detail::antenna_from_json(tx[i], "scene.tx[" + std::to_string(i) + "]"));
  }
  const auto& rx = r.array("rx");
  for (std::size_t i = 0; i < rx.size(); ++i) {
    s.rx.push_back(detail::antenna_from_json(rx[i], "scene.rx[" + std::to_string(i) + "]"));
  }
  const auto& obstacles = r.array("obstacles");
  for (std::size_t i = 0; i < obstacles.size(); ++i) {
    detail::Reader o(obstacles[i], "scene.obstacles[" + std::to_string(i) + "]");
    ObstacleSpec spec;
    spec.blocked_target = static_cast<std::size_t>(o.uint("blocked_target", 0));
    spec.blocked_rx = static_cast<std::size_t>(o.uint("blocked_rx", 0));
    spec.attenuation_db = o.number("attenuation_db", 0.0);
    spec.noise_boost_db = o.number("noise_boost_db", 0.0);
    s.obstacles.push_back(spec);
  }
  return s;
}

inline json to_json(const SceneConfig& s) {
  json targets = json::array();
  for (const auto& t : s.targets) {
    targets.push_back({{"position", detail::to_json(t.position)},
                       {"displacement_axis", detail::to_json(t.displacement_axis)},
                       {"vitals",
                        {{"resp_amplitude", t.vitals.resp_amplitude},
                         {"resp_freq", t.vitals.resp_freq},
                         {"resp_phase", t.vitals.resp_phase},
                         {"heart_amplitude", t.vitals.heart_amplitude},
                         {"heart_freq", t.vitals.heart_freq},
                         {"heart_phase", t.vitals.heart_phase}}}});
  }
  json tx = json::array(), rx = json::array(), obstacles = json::array();
  for (const auto& a : s.tx) tx.push_back(detail::antenna_to_json(a));
  for (const auto& a : s.rx) rx.push_back(detail::antenna_to_json(a));
  for (const auto& o : s.obstacles) {
    obstacles.push_back({{"blocked_target", o.blocked_target},
                         {"blocked_rx", o.blocked_rx},
                         {"attenuation_db", o.attenuation_db},
                         {"noise_boost_db", o.noise_boost_db}});
  }
  return {{"wavelength", s.wavelength},   {"scatter_coeff", s.scatter_coeff},
          {"noise_coeff", s.noise_coeff}, {"sample_rate", s.sample_rate},
          {"duration", s.duration},       {"rng_seed", s.rng_seed},
          {"targets", targets},           {"tx", tx},
          {"rx", rx},                     {"obstacles", obstacles}};
}

inline ExperimentConfig experiment_from_json(const json& j) {
  detail::Reader r(j, "config");
  ExperimentConfig cfg;
  cfg.name = r.string("name", cfg.name);
  if (!r.has("scene")) detail::Reader::fail("config.scene", "missing required field");
  cfg.scene = scene_from_json(r.at("scene"));

  cfg.stft.sample_rate = cfg.scene.sample_rate;
  if (r.has("stft")) {
    detail::Reader s(r.at("stft"), "stft");
    cfg.stft.window_len = static_cast<std::size_t>(s.uint("window_len", cfg.stft.window_len));
    cfg.stft.hop = static_cast<std::size_t>(s.uint("hop", cfg.stft.hop));
    cfg.stft.band_lo = s.number("band_lo", cfg.stft.band_lo);
    cfg.stft.band_hi = s.number("band_hi", cfg.stft.band_hi);
    cfg.stft.taper = taper_from_string(s.string("taper", "rectangular"), "stft.taper");
  }
  if (r.has("learn")) {
    detail::Reader l(r.at("learn"), "learn");
    cfg.learn.learning_rate = l.number("learning_rate", cfg.learn.learning_rate);
    const auto nl = l.string("nonlinearity", "split_tanh");
    if (nl != "split_tanh") detail::Reader::fail("learn.nonlinearity", "unknown nonlinearity '" + nl + "'");
    const auto init = l.string("init", "identity");
    if (init == "identity") {
      cfg.learn.init = InitKind::identity;
    } else if (init == "scaled_random") {
      cfg.learn.init = InitKind::scaled_random;
    } else {
      detail::Reader::fail("learn.init", "unknown init '" + init + "' (identity|scaled_random)");
    }
    cfg.learn.rms_floor = l.number("rms_floor", cfg.learn.rms_floor);
    const auto agg = l.string("aggregation", "sequential");
    if (agg == "sequential") {
      cfg.learn.aggregation = BinAggregation::sequential;
    } else if (agg == "averaged") {
      cfg.learn.aggregation = BinAggregation::averaged;
    } else {
      detail::Reader::fail("learn.aggregation", "unknown aggregation '" + agg + "' (sequential|averaged)");
    }
    cfg.learn.plus_third_term = l.boolean("plus_third_term", false);
    cfg.learn.init_seed = l.uint("init_seed", 0);
    cfg.learn.divergence_limit = l.number("divergence_limit", cfg.learn.divergence_limit);
  }
  if (r.has("sensitivity")) {
    detail::Reader s(r.at("sensitivity"), "sensitivity");
    cfg.sensitivity.eta_tx = s.numbers("eta_tx");
    cfg.sensitivity.eta_rx = s.numbers("eta_rx");
  }
  cfg.separator = separator_from_string(r.string("separator", "hot"));
  validate(cfg);
  return cfg;
}

inline json to_json(const ExperimentConfig& cfg) {
  const auto profile = cfg.effective_profile();
  return {{"name", cfg.name},
          {"scene", to_json(cfg.scene)},
          {"stft",
           {{"window_len", cfg.stft.window_len},
            {"hop", cfg.stft.hop},
            {"band_lo", cfg.stft.band_lo},
            {"band_hi", cfg.stft.band_hi},
            {"taper", to_string(cfg.stft.taper)}}},
          {"learn",
           {{"learning_rate", cfg.learn.learning_rate},
            {"nonlinearity", "split_tanh"},
            {"init", to_string(cfg.learn.init)},
            {"rms_floor", cfg.learn.rms_floor},
            {"aggregation", to_string(cfg.learn.aggregation)},
            {"plus_third_term", cfg.learn.plus_third_term},
            {"init_seed", cfg.learn.init_seed},
            {"divergence_limit", cfg.learn.divergence_limit}}},
          {"sensitivity", {{"eta_tx", profile.eta_tx}, {"eta_rx", profile.eta_rx}}},
          {"separator", to_string(cfg.separator)}};
}

inline ExperimentConfig load_experiment(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::config, "cannot open config file '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::config, path + ": " + e.what());
  }
  return experiment_from_json(j);
}

// ---------------------------------------------------------------------------
// Presets

/// Respiration/heartbeat parameters of the four reference targets.
inline std::vector<TargetVitals> reference_vitals() {
  return {
      {0.5e-3, 0.40, 0.0, 0.05e-3, 1.19, 0.0},
      {0.5e-3, 0.31, kPi / 6.0, 0.04e-3, 1.10, kPi / 6.0},
      {0.5e-3, 0.71, 3.0 * kPi / 4.0, 0.06e-3, 1.32, 3.0 * kPi / 4.0},
      {0.5e-3, 0.53, kPi, 0.03e-3, 1.06, kPi},
  };
}

/// Tx and Rx alternate along the x axis (Tx first) at `spacing`, centred on
/// the origin, all looking along +y.
inline void interleaved_array(SceneConfig& scene, std::size_t tx_count, std::size_t rx_count,
                              double spacing = 0.5) {
  const std::size_t total = tx_count + rx_count;
  auto x_of = [&](std::size_t slot) {
    return (static_cast<double>(slot) - static_cast<double>(total - 1) / 2.0) * spacing;
  };
  scene.tx.clear();
  scene.rx.clear();
  std::size_t slot = 0;
  for (std::size_t i = 0; i < std::max(tx_count, rx_count); ++i) {
    if (i < tx_count) scene.tx.push_back({{x_of(slot++), 0.0}, {0.0, 1.0}, 2.0});
    if (i < rx_count) scene.rx.push_back({{x_of(slot++), 0.0}, {0.0, 1.0}, 2.0});
  }
}

/// Target at `range` metres and `angle_deg` off the +y axis, chest moving
/// toward the origin.
inline ScatterPoint target_at(double range, double angle_deg, const TargetVitals& vitals) {
  const double a = angle_deg * kPi / 180.0;
  const Vec2 pos{range * std::sin(a), range * std::cos(a)};
  return {pos, vitals, (-1.0 / range) * pos};
}

inline const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names = {"clean3x3", "obstacle2x2_cf", "obstacle2x2_hot_nocontrol",
                                                 "obstacle2x2_hot_control"};
  return names;
}

inline ExperimentConfig make_preset(const std::string& name) {
  ExperimentConfig cfg;
  cfg.name = name;
  const auto vitals = reference_vitals();
  if (name == "clean3x3") {
    interleaved_array(cfg.scene, 3, 3);
    const double ranges[] = {3.0, 2.5, 3.5, 4.0};
    const double angles[] = {-40.0, -10.0, 20.0, 45.0};
    for (std::size_t k = 0; k < 4; ++k) cfg.scene.targets.push_back(target_at(ranges[k], angles[k], vitals[k]));
  } else if (name == "obstacle2x2_cf" || name == "obstacle2x2_hot_nocontrol" ||
             name == "obstacle2x2_hot_control") {
    interleaved_array(cfg.scene, 2, 2);
    cfg.scene.targets.push_back(target_at(3.0, -20.0, vitals[0]));
    cfg.scene.targets.push_back(target_at(3.0, 20.0, vitals[1]));
    cfg.scene.obstacles.push_back({0, 0, -50.0, 16.0});
    cfg.separator = name == "obstacle2x2_cf" ? Separator::cf : Separator::hot;
    if (name == "obstacle2x2_hot_control") cfg.sensitivity = {{1.0, 1.0}, {0.0, 1.0}};
  } else {
    throw Error(ErrorKind::config, "unknown preset '" + name + "'");
  }
  cfg.stft.sample_rate = cfg.scene.sample_rate;
  return cfg;
}

}  // namespace hotica
