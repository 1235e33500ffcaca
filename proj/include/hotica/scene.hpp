#pragma once

// Continuous-wave MIMO Doppler radar scene: chest displacement of each
// target modulates the two-leg propagation path between every Tx/Rx pair.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "hotica/common.hpp"
#include "hotica/grid.hpp"

namespace hotica {

struct TargetVitals {
  double resp_amplitude = 0.0;  // m
  double resp_freq = 1.0;       // Hz
  double resp_phase = 0.0;      // rad
  double heart_amplitude = 0.0;
  double heart_freq = 1.0;
  double heart_phase = 0.0;
};

struct ScatterPoint {
  Vec2 position;
  TargetVitals vitals;
  Vec2 displacement_axis{0.0, -1.0};
};

struct AntennaSpec {
  Vec2 position;
  Vec2 boresight{0.0, 1.0};
  double directivity_exponent = 2.0;
};

/// An obstruction between one target and one receive antenna. The receive
/// chain behind it runs with raised gain, so its noise is boosted as well.
struct ObstacleSpec {
  std::size_t blocked_target = 0;
  std::size_t blocked_rx = 0;
  double attenuation_db = 0.0;
  double noise_boost_db = 0.0;
};

struct SceneConfig {
  std::vector<ScatterPoint> targets;
  std::vector<AntennaSpec> tx;
  std::vector<AntennaSpec> rx;
  double wavelength = 0.1224;
  double scatter_coeff = 0.068;
  double noise_coeff = 0.5e-5;
  double sample_rate = 11.3;
  double duration = 70.0;
  std::vector<ObstacleSpec> obstacles;
  std::uint64_t rng_seed = 1;

  std::size_t sample_count() const {
    return static_cast<std::size_t>(std::llround(duration * sample_rate));
  }
};

namespace detail {

inline void require(bool ok, ErrorKind kind, const std::string& msg) {
  if (!ok) throw Error(kind, msg);
}

inline bool unit_norm(Vec2 v) { return std::abs(norm(v) - 1.0) <= 1e-12; }

}  // namespace detail

/// Throws Error(config) naming the offending field.
inline void validate(const SceneConfig& scene) {
  using detail::require;
  const auto cfg = ErrorKind::config;
  require(scene.wavelength > 0.0, cfg, "scene.wavelength must be > 0");
  require(scene.sample_rate > 0.0, cfg, "scene.sample_rate must be > 0");
  require(scene.duration > 0.0, cfg, "scene.duration must be > 0");
  require(scene.scatter_coeff > 0.0, cfg, "scene.scatter_coeff must be > 0");
  require(scene.noise_coeff >= 0.0, cfg, "scene.noise_coeff must be >= 0");
  require(!scene.tx.empty(), cfg, "scene.tx must list at least one antenna");
  require(!scene.rx.empty(), cfg, "scene.rx must list at least one antenna");
  for (std::size_t k = 0; k < scene.targets.size(); ++k) {
    const auto& t = scene.targets[k];
    const std::string path = "scene.targets[" + std::to_string(k) + "]";
    require(detail::unit_norm(t.displacement_axis), cfg,
            path + ".displacement_axis must have unit norm");
    const auto& v = t.vitals;
    require(v.resp_amplitude >= 0.0 && v.heart_amplitude >= 0.0, cfg,
            path + ".vitals amplitudes must be >= 0");
    require(v.resp_freq > 0.0 && v.heart_freq > 0.0, cfg,
            path + ".vitals frequencies must be > 0");
  }
  auto check_antennas = [&](const std::vector<AntennaSpec>& list, const char* name) {
    for (std::size_t i = 0; i < list.size(); ++i) {
      const std::string path = std::string("scene.") + name + "[" + std::to_string(i) + "]";
      require(detail::unit_norm(list[i].boresight), cfg, path + ".boresight must have unit norm");
      require(list[i].directivity_exponent >= 0.0, cfg,
              path + ".directivity_exponent must be >= 0");
    }
  };
  check_antennas(scene.tx, "tx");
  check_antennas(scene.rx, "rx");
  for (std::size_t i = 0; i < scene.obstacles.size(); ++i) {
    const auto& o = scene.obstacles[i];
    const std::string path = "scene.obstacles[" + std::to_string(i) + "]";
    require(o.blocked_target < scene.targets.size(), cfg, path + ".blocked_target out of range");
    require(o.blocked_rx < scene.rx.size(), cfg, path + ".blocked_rx out of range");
    require(o.attenuation_db <= 0.0, cfg, path + ".attenuation_db must be <= 0");
    require(o.noise_boost_db >= 0.0, cfg, path + ".noise_boost_db must be >= 0");
  }
}

inline double displacement(const TargetVitals& v, double t) {
  return v.resp_amplitude * std::sin(2.0 * kPi * v.resp_freq * t + v.resp_phase) +
         v.heart_amplitude * std::sin(2.0 * kPi * v.heart_freq * t + v.heart_phase);
}

/// Static distance minus the displacement projected on the line of sight.
inline double path_length(const AntennaSpec& antenna, const ScatterPoint& target, double t) {
  const Vec2 los = antenna.position - target.position;
  const double static_len = norm(los);
  if (static_len < 1e-12) throw Error(ErrorKind::geometry, "antenna coincides with target");
  const double cos_theta = dot((1.0 / static_len) * los, target.displacement_axis);
  return static_len - displacement(target.vitals, t) * cos_theta;
}

/// max(0, cos)^q lobe around the boresight; q = 0 is isotropic.
inline double directivity_gain(const AntennaSpec& antenna, Vec2 toward) {
  const double c = std::max(0.0, dot(antenna.boresight, toward));
  return std::pow(c, antenna.directivity_exponent);
}

/// Circular complex Gaussian source: real and imaginary parts are
/// independent N(0, 1). Owned by the caller so runs can be split by seed.
class NoiseStream {
 public:
  explicit NoiseStream(std::uint64_t seed) : engine_(seed) {}

  cplx next() {
    const double re = normal_(engine_);
    const double im = normal_(engine_);
    return {re, im};
  }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

inline ChannelGrid synthesize_frame(const SceneConfig& scene, double t, NoiseStream& noise) {
  const std::size_t pt = scene.tx.size();
  const std::size_t pr = scene.rx.size();
  ChannelGrid grid(pt, pr);
  const double k0 = 2.0 * kPi / scene.wavelength;

  auto leg = [&](const AntennaSpec& antenna, const ScatterPoint& target) {
    const double len = path_length(antenna, target, t);
    const Vec2 toward = target.position - antenna.position;
    const double gain = directivity_gain(antenna, (1.0 / norm(toward)) * toward);
    return gain * std::polar(1.0, k0 * len) / len;
  };

  std::vector<cplx> rx_leg(pr);
  for (std::size_t k = 0; k < scene.targets.size(); ++k) {
    const auto& target = scene.targets[k];
    for (std::size_t n = 0; n < pr; ++n) {
      double amp = 1.0;
      for (const auto& o : scene.obstacles) {
        if (o.blocked_target == k && o.blocked_rx == n) amp *= std::pow(10.0, o.attenuation_db / 20.0);
      }
      rx_leg[n] = amp * scene.scatter_coeff * leg(scene.rx[n], target);
    }
    for (std::size_t m = 0; m < pt; ++m) {
      const cplx tx_leg = leg(scene.tx[m], target);
      for (std::size_t n = 0; n < pr; ++n) grid(m, n) += tx_leg * rx_leg[n];
    }
  }

  if (scene.noise_coeff > 0.0) {
    std::vector<double> boost(pr, 1.0);
    for (const auto& o : scene.obstacles) boost[o.blocked_rx] *= std::pow(10.0, o.noise_boost_db / 20.0);
    for (std::size_t m = 0; m < pt; ++m) {
      for (std::size_t n = 0; n < pr; ++n) grid(m, n) += scene.noise_coeff * boost[n] * noise.next();
    }
  }
  return grid;
}

/// Frames at t = i / sample_rate for i in [0, sample_count).
inline std::vector<ChannelGrid> synthesize_series(const SceneConfig& scene) {
  validate(scene);
  NoiseStream noise(scene.rng_seed);
  const std::size_t count = scene.sample_count();
  std::vector<ChannelGrid> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    out.push_back(synthesize_frame(scene, static_cast<double>(i) / scene.sample_rate, noise));
  }
  return out;
}

}  // namespace hotica
