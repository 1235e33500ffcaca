#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "hotica/config.hpp"
#include "hotica/scene.hpp"

using namespace hotica;

namespace {

TargetVitals h1() { return reference_vitals()[0]; }

SceneConfig single_path_scene() {
  SceneConfig s;
  s.tx = {{{0.0, 0.0}, {0.0, 1.0}, 0.0}};
  s.rx = {{{1.0, 0.0}, {0.0, 1.0}, 0.0}};
  ScatterPoint target{{0.0, 3.0}, TargetVitals{0.0, 0.4, 0.0, 0.0, 1.0, 0.0}, {0.0, -1.0}};
  s.targets = {target};
  s.noise_coeff = 0.0;
  s.duration = 1.0;
  s.sample_rate = 10.0;
  return s;
}

}  // namespace

TEST(Displacement, ZeroAtOriginWithZeroPhase) { EXPECT_EQ(displacement(h1(), 0.0), 0.0); }

TEST(Displacement, QuarterRespirationPeriod) {
  // Independent scalar evaluation: 0.5e-3 + 0.05e-3 sin(2 pi 1.19 0.625).
  EXPECT_NEAR(displacement(h1(), 0.625), 0.00045003854818796387, 1e-18);
}

TEST(Displacement, PhasePiVanishesAtZero) {
  EXPECT_NEAR(displacement(reference_vitals()[3], 0.0), 0.0, 1e-18);
}

TEST(PathLength, StaticDistance) {
  AntennaSpec a{{0.0, 0.0}};
  ScatterPoint t{{0.0, 3.0}, {}, {0.0, -1.0}};
  EXPECT_DOUBLE_EQ(path_length(a, t, 0.0), 3.0);
}

TEST(PathLength, DisplacementAlongLineOfSight) {
  AntennaSpec a{{0.0, 0.0}};
  // resp term equals 1e-3 at t = 0 through a pi/2 phase.
  ScatterPoint t{{0.0, 3.0}, TargetVitals{1e-3, 0.25, kPi / 2.0, 0.0, 1.0, 0.0}, {0.0, -1.0}};
  EXPECT_NEAR(path_length(a, t, 0.0), 2.999, 1e-15);
}

TEST(PathLength, PerpendicularAxisKeepsStaticDistance) {
  AntennaSpec a{{0.0, 0.0}};
  ScatterPoint t{{0.0, 3.0}, TargetVitals{1e-3, 0.25, kPi / 2.0, 0.0, 1.0, 0.0}, {1.0, 0.0}};
  EXPECT_EQ(path_length(a, t, 0.0), 3.0);
}

TEST(PathLength, CoincidentPositionsAreAGeometryError) {
  AntennaSpec a{{1.0, 2.0}};
  ScatterPoint t{{1.0, 2.0}, {}, {0.0, -1.0}};
  try {
    path_length(a, t, 0.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::geometry);
  }
}

TEST(Directivity, IsotropicAndLobe) {
  AntennaSpec iso{{0, 0}, {0, 1}, 0.0};
  EXPECT_EQ(directivity_gain(iso, {1.0, 0.0}), 1.0);
  EXPECT_EQ(directivity_gain(iso, {0.0, -1.0}), 1.0);
  AntennaSpec lobe{{0, 0}, {0, 1}, 2.0};
  EXPECT_EQ(directivity_gain(lobe, {0.0, 1.0}), 1.0);
  const double a = 60.0 * kPi / 180.0;
  EXPECT_NEAR(directivity_gain(lobe, {std::sin(a), std::cos(a)}), 0.25, 1e-15);
  EXPECT_EQ(directivity_gain(lobe, {0.0, -1.0}), 0.0);
}

TEST(SynthesizeFrame, EmptySceneIsZero) {
  auto s = single_path_scene();
  s.targets.clear();
  NoiseStream noise(1);
  const auto g = synthesize_frame(s, 0.0, noise);
  EXPECT_EQ(g(0, 0), cplx(0.0, 0.0));
}

TEST(SynthesizeFrame, SinglePathClosedForm) {
  // sigma exp(j 2 pi (3 + sqrt 10) / lambda) / (3 sqrt 10), evaluated offline.
  const auto s = single_path_scene();
  NoiseStream noise(1);
  const auto g = synthesize_frame(s, 0.0, noise);
  EXPECT_NEAR(g(0, 0).real(), -0.004044017334857896, 1e-15);
  EXPECT_NEAR(g(0, 0).imag(), 0.005918082592626316, 1e-15);
}

TEST(SynthesizeFrame, CoincidentTargetRaises) {
  auto s = single_path_scene();
  s.targets[0].position = s.rx[0].position;
  NoiseStream noise(1);
  EXPECT_THROW(synthesize_frame(s, 0.0, noise), Error);
}

TEST(SynthesizeSeries, CountAndDeterminism) {
  auto s = single_path_scene();
  s.noise_coeff = 1e-3;
  const auto a = synthesize_series(s);
  const auto b = synthesize_series(s);
  EXPECT_EQ(a.size(), 10u);
  EXPECT_EQ(a, b);
  s.rng_seed = 2;
  EXPECT_NE(a, synthesize_series(s));
}

TEST(SynthesizeSeries, ReferenceSceneSampleCount) {
  const auto cfg = make_preset("clean3x3");
  EXPECT_EQ(cfg.scene.sample_count(), 791u);
  EXPECT_EQ(synthesize_series(cfg.scene).size(), 791u);
}

TEST(SceneProperties, StaticSceneIsConstant) {
  auto cfg = make_preset("clean3x3");
  cfg.scene.noise_coeff = 0.0;
  for (auto& t : cfg.scene.targets) t.vitals.resp_amplitude = t.vitals.heart_amplitude = 0.0;
  cfg.scene.duration = 2.0;
  const auto series = synthesize_series(cfg.scene);
  for (const auto& g : series) EXPECT_EQ(g, series.front());
}

TEST(SceneProperties, PhaseDeviationIsLinearInSmallDisplacement) {
  auto s = single_path_scene();
  auto phase_dev = [&](double amp) {
    s.targets[0].vitals = {amp, 0.25, kPi / 2.0, 0.0, 1.0, 0.0};
    NoiseStream n(1);
    const cplx moved = synthesize_frame(s, 0.0, n)(0, 0);
    s.targets[0].vitals.resp_amplitude = 0.0;
    const cplx still = synthesize_frame(s, 0.0, n)(0, 0);
    return std::arg(moved / still);
  };
  const double lambda = s.wavelength;
  for (double d : {lambda / 1000.0, lambda / 400.0}) {
    const double one = phase_dev(d), two = phase_dev(2.0 * d);
    EXPECT_NEAR(two / one, 2.0, 0.02) << "displacement " << d;
  }
}

TEST(SceneProperties, ObstacleAttenuatesBlockedLeg) {
  auto cfg = make_preset("obstacle2x2_hot_nocontrol");
  cfg.scene.noise_coeff = 0.0;
  cfg.scene.targets.resize(1);
  auto blocked = cfg.scene;
  auto open = cfg.scene;
  open.obstacles.clear();
  NoiseStream n1(1), n2(1);
  const auto gb = synthesize_frame(blocked, 0.3, n1);
  const auto go = synthesize_frame(open, 0.3, n2);
  for (std::size_t m = 0; m < 2; ++m) {
    EXPECT_NEAR(std::abs(gb(m, 0)) / std::abs(go(m, 0)), std::pow(10.0, -2.5), 1e-12);
    EXPECT_EQ(gb(m, 1), go(m, 1));
  }
}

TEST(SceneProperties, NoiseBoostScalesOnlyTheAffectedRx) {
  auto cfg = make_preset("obstacle2x2_hot_nocontrol");
  cfg.scene.targets.clear();
  cfg.scene.obstacles.clear();
  auto boosted = cfg.scene;
  boosted.obstacles.push_back({0, 0, 0.0, 16.0});
  boosted.targets = {target_at(3.0, 0.0, TargetVitals{})};
  auto plain = boosted;
  plain.obstacles.front().noise_boost_db = 0.0;
  plain.targets = boosted.targets;
  boosted.scatter_coeff = plain.scatter_coeff = 1e-300;  // signal negligible
  NoiseStream n1(5), n2(5);
  const auto gb = synthesize_frame(boosted, 0.0, n1);
  const auto gp = synthesize_frame(plain, 0.0, n2);
  const double f = std::pow(10.0, 16.0 / 20.0);
  for (std::size_t m = 0; m < 2; ++m) {
    EXPECT_NEAR(std::abs(gb(m, 0)), f * std::abs(gp(m, 0)), 1e-12 * std::abs(gb(m, 0)));
    EXPECT_EQ(gb(m, 1), gp(m, 1));
  }
}

TEST(SceneProperties, NoiseVarianceIsUnitPerComponent) {
  NoiseStream noise(123);
  const std::size_t n = 200000;
  double sum = 0.0, sq = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double re = noise.next().real();
    sum += re;
    sq += re * re;
  }
  const double mean = sum / n;
  const double var = sq / n - mean * mean;
  EXPECT_NEAR(var, 1.0, 0.03);
}

TEST(SceneValidation, RejectsBadFields) {
  auto s = single_path_scene();
  s.wavelength = 0.0;
  EXPECT_THROW(validate(s), Error);
  s = single_path_scene();
  s.targets[0].displacement_axis = {1.0, 1.0};
  EXPECT_THROW(validate(s), Error);
  s = single_path_scene();
  s.obstacles.push_back({0, 0, 3.0, 0.0});
  EXPECT_THROW(validate(s), Error);
  s = single_path_scene();
  s.rx.clear();
  EXPECT_THROW(validate(s), Error);
}
