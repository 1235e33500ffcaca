#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "hotica/spectral.hpp"
#include "oracles.hpp"

using namespace hotica;

namespace {

std::vector<ChannelGrid> random_series(std::size_t n, std::size_t pt, std::size_t pr, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<ChannelGrid> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(oracle::random_grid(pt, pr, rng));
  return out;
}

std::vector<ChannelGrid> tone_series(std::size_t n, double freq, double fs) {
  std::vector<ChannelGrid> out;
  for (std::size_t i = 0; i < n; ++i) {
    ChannelGrid g(1, 1);
    g(0, 0) = std::cos(2.0 * kPi * freq * static_cast<double>(i) / fs);
    out.push_back(g);
  }
  return out;
}

StftPlan small_plan(std::size_t len, std::size_t hop, Taper taper = Taper::rectangular) {
  StftPlan p;
  p.window_len = len;
  p.hop = hop;
  p.sample_rate = 10.0;
  p.band_lo = 0.5;
  p.band_hi = 5.0;
  p.taper = taper;
  return p;
}

}  // namespace

TEST(Stft, FrameCount) {
  StftPlan plan;
  EXPECT_EQ(stft_frame_count(791, plan), 268u);
  EXPECT_EQ(stft_frame_count(256, plan), 1u);
  EXPECT_EQ(stft_frame_count(255, plan), 0u);
}

TEST(Stft, ShortSeriesIsAnInputError) {
  const auto series = random_series(10, 1, 1, 1);
  try {
    stft_stream(series, small_plan(16, 2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::input);
  }
}

TEST(Stft, MatchesBruteForceDft) {
  for (Taper taper : {Taper::rectangular, Taper::hann}) {
    const auto plan = small_plan(32, 3, taper);
    const auto series = random_series(80, 2, 3, 11);
    const auto frames = stft_stream(series, plan);
    const auto w = taper_weights(plan);
    ASSERT_EQ(frames.size(), stft_frame_count(80, plan));
    for (const auto& f : frames) {
      for (std::size_t ch = 0; ch < 6; ++ch) {
        std::vector<cplx> x(32);
        for (std::size_t t = 0; t < 32; ++t) x[t] = series[f.t_d * 3 + t].flat()[ch];
        const auto ref = oracle::dft(x, w);
        for (std::size_t k = 0; k < 32; ++k) EXPECT_LE(std::abs(f.at(k, ch) - ref[k]), 1e-9);
      }
    }
  }
}

TEST(Stft, Parseval) {
  const auto plan = small_plan(64, 64);
  const auto series = random_series(64, 1, 1, 3);
  const auto frame = stft_stream(series, plan).front();
  double time_energy = 0.0, freq_energy = 0.0;
  for (const auto& g : series) time_energy += std::norm(g(0, 0));
  for (std::size_t k = 0; k < 64; ++k) freq_energy += std::norm(frame.at(k, 0));
  EXPECT_NEAR(freq_energy / 64.0, time_energy, 1e-9 * time_energy);
}

TEST(Stft, Linearity) {
  const auto plan = small_plan(32, 4);
  const auto a = random_series(64, 1, 2, 5);
  const auto b = random_series(64, 1, 2, 6);
  const cplx alpha{0.7, -1.3}, beta{-2.0, 0.25};
  std::vector<ChannelGrid> mix;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ChannelGrid g(1, 2);
    for (std::size_t c = 0; c < 2; ++c) g.flat()[c] = alpha * a[i].flat()[c] + beta * b[i].flat()[c];
    mix.push_back(g);
  }
  const auto fa = stft_stream(a, plan), fb = stft_stream(b, plan), fm = stft_stream(mix, plan);
  for (std::size_t f = 0; f < fm.size(); ++f) {
    for (std::size_t i = 0; i < fm[f].values.size(); ++i) {
      EXPECT_LE(std::abs(fm[f].values[i] - (alpha * fa[f].values[i] + beta * fb[f].values[i])), 1e-10);
    }
  }
}

TEST(Stft, CircularShiftIsAPhaseRamp) {
  const std::size_t n = 32, s = 5;
  const auto plan = small_plan(n, n);
  const auto x = random_series(n, 1, 1, 9);
  std::vector<ChannelGrid> shifted;
  for (std::size_t t = 0; t < n; ++t) shifted.push_back(x[(t + n - s) % n]);
  const auto fx = stft_stream(x, plan).front();
  const auto fs = stft_stream(shifted, plan).front();
  for (std::size_t k = 0; k < n; ++k) {
    const cplx ramp = std::polar(1.0, -2.0 * kPi * static_cast<double>(k * s) / static_cast<double>(n));
    EXPECT_LE(std::abs(fs.at(k, 0) - ramp * fx.at(k, 0)), 1e-10);
  }
}

TEST(Stft, ConstantInputLandsInBinZero) {
  const auto plan = small_plan(16, 16);
  std::vector<ChannelGrid> series(16, ChannelGrid(1, 1));
  for (auto& g : series) g(0, 0) = cplx(2.0, -1.0);
  const auto f = stft_stream(series, plan).front();
  EXPECT_LE(std::abs(f.at(0, 0) - 16.0 * cplx(2.0, -1.0)), 1e-12);
  for (std::size_t k = 1; k < 16; ++k) EXPECT_LE(std::abs(f.at(k, 0)), 1e-12);
}

TEST(Stft, BinFrequencies) {
  StftPlan plan;
  const auto frames = stft_stream(tone_series(256, 0.4, 11.3), plan);
  ASSERT_EQ(frames.front().bins(), 256u);
  EXPECT_DOUBLE_EQ(frames.front().bin_freqs[1], 11.3 / 256.0);
}

TEST(BandSelect, ReferenceBandKeepsBinsFourToFortyFive) {
  StftPlan plan;
  const auto frames = stft_stream(tone_series(256, 0.4, 11.3), plan);
  const auto sel = band_select(frames.front(), plan);
  ASSERT_EQ(sel.bins(), 42u);
  EXPECT_DOUBLE_EQ(sel.bin_freqs.front(), 4.0 * 11.3 / 256.0);
  EXPECT_DOUBLE_EQ(sel.bin_freqs.back(), 45.0 * 11.3 / 256.0);
  EXPECT_EQ(sel.at(0, 0), frames.front().at(4, 0));
  EXPECT_EQ(sel.at(41, 0), frames.front().at(45, 0));
}

TEST(BandSelect, DegenerateBandOnABinKeepsOneBin) {
  StftPlan plan;
  plan.band_lo = plan.band_hi = 9.0 * plan.bin_spacing();
  const auto frames = stft_stream(tone_series(256, 0.4, 11.3), plan);
  const auto sel = band_select(frames.front(), plan);
  ASSERT_EQ(sel.bins(), 1u);
  EXPECT_EQ(sel.at(0, 0), frames.front().at(9, 0));
}

TEST(BandSelect, BandBetweenBinsIsAConfigError) {
  StftPlan plan;
  plan.band_lo = 9.2 * plan.bin_spacing();
  plan.band_hi = 9.8 * plan.bin_spacing();
  const auto frames = stft_stream(tone_series(256, 0.4, 11.3), plan);
  try {
    band_select(frames.front(), plan);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::config);
  }
}

TEST(StftPlanValidation, RejectsInvalidPlans) {
  StftPlan p;
  p.hop = 0;
  EXPECT_THROW(validate(p), Error);
  p = StftPlan{};
  p.band_hi = 6.0;
  EXPECT_THROW(validate(p), Error);
  p = StftPlan{};
  p.band_lo = 2.5;
  EXPECT_THROW(validate(p), Error);
  EXPECT_NO_THROW(validate(StftPlan{}));
}

TEST(Normalize, DividesByGlobalMaximum) {
  const auto out = normalize_rowmax({{1.0, 2.0}, {4.0, 0.5}});
  EXPECT_DOUBLE_EQ(out[0][1], 0.5);
  EXPECT_DOUBLE_EQ(out[1][0], 1.0);
  EXPECT_DOUBLE_EQ(out[1][1], 0.125);
}

TEST(Normalize, AllZeroIsAnInputError) {
  EXPECT_THROW(normalize_rowmax({{0.0, 0.0}}), Error);
}

TEST(Spectrogram, MaximumIsOne) {
  StftPlan plan;
  const auto frames = band_select(stft_stream(tone_series(300, 0.4, 11.3), plan), plan);
  const auto s = make_spectrogram(frames, 0);
  EXPECT_EQ(s.frames(), frames.size());
  double peak = 0.0;
  for (const auto& row : s.magnitude)
    for (double v : row) peak = std::max(peak, v);
  EXPECT_DOUBLE_EQ(peak, 1.0);
}

TEST(FindPeaks, PureToneAtReferenceBin) {
  StftPlan plan;
  const auto frames = stft_stream(tone_series(256, 0.40, 11.3), plan);
  const auto sel = band_select(frames.front(), plan);
  const auto mag = channel_magnitude(sel, 0);
  const auto peaks = find_peaks(mag, sel.bin_freqs, 1);
  ASSERT_EQ(peaks.peaks.size(), 1u);
  EXPECT_NEAR(peaks.peaks[0].freq, 0.397265625, 1e-12);
  EXPECT_EQ(sel.bin_freqs[peaks.peaks[0].bin], peaks.peaks[0].freq);
}

TEST(FindPeaks, OrderingPlateauAndEdges) {
  const std::vector<double> mag{5.0, 1.0, 3.0, 3.0, 1.0, 4.0, 2.0, 2.0, 6.0};
  std::vector<double> freqs(mag.size());
  for (std::size_t i = 0; i < freqs.size(); ++i) freqs[i] = 0.1 * static_cast<double>(i);
  const auto p = find_peaks(mag, freqs, 2);
  EXPECT_FALSE(p.truncated);
  ASSERT_EQ(p.peaks.size(), 2u);
  EXPECT_EQ(p.peaks[0].bin, 5u);
  EXPECT_EQ(p.peaks[1].bin, 2u);
  const auto all = find_peaks(mag, freqs, 5);
  EXPECT_TRUE(all.truncated);
  EXPECT_EQ(all.peaks.size(), 2u);
}

TEST(FindPeaks, TiesKeepLowerFrequencyFirst) {
  const std::vector<double> mag{0.0, 2.0, 0.0, 2.0, 0.0};
  const std::vector<double> freqs{0.0, 1.0, 2.0, 3.0, 4.0};
  const auto p = find_peaks(mag, freqs, 2);
  EXPECT_EQ(p.peaks[0].bin, 1u);
  EXPECT_EQ(p.peaks[1].bin, 3u);
}

TEST(FindPeaks, ZeroCountIsAnInputError) {
  const std::vector<double> mag{0.0, 1.0, 0.0};
  EXPECT_THROW(find_peaks(mag, mag, 0), Error);
}
