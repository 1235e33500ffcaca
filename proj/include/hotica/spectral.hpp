#pragma once

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "hotica/common.hpp"
#include "hotica/grid.hpp"

namespace hotica {

enum class Taper { rectangular, hann };

struct StftPlan {
  std::size_t window_len = 256;
  std::size_t hop = 2;
  double sample_rate = 11.3;
  double band_lo = 0.17;
  double band_hi = 2.0;
  Taper taper = Taper::rectangular;

  double bin_spacing() const { return sample_rate / static_cast<double>(window_len); }
};

inline void validate(const StftPlan& plan) {
  auto fail = [](const std::string& m) { throw Error(ErrorKind::config, m); };
  if (plan.window_len == 0) fail("stft.window_len must be > 0");
  if (plan.hop == 0 || plan.hop > plan.window_len) fail("stft.hop must be in (0, window_len]");
  if (!(plan.sample_rate > 0.0)) fail("stft.sample_rate must be > 0");
  // band_lo == band_hi is accepted and selects at most one bin.
  if (!(plan.band_lo > 0.0 && plan.band_lo <= plan.band_hi && plan.band_hi <= plan.sample_rate / 2.0)) {
    fail("stft band must satisfy 0 < band_lo <= band_hi <= sample_rate/2");
  }
}

/// Complex spectra of every channel for one analysis window. Values are laid
/// out bin-major: the channel vector of one bin is contiguous, channels in
/// flat (tx, rx) order.
struct SpectrumFrame {
  std::size_t t_d = 0;
  std::size_t tx_count = 0;
  std::size_t rx_count = 0;
  std::vector<double> bin_freqs;
  std::vector<cplx> values;

  std::size_t bins() const { return bin_freqs.size(); }
  std::size_t channels() const { return tx_count * rx_count; }

  cplx& at(std::size_t bin, std::size_t ch) { return values[bin * channels() + ch]; }
  const cplx& at(std::size_t bin, std::size_t ch) const { return values[bin * channels() + ch]; }

  std::span<cplx> bin(std::size_t b) { return {values.data() + b * channels(), channels()}; }
  std::span<const cplx> bin(std::size_t b) const {
    return {values.data() + b * channels(), channels()};
  }
};

inline std::vector<double> taper_weights(const StftPlan& plan) {
  std::vector<double> w(plan.window_len, 1.0);
  if (plan.taper == Taper::hann) {
    const double n = static_cast<double>(plan.window_len);
    for (std::size_t i = 0; i < plan.window_len; ++i) {
      w[i] = 0.5 - 0.5 * std::cos(2.0 * kPi * static_cast<double>(i) / n);
    }
  }
  return w;
}

namespace detail {

/// Forward complex DFT of fixed length, X_k = sum_t x_t exp(-j 2 pi k t / L).
class FftwPlan {
 public:
  explicit FftwPlan(std::size_t n) : n_(n) {
    in_ = fftw_alloc_complex(n);
    out_ = fftw_alloc_complex(n);
    plan_ = fftw_plan_dft_1d(static_cast<int>(n), in_, out_, FFTW_FORWARD, FFTW_ESTIMATE);
  }
  FftwPlan(const FftwPlan&) = delete;
  FftwPlan& operator=(const FftwPlan&) = delete;
  ~FftwPlan() {
    fftw_destroy_plan(plan_);
    fftw_free(in_);
    fftw_free(out_);
  }

  std::span<cplx> input() { return {reinterpret_cast<cplx*>(in_), n_}; }
  std::span<const cplx> output() const { return {reinterpret_cast<const cplx*>(out_), n_}; }
  void execute() { fftw_execute(plan_); }

 private:
  std::size_t n_;
  fftw_complex* in_ = nullptr;
  fftw_complex* out_ = nullptr;
  fftw_plan plan_ = nullptr;
};

}  // namespace detail

inline std::size_t stft_frame_count(std::size_t samples, const StftPlan& plan) {
  if (samples < plan.window_len) return 0;
  return (samples - plan.window_len) / plan.hop + 1;
}

/// Sliding-window DFT over a multichannel series; window t_d covers samples
/// [t_d * hop, t_d * hop + window_len). All window_len bins are returned.
inline std::vector<SpectrumFrame> stft_stream(std::span<const ChannelGrid> series,
                                              const StftPlan& plan) {
  validate(plan);
  if (series.size() < plan.window_len) {
    throw Error(ErrorKind::input, "series shorter than one STFT window (" +
                                      std::to_string(series.size()) + " < " +
                                      std::to_string(plan.window_len) + ")");
  }
  const std::size_t pt = series.front().tx_count();
  const std::size_t pr = series.front().rx_count();
  const std::size_t p = pt * pr;
  const std::size_t len = plan.window_len;
  const auto taper = taper_weights(plan);

  std::vector<double> freqs(len);
  for (std::size_t k = 0; k < len; ++k) freqs[k] = static_cast<double>(k) * plan.bin_spacing();

  detail::FftwPlan fft(len);
  const std::size_t count = stft_frame_count(series.size(), plan);
  std::vector<SpectrumFrame> frames;
  frames.reserve(count);
  for (std::size_t td = 0; td < count; ++td) {
    SpectrumFrame frame{td, pt, pr, freqs, std::vector<cplx>(len * p)};
    const std::size_t start = td * plan.hop;
    for (std::size_t ch = 0; ch < p; ++ch) {
      auto in = fft.input();
      for (std::size_t t = 0; t < len; ++t) in[t] = taper[t] * series[start + t].flat()[ch];
      fft.execute();
      auto out = fft.output();
      for (std::size_t k = 0; k < len; ++k) frame.at(k, ch) = out[k];
    }
    frames.push_back(std::move(frame));
  }
  return frames;
}

/// Indices of bins with band_lo <= f <= band_hi. A relative slack of 1e-9
/// keeps band edges that land exactly on a bin frequency.
inline std::vector<std::size_t> band_bins(std::span<const double> freqs, const StftPlan& plan) {
  const double slack = 1e-9 * plan.bin_spacing();
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < freqs.size(); ++k) {
    if (freqs[k] >= plan.band_lo - slack && freqs[k] <= plan.band_hi + slack) out.push_back(k);
  }
  return out;
}

inline SpectrumFrame band_select(const SpectrumFrame& frame, const StftPlan& plan) {
  const auto keep = band_bins(frame.bin_freqs, plan);
  if (keep.empty()) throw Error(ErrorKind::config, "frequency band selects no STFT bins");
  SpectrumFrame out{frame.t_d, frame.tx_count, frame.rx_count, {}, {}};
  out.bin_freqs.reserve(keep.size());
  out.values.reserve(keep.size() * frame.channels());
  for (std::size_t k : keep) {
    out.bin_freqs.push_back(frame.bin_freqs[k]);
    auto src = frame.bin(k);
    out.values.insert(out.values.end(), src.begin(), src.end());
  }
  return out;
}

inline std::vector<SpectrumFrame> band_select(std::span<const SpectrumFrame> frames,
                                              const StftPlan& plan) {
  std::vector<SpectrumFrame> out;
  out.reserve(frames.size());
  for (const auto& f : frames) out.push_back(band_select(f, plan));
  return out;
}

/// |values| of one channel across the frame's bins.
inline std::vector<double> channel_magnitude(const SpectrumFrame& frame, std::size_t ch) {
  std::vector<double> mag(frame.bins());
  for (std::size_t b = 0; b < frame.bins(); ++b) mag[b] = std::abs(frame.at(b, ch));
  return mag;
}

/// Divides every spectrum by the maximum over the whole list.
inline std::vector<std::vector<double>> normalize_rowmax(std::vector<std::vector<double>> spectra) {
  double peak = 0.0;
  for (const auto& s : spectra) {
    for (double v : s) peak = std::max(peak, std::abs(v));
  }
  if (!(peak > 0.0)) throw Error(ErrorKind::input, "cannot normalize an all-zero spectrum set");
  for (auto& s : spectra) {
    for (double& v : s) v = std::abs(v) / peak;
  }
  return spectra;
}

/// Magnitude history of one channel, normalized so the largest value is 1.
struct Spectrogram {
  std::vector<std::size_t> t_d;
  std::vector<double> bin_freqs;
  std::vector<std::vector<double>> magnitude;  // [frame][bin]

  std::size_t frames() const { return magnitude.size(); }
};

inline Spectrogram make_spectrogram(std::span<const SpectrumFrame> frames, std::size_t ch) {
  if (frames.empty()) throw Error(ErrorKind::input, "spectrogram needs at least one frame");
  Spectrogram s;
  s.bin_freqs = frames.front().bin_freqs;
  for (const auto& f : frames) {
    s.t_d.push_back(f.t_d);
    s.magnitude.push_back(channel_magnitude(f, ch));
  }
  s.magnitude = normalize_rowmax(std::move(s.magnitude));
  return s;
}

struct Peak {
  double freq = 0.0;
  double magnitude = 0.0;
  std::size_t bin = 0;
};

struct PeakList {
  std::vector<Peak> peaks;
  bool truncated = false;  // fewer local maxima existed than requested
};

/// Interior local maxima sorted by magnitude (descending, lower frequency
/// first on ties). A flat top counts once, at its lowest-frequency bin.
inline PeakList find_peaks(std::span<const double> magnitude, std::span<const double> freqs,
                           std::size_t count) {
  if (count == 0) throw Error(ErrorKind::input, "find_peaks count must be >= 1");
  PeakList out;
  const std::size_t n = magnitude.size();
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (!(magnitude[i] > magnitude[i - 1])) continue;
    std::size_t j = i;
    while (j + 1 < n && magnitude[j + 1] == magnitude[i]) ++j;
    if (j + 1 < n && magnitude[j + 1] < magnitude[i]) out.peaks.push_back({freqs[i], magnitude[i], i});
    i = j;
  }
  std::stable_sort(out.peaks.begin(), out.peaks.end(),
                   [](const Peak& a, const Peak& b) { return a.magnitude > b.magnitude; });
  if (out.peaks.size() < count) {
    out.truncated = true;
  } else {
    out.peaks.resize(count);
  }
  return out;
}

}  // namespace hotica
