#pragma once

// Higher-order tensor ICA: the separation operator keeps separate Tx and Rx
// axes, so the learning weights tied to any one antenna can be scaled.

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "hotica/common.hpp"
#include "hotica/easi.hpp"
#include "hotica/spectral.hpp"
#include "hotica/tensor4.hpp"

namespace hotica {

/// Per-antenna weight on learning contributions. 1 everywhere is neutral.
struct SensitivityProfile {
  std::vector<double> eta_tx;
  std::vector<double> eta_rx;

  static SensitivityProfile neutral(std::size_t tx_count, std::size_t rx_count) {
    return {std::vector<double>(tx_count, 1.0), std::vector<double>(rx_count, 1.0)};
  }
};

inline void validate(const SensitivityProfile& profile, std::size_t tx_count, std::size_t rx_count) {
  if (profile.eta_tx.size() != tx_count || profile.eta_rx.size() != rx_count) {
    throw Error(ErrorKind::config, "sensitivity profile length does not match antenna counts (eta_tx " +
                                       std::to_string(profile.eta_tx.size()) + "/" +
                                       std::to_string(tx_count) + ", eta_rx " +
                                       std::to_string(profile.eta_rx.size()) + "/" +
                                       std::to_string(rx_count) + ")");
  }
  auto in_range = [](double v) { return v >= 0.0 && v <= 1.0; };
  for (double v : profile.eta_tx) {
    if (!in_range(v)) throw Error(ErrorKind::config, "sensitivity.eta_tx entries must lie in [0, 1]");
  }
  for (double v : profile.eta_rx) {
    if (!in_range(v)) throw Error(ErrorKind::config, "sensitivity.eta_rx entries must lie in [0, 1]");
  }
}

/// W(a,b,c,d) = -mu [ Y_ab conj(Y_cd) + g(Y_ab) conj(Y_cd) - Y_ab conj(g(Y_cd)) - I ].
/// With cfg.plus_third_term the third term enters with a plus sign.
inline Tensor4 weight_tensor(const Grid& y, const LearnConfig& cfg) {
  const std::size_t p = y.size();
  const auto yv = y.flat();
  std::vector<cplx> g(p);
  for (std::size_t i = 0; i < p; ++i) g[i] = g_split_tanh(yv[i]);
  const double third = cfg.plus_third_term ? 1.0 : -1.0;

  Tensor4 w(y.tx_count(), y.rx_count());
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t k = 0; k < p; ++k) {
      cplx bracket = yv[i] * std::conj(yv[k]) + g[i] * std::conj(yv[k]) +
                     third * (yv[i] * std::conj(g[k]));
      if (i == k) bracket -= 1.0;
      w.flat(i, k) = -cfg.learning_rate * bracket;
    }
  }
  return w;
}

/// The part of W whose input Tx index is m (zero elsewhere).
inline Tensor4 tx_component(const Tensor4& w, std::size_t m) {
  Tensor4 out(w.tx_count(), w.rx_count());
  for (std::size_t i = 0; i < w.channels(); ++i) {
    for (std::size_t d = 0; d < w.rx_count(); ++d) {
      const std::size_t k = m * w.rx_count() + d;
      out.flat(i, k) = w.flat(i, k);
    }
  }
  return out;
}

/// The part of W whose input Rx index is n (zero elsewhere).
inline Tensor4 rx_component(const Tensor4& w, std::size_t n) {
  Tensor4 out(w.tx_count(), w.rx_count());
  for (std::size_t i = 0; i < w.channels(); ++i) {
    for (std::size_t c = 0; c < w.tx_count(); ++c) {
      const std::size_t k = c * w.rx_count() + n;
      out.flat(i, k) = w.flat(i, k);
    }
  }
  return out;
}

/// Half the eta-weighted sum of every per-antenna component. Reference form
/// of masked_weights that materializes all M + N components.
inline Tensor4 decomposed_weights(const Tensor4& w, const SensitivityProfile& profile) {
  validate(profile, w.tx_count(), w.rx_count());
  Tensor4 sum(w.tx_count(), w.rx_count());
  auto accumulate = [&](const Tensor4& part, double eta) {
    for (std::size_t i = 0; i < part.data().size(); ++i) sum.data()[i] += eta * part.data()[i];
  };
  for (std::size_t m = 0; m < w.tx_count(); ++m) accumulate(tx_component(w, m), profile.eta_tx[m]);
  for (std::size_t n = 0; n < w.rx_count(); ++n) accumulate(rx_component(w, n), profile.eta_rx[n]);
  for (auto& v : sum.data()) v *= 0.5;
  return sum;
}

/// W'(a,b,c,d) = (eta_tx[c] + eta_rx[d]) / 2 * W(a,b,c,d). Every entry sits
/// in exactly one Tx and one Rx component, hence the half.
inline Tensor4 masked_weights(const Tensor4& w, const SensitivityProfile& profile) {
  validate(profile, w.tx_count(), w.rx_count());
  Tensor4 out = w;
  const std::size_t rx = w.rx_count();
  for (std::size_t i = 0; i < w.channels(); ++i) {
    for (std::size_t k = 0; k < w.channels(); ++k) {
      out.flat(i, k) *= 0.5 * (profile.eta_tx[k / rx] + profile.eta_rx[k % rx]);
    }
  }
  return out;
}

inline bool within_limit(const Tensor4& b, double limit) {
  for (const cplx& v : b.data()) {
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag()) || std::abs(v) > limit) return false;
  }
  return true;
}

/// B + sum_{e,z} W(a,b,e,z) B(e,z,c,d), in place.
inline void update4_inplace(Tensor4& b, const Tensor4& w) {
  require_shape(b, w);
  const Tensor4 delta = contract4(w, b);
  for (std::size_t i = 0; i < b.data().size(); ++i) b.data()[i] += delta.data()[i];
}

inline Tensor4 update4(const Tensor4& b, const Tensor4& w,
                       double divergence_limit = LearnConfig{}.divergence_limit) {
  Tensor4 out = b;
  update4_inplace(out, w);
  if (!within_limit(out, divergence_limit)) {
    throw DivergenceError(0, std::vector<cplx>(b.data().begin(), b.data().end()), b.channels());
  }
  return out;
}

struct Scale4Result {
  Tensor4 b;
  std::size_t clamped = 0;
};

/// Scales B(a,b,.,.) by the inverse RMS of Y(a,b) over the frame's bins.
inline Scale4Result rms_scale4(const Tensor4& b, const SpectrumFrame& frame, double rms_floor) {
  const std::size_t p = b.channels();
  if (frame.channels() != p) throw Error(ErrorKind::input, "frame shape does not match tensor");
  std::vector<double> power(p, 0.0);
  std::vector<cplx> y(p);
  for (std::size_t bin = 0; bin < frame.bins(); ++bin) {
    separate4(b, frame.bin(bin), y);
    for (std::size_t i = 0; i < p; ++i) power[i] += std::norm(y[i]);
  }
  Scale4Result out{b, 0};
  for (std::size_t i = 0; i < p; ++i) {
    double rms = std::sqrt(power[i] / static_cast<double>(frame.bins()));
    if (!(rms >= rms_floor)) {
      rms = 1.0;
      ++out.clamped;
    }
    for (std::size_t j = 0; j < p; ++j) out.b.flat(i, j) /= rms;
  }
  return out;
}

inline Tensor4 initial_tensor(std::size_t tx_count, std::size_t rx_count, const LearnConfig& cfg) {
  if (cfg.init == InitKind::identity) return identity4(tx_count, rx_count);
  const CMatrix m = initial_matrix(tx_count * rx_count, cfg);
  Tensor4 t(tx_count, rx_count);
  for (std::size_t i = 0; i < t.channels(); ++i) {
    for (std::size_t j = 0; j < t.channels(); ++j) {
      t.flat(i, j) = m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
  }
  return t;
}

struct HotIcaResult {
  std::vector<Tensor4> trajectory;       // B after each window's learning step
  std::vector<SpectrumFrame> separated;  // Y with the post-scale B of each window
  std::vector<std::vector<double>> rms;  // per-window output RMS before scaling
  std::size_t clamped = 0;
};

/// Online HOT-ICA over band-selected frames in t_d order. Per window:
/// rescale B to unit output RMS, emit Y, then learn on the in-band bins
/// with sensitivity-weighted learning-weight tensors.
inline HotIcaResult hot_ica_online(std::span<const SpectrumFrame> frames, const LearnConfig& cfg,
                                   const SensitivityProfile& profile) {
  validate(cfg);
  HotIcaResult out;
  if (frames.empty()) return out;
  const std::size_t pt = frames.front().tx_count;
  const std::size_t pr = frames.front().rx_count;
  const std::size_t p = pt * pr;
  validate(profile, pt, pr);
  Tensor4 b = initial_tensor(pt, pr, cfg);
  Grid y(pt, pr);

  for (const auto& frame : frames) {
    if (frame.tx_count != pt || frame.rx_count != pr) {
      throw Error(ErrorKind::input, "frame shape changed between windows");
    }
    std::vector<double> rms(p, 0.0);
    for (std::size_t bin = 0; bin < frame.bins(); ++bin) {
      separate4(b, frame.bin(bin), y.flat());
      for (std::size_t i = 0; i < p; ++i) rms[i] += std::norm(y.flat()[i]);
    }
    for (double& r : rms) r = std::sqrt(r / static_cast<double>(frame.bins()));
    out.rms.push_back(std::move(rms));

    Scale4Result scaled = rms_scale4(b, frame, cfg.rms_floor);
    out.clamped += scaled.clamped;
    b = std::move(scaled.b);

    SpectrumFrame sep{frame.t_d, pt, pr, frame.bin_freqs, std::vector<cplx>(frame.values.size())};
    for (std::size_t bin = 0; bin < frame.bins(); ++bin) separate4(b, frame.bin(bin), sep.bin(bin));

    const Tensor4 before = b;
    if (cfg.aggregation == BinAggregation::averaged) {
      Tensor4 mean(pt, pr);
      for (std::size_t bin = 0; bin < frame.bins(); ++bin) {
        std::copy(sep.bin(bin).begin(), sep.bin(bin).end(), y.flat().begin());
        const Tensor4 w = weight_tensor(y, cfg);
        for (std::size_t i = 0; i < w.data().size(); ++i) mean.data()[i] += w.data()[i];
      }
      for (auto& v : mean.data()) v /= static_cast<double>(frame.bins());
      update4_inplace(b, masked_weights(mean, profile));
    } else {
      for (std::size_t bin = 0; bin < frame.bins(); ++bin) {
        separate4(b, frame.bin(bin), y.flat());
        update4_inplace(b, masked_weights(weight_tensor(y, cfg), profile));
      }
    }
    out.separated.push_back(std::move(sep));
    if (!within_limit(b, cfg.divergence_limit)) {
      throw DivergenceError(frame.t_d, std::vector<cplx>(before.data().begin(), before.data().end()), p);
    }
    out.trajectory.push_back(b);
  }
  return out;
}

}  // namespace hotica
