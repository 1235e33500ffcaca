#pragma once

// Complex EASI learning of a single frequency-independent separation matrix
// on in-band STFT bins (online CF-ICA).

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "hotica/common.hpp"
#include "hotica/spectral.hpp"

namespace hotica {

using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

enum class Nonlinearity { split_tanh };
enum class InitKind { identity, scaled_random };

/// How the per-bin updates of one window are applied. `sequential` updates
/// the operator after every in-band bin; `averaged` applies one update per
/// window from the bin-averaged increment.
enum class BinAggregation { sequential, averaged };

struct LearnConfig {
  double learning_rate = 0.005;
  Nonlinearity nonlinearity = Nonlinearity::split_tanh;
  InitKind init = InitKind::identity;
  double rms_floor = 1e-15;
  BinAggregation aggregation = BinAggregation::sequential;
  // Tensor rule only: use "+ Y conj(g(Y))" for the third bracket term
  // instead of the matrix-EASI "- Y g(Y)^H".
  bool plus_third_term = false;
  std::uint64_t init_seed = 0;
  double divergence_limit = 1e12;
};

inline void validate(const LearnConfig& cfg) {
  if (!(cfg.learning_rate >= 0.0) || !std::isfinite(cfg.learning_rate)) {
    throw Error(ErrorKind::config, "learn.learning_rate must be finite and >= 0");
  }
  if (!(cfg.rms_floor > 0.0)) throw Error(ErrorKind::config, "learn.rms_floor must be > 0");
  if (!(cfg.divergence_limit > 0.0)) {
    throw Error(ErrorKind::config, "learn.divergence_limit must be > 0");
  }
}

/// tanh(|s|) exp(j arg s); g(0) = 0.
inline cplx g_split_tanh(cplx s) {
  const double r = std::abs(s);
  if (r == 0.0) return {0.0, 0.0};
  return (std::tanh(r) / r) * s;
}

inline CVector apply_g(const CVector& y) { return y.unaryExpr([](cplx v) { return g_split_tanh(v); }); }

/// Raised when the separation operator stops being finite or exceeds the
/// divergence limit. Carries the last finite operator, flattened row-major.
class DivergenceError : public Error {
 public:
  DivergenceError(std::size_t t_d, std::vector<cplx> last_good, std::size_t rows)
      : Error(ErrorKind::divergence,
              "separation operator diverged at window t_d=" + std::to_string(t_d)),
        t_d_(t_d),
        rows_(rows),
        last_good_(std::move(last_good)) {}

  std::size_t t_d() const noexcept { return t_d_; }
  std::size_t rows() const noexcept { return rows_; }
  const std::vector<cplx>& last_good() const noexcept { return last_good_; }

 private:
  std::size_t t_d_;
  std::size_t rows_;
  std::vector<cplx> last_good_;
};

inline std::vector<cplx> flatten_row_major(const CMatrix& m) {
  std::vector<cplx> out(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) out[static_cast<std::size_t>(r * m.cols() + c)] = m(r, c);
  }
  return out;
}

inline CMatrix initial_matrix(std::size_t p, const LearnConfig& cfg) {
  const auto n = static_cast<Eigen::Index>(p);
  if (cfg.init == InitKind::identity) return CMatrix::Identity(n, n);
  std::mt19937_64 engine(cfg.init_seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  CMatrix b(n, n);
  const double scale = 1.0 / std::sqrt(2.0 * static_cast<double>(p));
  for (Eigen::Index r = 0; r < n; ++r) {
    for (Eigen::Index c = 0; c < n; ++c) {
      const double re = normal(engine);
      b(r, c) = scale * cplx(re, normal(engine));
    }
  }
  return b;
}

/// Bracket YY^H - I + g(Y)Y^H - Y g(Y)^H averaged over the columns of `y`
/// (one column per bin).
inline CMatrix easi_bracket(const CMatrix& y) {
  const Eigen::Index p = y.rows();
  CMatrix acc = CMatrix::Zero(p, p);
  for (Eigen::Index b = 0; b < y.cols(); ++b) {
    const CVector col = y.col(b);
    const CVector g = apply_g(col);
    acc += col * col.adjoint() + g * col.adjoint() - col * g.adjoint();
  }
  if (y.cols() > 0) acc /= static_cast<double>(y.cols());
  acc -= CMatrix::Identity(p, p);
  return acc;
}

/// -mu [YY^H - I + g(Y)Y^H - Y g(Y)^H] B, bracket averaged over the batch.
inline CMatrix easi_delta(const CMatrix& b, const CMatrix& y, const LearnConfig& cfg) {
  if (b.rows() != b.cols()) throw Error(ErrorKind::input, "separation matrix must be square");
  if (y.rows() != b.rows()) throw Error(ErrorKind::input, "batch dimension does not match B");
  return -cfg.learning_rate * easi_bracket(y) * b;
}

struct ScaleResult {
  CMatrix b;
  std::size_t clamped = 0;  // rows left unscaled because their RMS fell below the floor
};

/// Row i of B divided by the RMS of (BX)_i over the columns of `x`.
inline ScaleResult rms_scale(const CMatrix& b, const CMatrix& x, double rms_floor) {
  const CMatrix y = b * x;
  ScaleResult out{b, 0};
  const double n = static_cast<double>(x.cols());
  for (Eigen::Index i = 0; i < y.rows(); ++i) {
    double rms = std::sqrt(y.row(i).squaredNorm() / n);
    if (!(rms >= rms_floor)) {
      rms = 1.0;
      ++out.clamped;
    }
    out.b.row(i) /= rms;
  }
  return out;
}

/// Channels x bins matrix view of a band-selected frame.
inline CMatrix frame_matrix(const SpectrumFrame& frame) {
  const auto p = static_cast<Eigen::Index>(frame.channels());
  const auto nb = static_cast<Eigen::Index>(frame.bins());
  CMatrix x(p, nb);
  for (Eigen::Index b = 0; b < nb; ++b) {
    for (Eigen::Index c = 0; c < p; ++c) {
      x(c, b) = frame.at(static_cast<std::size_t>(b), static_cast<std::size_t>(c));
    }
  }
  return x;
}

inline bool within_limit(const CMatrix& b, double limit) {
  for (Eigen::Index i = 0; i < b.size(); ++i) {
    const cplx v = b.data()[i];
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag()) || std::abs(v) > limit) return false;
  }
  return true;
}

struct CfIcaResult {
  std::vector<CMatrix> trajectory;        // B after each window's learning step
  std::vector<SpectrumFrame> separated;   // Y = BX with the post-scale B of each window
  std::vector<std::vector<double>> rms;   // per-window channel RMS before scaling
  std::size_t clamped = 0;
};

/// Online CF-ICA over band-selected frames in t_d order. Per window: scale
/// B to unit output RMS, emit Y = BX, then learn on every in-band bin.
inline CfIcaResult cf_ica_online(std::span<const SpectrumFrame> frames, const LearnConfig& cfg) {
  validate(cfg);
  CfIcaResult out;
  if (frames.empty()) return out;
  const std::size_t p = frames.front().channels();
  const auto n = static_cast<Eigen::Index>(p);
  const CMatrix eye = CMatrix::Identity(n, n);
  CMatrix b = initial_matrix(p, cfg);

  for (const auto& frame : frames) {
    if (frame.channels() != p) throw Error(ErrorKind::input, "channel count changed between frames");
    const CMatrix x = frame_matrix(frame);

    const CMatrix y0 = b * x;
    std::vector<double> rms(p);
    for (std::size_t i = 0; i < p; ++i) {
      rms[i] = std::sqrt(y0.row(static_cast<Eigen::Index>(i)).squaredNorm() / static_cast<double>(x.cols()));
    }
    out.rms.push_back(std::move(rms));

    ScaleResult scaled = rms_scale(b, x, cfg.rms_floor);
    out.clamped += scaled.clamped;
    b = std::move(scaled.b);

    const CMatrix y = b * x;
    SpectrumFrame sep{frame.t_d, frame.tx_count, frame.rx_count, frame.bin_freqs,
                      std::vector<cplx>(frame.values.size())};
    for (Eigen::Index bin = 0; bin < y.cols(); ++bin) {
      for (Eigen::Index c = 0; c < n; ++c) sep.at(static_cast<std::size_t>(bin), static_cast<std::size_t>(c)) = y(c, bin);
    }
    out.separated.push_back(std::move(sep));

    const CMatrix before = b;
    if (cfg.aggregation == BinAggregation::averaged) {
      b += easi_delta(b, y, cfg);
    } else {
      for (Eigen::Index bin = 0; bin < x.cols(); ++bin) {
        const CVector yb = b * x.col(bin);
        const CVector g = apply_g(yb);
        const CMatrix bracket = yb * yb.adjoint() - eye + g * yb.adjoint() - yb * g.adjoint();
        b += -cfg.learning_rate * bracket * b;
      }
    }
    if (!within_limit(b, cfg.divergence_limit)) {
      throw DivergenceError(frame.t_d, flatten_row_major(before), p);
    }
    out.trajectory.push_back(b);
  }
  return out;
}

}  // namespace hotica
