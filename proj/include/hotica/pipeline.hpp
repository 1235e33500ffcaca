#pragma once

// End-to-end experiment: simulate -> STFT -> band select -> separate ->
// evaluate, plus artifact files and a manifest of their digests.

#include <openssl/evp.h>

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hotica/config.hpp"
#include "hotica/easi.hpp"
#include "hotica/hot_ica.hpp"
#include "hotica/metrics.hpp"
#include "hotica/scene.hpp"
#include "hotica/series_io.hpp"
#include "hotica/spectral.hpp"
#include "hotica/tensor4.hpp"

namespace hotica {

inline constexpr const char* kToolVersion = "0.1.0";

inline std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr);
  std::ostringstream s;
  for (unsigned int i = 0; i < len; ++i) s << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return s.str();
}

inline std::string file_sha256(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::input, "cannot read '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return sha256_hex(buf.str());
}

struct Separation {
  std::vector<SpectrumFrame> mixed;      // band-selected input spectra
  std::vector<SpectrumFrame> separated;  // band-selected output spectra
  std::vector<Tensor4> trajectory;       // B per window (flattened B for cf)
  std::vector<std::vector<double>> rms;
  SeparationReport report;
};

inline Tensor4 tensor_from_matrix(const CMatrix& m, std::size_t tx_count, std::size_t rx_count) {
  Tensor4 t(tx_count, rx_count);
  for (std::size_t i = 0; i < t.channels(); ++i) {
    for (std::size_t j = 0; j < t.channels(); ++j) {
      t.flat(i, j) = m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
  }
  return t;
}

/// Runs the configured separator over a mixed series.
inline Separation separate_series(std::span<const ChannelGrid> series, const ExperimentConfig& cfg) {
  validate(cfg);
  if (!series.empty() && (series.front().tx_count() != cfg.scene.tx.size() ||
                          series.front().rx_count() != cfg.scene.rx.size())) {
    throw Error(ErrorKind::config, "series antenna counts do not match scene.tx / scene.rx");
  }
  Separation out;
  const auto frames = stft_stream(series, cfg.stft);
  out.mixed = band_select(frames, cfg.stft);
  const std::size_t pt = cfg.scene.tx.size(), pr = cfg.scene.rx.size();
  if (cfg.separator == Separator::cf) {
    auto r = cf_ica_online(out.mixed, cfg.learn);
    out.separated = std::move(r.separated);
    out.rms = std::move(r.rms);
    for (const auto& b : r.trajectory) out.trajectory.push_back(tensor_from_matrix(b, pt, pr));
  } else {
    auto r = hot_ica_online(out.mixed, cfg.learn, cfg.effective_profile());
    out.separated = std::move(r.separated);
    out.rms = std::move(r.rms);
    out.trajectory = std::move(r.trajectory);
  }
  out.report = evaluate_separation(out.separated, cfg.scene.targets, cfg.stft);
  return out;
}

inline std::string channel_label(const char* prefix, std::size_t ch, std::size_t rx_count) {
  return std::string(prefix) + std::to_string(ch / rx_count + 1) + "_" + std::to_string(ch % rx_count + 1);
}

/// One row per (bin, channel) of a single window; mag_norm shares one
/// normalization across all channels of the window.
inline void write_frame_csv(std::ostream& out, const SpectrumFrame& frame, const char* prefix) {
  std::vector<std::vector<double>> mags;
  for (std::size_t c = 0; c < frame.channels(); ++c) mags.push_back(channel_magnitude(frame, c));
  mags = normalize_rowmax(std::move(mags));
  out << "t_d,freq,channel,re,im,mag_norm\n";
  for (std::size_t c = 0; c < frame.channels(); ++c) {
    const auto label = channel_label(prefix, c, frame.rx_count);
    for (std::size_t b = 0; b < frame.bins(); ++b) {
      out << frame.t_d << ',' << format_double(frame.bin_freqs[b]) << ',' << label << ','
          << format_double(frame.at(b, c).real()) << ',' << format_double(frame.at(b, c).imag()) << ','
          << format_double(mags[c][b]) << '\n';
    }
  }
}

/// All windows; mag_norm is normalized per channel over the whole run.
inline void write_spectrogram_csv(std::ostream& out, std::span<const SpectrumFrame> frames,
                                  const StftPlan& plan, const char* prefix) {
  out << "t_d,time_s,freq,channel,re,im,mag_norm\n";
  const std::size_t p = frames.front().channels();
  for (std::size_t c = 0; c < p; ++c) {
    const auto gram = make_spectrogram(frames, c);
    const auto label = channel_label(prefix, c, frames.front().rx_count);
    for (std::size_t i = 0; i < frames.size(); ++i) {
      const auto& f = frames[i];
      const std::string time = format_double(static_cast<double>(f.t_d * plan.hop) / plan.sample_rate);
      for (std::size_t b = 0; b < f.bins(); ++b) {
        out << f.t_d << ',' << time << ',' << format_double(f.bin_freqs[b]) << ',' << label << ','
            << format_double(f.at(b, c).real()) << ',' << format_double(f.at(b, c).imag()) << ','
            << format_double(gram.magnitude[i][b]) << '\n';
      }
    }
  }
}

/// Per-window Frobenius norm of B and pre-scaling RMS of every output.
inline void write_trajectory_csv(std::ostream& out, std::span<const Tensor4> trajectory,
                                 const std::vector<std::vector<double>>& rms) {
  out << "t_d,b_frobenius";
  const std::size_t p = rms.empty() ? 0 : rms.front().size();
  for (std::size_t c = 0; c < p; ++c) out << ",rms_" << c + 1;
  out << '\n';
  for (std::size_t i = 0; i < trajectory.size(); ++i) {
    double fro = 0.0;
    for (const auto& v : trajectory[i].data()) fro += std::norm(v);
    out << i << ',' << format_double(std::sqrt(fro));
    for (double r : rms[i]) out << ',' << format_double(r);
    out << '\n';
  }
}

struct RunOptions {
  bool dump_b_trajectory = false;
  // Replay an existing series instead of simulating.
  std::optional<std::vector<ChannelGrid>> series;
};

struct RunResult {
  nlohmann::json manifest;
  std::optional<Separation> separation;
  bool diverged = false;
};

inline RunResult run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out_dir,
                                RunOptions options = {}) {
  namespace fs = std::filesystem;
  using nlohmann::json;
  validate(cfg);
  const auto started = std::chrono::steady_clock::now();
  fs::create_directories(out_dir);
  std::vector<std::string> written;
  auto write_text = [&](const std::string& name, auto&& body) {
    std::ofstream out(out_dir / name, std::ios::binary);
    if (!out) throw Error(ErrorKind::input, "cannot write '" + (out_dir / name).string() + "'");
    out.imbue(std::locale::classic());
    body(out);
    written.push_back(name);
  };

  const json config_json = to_json(cfg);
  write_text("config.json", [&](std::ostream& o) { o << config_json.dump(2) << '\n'; });

  const auto series = options.series ? std::move(*options.series) : synthesize_series(cfg.scene);
  write_text("mixed.csv", [&](std::ostream& o) { write_series_csv(o, series, cfg.scene.sample_rate); });
  write_text("mixed.bin", [&](std::ostream& o) { write_binary(o, series_block(series, cfg.scene.sample_rate)); });

  RunResult result;
  std::string status = "ok";
  try {
    Separation sep = separate_series(series, cfg);
    write_text("mixed_spectra_final.csv", [&](std::ostream& o) { write_frame_csv(o, sep.mixed.back(), "x"); });
    write_text("spectra_final.csv", [&](std::ostream& o) { write_frame_csv(o, sep.separated.back(), "y"); });
    write_text("spectrogram.csv",
               [&](std::ostream& o) { write_spectrogram_csv(o, sep.separated, cfg.stft, "y"); });
    write_text("report.json", [&](std::ostream& o) { o << to_json(sep.report).dump(2) << '\n'; });
    if (options.dump_b_trajectory) {
      write_text("trajectory.csv", [&](std::ostream& o) { write_trajectory_csv(o, sep.trajectory, sep.rms); });
      write_text("b_trajectory.bin", [&](std::ostream& o) { write_binary(o, trajectory_block(sep.trajectory)); });
    }
    result.separation = std::move(sep);
  } catch (const DivergenceError& e) {
    status = "diverged";
    result.diverged = true;
    Tensor4 last(cfg.scene.tx.size(), cfg.scene.rx.size());
    std::copy(e.last_good().begin(), e.last_good().end(), last.data().begin());
    const std::vector<Tensor4> snapshot{last};
    write_text("b_last_good.bin", [&](std::ostream& o) { write_binary(o, trajectory_block(snapshot)); });
    write_text("error.txt", [&](std::ostream& o) { o << e.what() << '\n'; });
  }

  json outputs = json::array();
  for (const auto& name : written) outputs.push_back({{"file", name}, {"sha256", file_sha256(out_dir / name)}});
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  result.manifest = {{"tool", "hotica"},
                     {"version", kToolVersion},
                     {"preset", cfg.name},
                     {"config_hash", sha256_hex(config_json.dump())},
                     {"seed", cfg.scene.rng_seed},
                     {"separator", to_string(cfg.separator)},
                     {"status", status},
                     {"wall_clock_s", wall},
                     {"config", config_json},
                     {"outputs", outputs}};
  std::ofstream(out_dir / "manifest.json") << result.manifest.dump(2) << '\n';
  return result;
}

inline nlohmann::json load_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::input, "cannot open '" + path.string() + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::input, path.string() + ": " + e.what());
  }
}

/// Report referenced by a manifest file; a directory path means its manifest.json.
inline SeparationReport report_for_manifest(std::filesystem::path manifest_path) {
  if (std::filesystem::is_directory(manifest_path)) manifest_path /= "manifest.json";
  const auto manifest = load_json(manifest_path);
  if (manifest.value("status", "") != "ok") {
    throw Error(ErrorKind::input, manifest_path.string() + ": run did not complete");
  }
  return report_from_json(load_json(manifest_path.parent_path() / "report.json"));
}

struct Comparison {
  nlohmann::json deltas;
  bool second_dominates = true;  // interference ratio of b >= a for every target
};

inline double metric_delta(double a, double b) {
  if (a == b) return 0.0;  // equal infinities
  return b - a;
}

/// Per-metric differences (b - a) between two completed runs.
inline Comparison compare_reports(const SeparationReport& a, const SeparationReport& b) {
  using nlohmann::json;
  if (a.tx_count != b.tx_count || a.rx_count != b.rx_count || a.targets.size() != b.targets.size()) {
    throw Error(ErrorKind::config, "reports have incompatible channel or target counts");
  }
  Comparison out;
  json targets = json::array();
  for (std::size_t k = 0; k < a.targets.size(); ++k) {
    const auto& ta = a.targets[k];
    const auto& tb = b.targets[k];
    const double d_int = metric_delta(ta.interference_db, tb.interference_db);
    if (tb.interference_db < ta.interference_db) out.second_dominates = false;
    json conv = nullptr;
    if (ta.convergence_s && tb.convergence_s) conv = *tb.convergence_s - *ta.convergence_s;
    targets.push_back({{"target", ta.target},
                       {"primary_error_hz", detail::finite_or(metric_delta(ta.primary_error(), tb.primary_error()), "inf")},
                       {"secondary_error_hz",
                        detail::finite_or(metric_delta(ta.secondary_error(), tb.secondary_error()), "inf")},
                       {"interference_db", detail::finite_or(d_int, "inf")},
                       {"convergence_s", conv}});
  }
  json noise = json::array();
  for (std::size_t i = 0; i < std::min(a.noise.size(), b.noise.size()); ++i) {
    noise.push_back({{"index", i}, {"leakage", b.noise[i].leakage - a.noise[i].leakage}});
  }
  out.deltas = {{"targets", targets}, {"noise_channels", noise}, {"second_dominates", out.second_dominates}};
  return out;
}

inline Comparison compare_manifests(const std::filesystem::path& a, const std::filesystem::path& b) {
  return compare_reports(report_for_manifest(a), report_for_manifest(b));
}

}  // namespace hotica
