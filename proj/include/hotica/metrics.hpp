#pragma once

// Separation-quality measures on separated spectra: permutation resolution,
// peak accuracy, cross-target interference, noise leakage, convergence.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <iomanip>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hotica/common.hpp"
#include "hotica/scene.hpp"
#include "hotica/spectral.hpp"

namespace hotica {

inline std::size_t nearest_bin(std::span<const double> freqs, double f) {
  if (freqs.empty()) throw Error(ErrorKind::input, "no bins to search");
  std::size_t best = 0;
  for (std::size_t k = 1; k < freqs.size(); ++k) {
    if (std::abs(freqs[k] - f) < std::abs(freqs[best] - f)) best = k;
  }
  return best;
}

struct AssignedPair {
  std::size_t channel = 0;
  std::size_t target = 0;
  double score = 0.0;
};

struct ChannelAssignment {
  std::vector<AssignedPair> pairs;  // one per target, in target order
  std::vector<std::size_t> noise_channels;

  std::optional<std::size_t> channel_of(std::size_t target) const {
    for (const auto& p : pairs) {
      if (p.target == target) return p.channel;
    }
    return std::nullopt;
  }
};

/// Injective target -> channel map maximizing the summed per-channel
/// normalized magnitude at each target's respiration bin. Exhaustive search;
/// among equal totals the lexicographically lowest channel choice wins.
inline ChannelAssignment assign_channels(const std::vector<std::vector<double>>& spectra,
                                         std::span<const double> freqs,
                                         std::span<const double> target_freqs) {
  const std::size_t channels = spectra.size();
  const std::size_t targets = target_freqs.size();
  if (channels < targets) throw Error(ErrorKind::input, "fewer channels than targets");

  std::vector<std::size_t> bins;
  for (double f : target_freqs) bins.push_back(nearest_bin(freqs, f));
  std::vector<std::vector<double>> score(channels, std::vector<double>(targets, 0.0));
  for (std::size_t c = 0; c < channels; ++c) {
    const double peak = *std::max_element(spectra[c].begin(), spectra[c].end());
    if (!(peak > 0.0)) continue;
    for (std::size_t k = 0; k < targets; ++k) score[c][k] = spectra[c][bins[k]] / peak;
  }

  std::vector<std::size_t> current(targets), best(targets);
  std::vector<bool> used(channels, false);
  double best_total = -1.0;
  auto search = [&](auto&& self, std::size_t k, double total) -> void {
    if (k == targets) {
      if (total > best_total) {
        best_total = total;
        best = current;
      }
      return;
    }
    for (std::size_t c = 0; c < channels; ++c) {
      if (used[c]) continue;
      used[c] = true;
      current[k] = c;
      self(self, k + 1, total + score[c][k]);
      used[c] = false;
    }
  };
  search(search, 0, 0.0);

  ChannelAssignment out;
  std::vector<bool> taken(channels, false);
  for (std::size_t k = 0; k < targets; ++k) {
    out.pairs.push_back({best[k], k, score[best[k]][k]});
    taken[best[k]] = true;
  }
  for (std::size_t c = 0; c < channels; ++c) {
    if (!taken[c]) out.noise_channels.push_back(c);
  }
  return out;
}

/// 20 log10(|own bin| / max |other bins|); +inf when the others are all zero.
inline double interference_ratio(std::span<const double> magnitude, std::span<const double> freqs,
                                 double own_freq, std::span<const double> other_freqs) {
  const double own = magnitude[nearest_bin(freqs, own_freq)];
  double other = 0.0;
  for (double f : other_freqs) other = std::max(other, magnitude[nearest_bin(freqs, f)]);
  if (!(other > 0.0)) return std::numeric_limits<double>::infinity();
  return 20.0 * std::log10(own / other);
}

/// Index of the first frame of the trailing third of a run.
inline std::size_t final_third_start(std::size_t frames) {
  return frames - std::max<std::size_t>(1, frames / 3);
}

/// Signal time (t_d * hop / sample_rate) of the first window after which the
/// dominant bin stays within one bin of `expected_freq`; nullopt if it never
/// settles.
inline std::optional<double> convergence_time(const Spectrogram& spec, double expected_freq,
                                              std::size_t hop, double sample_rate) {
  if (spec.frames() == 0) throw Error(ErrorKind::input, "empty spectrogram");
  const auto target = static_cast<long>(nearest_bin(spec.bin_freqs, expected_freq));
  std::size_t first_ok = spec.frames();
  for (std::size_t i = spec.frames(); i-- > 0;) {
    const auto& row = spec.magnitude[i];
    const auto dom = static_cast<long>(std::max_element(row.begin(), row.end()) - row.begin());
    if (std::abs(dom - target) > 1) break;
    first_ok = i;
  }
  if (first_ok == spec.frames()) return std::nullopt;
  return static_cast<double>(spec.t_d[first_ok] * hop) / sample_rate;
}

/// Largest normalized magnitude at any target bin over the final third.
inline double leakage(const Spectrogram& spec, std::span<const double> target_freqs) {
  double worst = 0.0;
  for (std::size_t i = final_third_start(spec.frames()); i < spec.frames(); ++i) {
    for (double f : target_freqs) worst = std::max(worst, spec.magnitude[i][nearest_bin(spec.bin_freqs, f)]);
  }
  return worst;
}

struct TargetResult {
  std::size_t target = 0;
  std::size_t channel = 0;
  double score = 0.0;
  double resp_freq = 0.0;
  double heart_freq = 0.0;
  std::optional<Peak> primary;
  std::optional<Peak> secondary;
  double interference_db = 0.0;
  std::optional<double> convergence_s;

  double primary_error() const {
    return primary ? std::abs(primary->freq - resp_freq) : std::numeric_limits<double>::infinity();
  }
  double secondary_error() const {
    return secondary ? std::abs(secondary->freq - heart_freq) : std::numeric_limits<double>::infinity();
  }
};

struct NoiseChannelResult {
  std::size_t channel = 0;
  double leakage = 0.0;
};

struct SeparationReport {
  std::size_t tx_count = 0;
  std::size_t rx_count = 0;
  std::size_t windows = 0;
  double bin_spacing = 0.0;
  std::vector<TargetResult> targets;
  std::vector<NoiseChannelResult> noise;

  std::size_t channels() const { return tx_count * rx_count; }

  /// Slowest target convergence; nullopt if any target never settled.
  std::optional<double> convergence_time() const {
    double worst = 0.0;
    for (const auto& t : targets) {
      if (!t.convergence_s) return std::nullopt;
      worst = std::max(worst, *t.convergence_s);
    }
    return worst;
  }
};

/// Per-channel magnitude averaged over the final third of the run.
inline std::vector<std::vector<double>> steady_state_spectra(std::span<const SpectrumFrame> frames) {
  const std::size_t p = frames.front().channels();
  std::vector<std::vector<double>> out(p, std::vector<double>(frames.front().bins(), 0.0));
  const std::size_t start = final_third_start(frames.size());
  for (std::size_t i = start; i < frames.size(); ++i) {
    for (std::size_t c = 0; c < p; ++c) {
      for (std::size_t b = 0; b < frames[i].bins(); ++b) out[c][b] += std::abs(frames[i].at(b, c));
    }
  }
  for (auto& s : out) {
    for (double& v : s) v /= static_cast<double>(frames.size() - start);
  }
  return out;
}

inline SeparationReport evaluate_separation(std::span<const SpectrumFrame> separated,
                                            std::span<const ScatterPoint> targets, const StftPlan& plan) {
  if (separated.empty()) throw Error(ErrorKind::input, "no separated frames to evaluate");
  SeparationReport report;
  report.tx_count = separated.front().tx_count;
  report.rx_count = separated.front().rx_count;
  report.windows = separated.size();
  report.bin_spacing = plan.bin_spacing();
  const auto& freqs = separated.front().bin_freqs;
  const std::size_t p = report.channels();

  std::vector<double> resp;
  for (const auto& t : targets) resp.push_back(t.vitals.resp_freq);
  const auto steady = steady_state_spectra(separated);
  const auto assignment = assign_channels(steady, freqs, resp);

  std::vector<Spectrogram> grams;
  for (std::size_t c = 0; c < p; ++c) grams.push_back(make_spectrogram(separated, c));

  for (const auto& pair : assignment.pairs) {
    TargetResult r;
    r.target = pair.target;
    r.channel = pair.channel;
    r.score = pair.score;
    r.resp_freq = targets[pair.target].vitals.resp_freq;
    r.heart_freq = targets[pair.target].vitals.heart_freq;
    const auto last = channel_magnitude(separated.back(), pair.channel);
    const auto peaks = find_peaks(last, freqs, 2);
    if (!peaks.peaks.empty()) r.primary = peaks.peaks[0];
    if (peaks.peaks.size() > 1) r.secondary = peaks.peaks[1];
    std::vector<double> others;
    for (std::size_t k = 0; k < resp.size(); ++k) {
      if (k != pair.target) others.push_back(resp[k]);
    }
    r.interference_db = interference_ratio(steady[pair.channel], freqs, r.resp_freq, others);
    r.convergence_s = convergence_time(grams[pair.channel], r.resp_freq, plan.hop, plan.sample_rate);
    report.targets.push_back(r);
  }
  for (std::size_t c : assignment.noise_channels) report.noise.push_back({c, leakage(grams[c], resp)});
  return report;
}

namespace detail {

inline nlohmann::json finite_or(double v, const char* marker) {
  if (std::isfinite(v)) return v;
  return std::string(v > 0 ? "+" : "-") + marker;
}

inline double number_or_inf(const nlohmann::json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (!s.empty() && s[0] == '-') return -std::numeric_limits<double>::infinity();
    return std::numeric_limits<double>::infinity();
  }
  throw Error(ErrorKind::input, "malformed number in report");
}

}  // namespace detail

inline nlohmann::json to_json(const SeparationReport& report) {
  using nlohmann::json;
  json targets = json::array();
  for (const auto& t : report.targets) {
    auto peak = [](const std::optional<Peak>& p) -> json {
      if (!p) return nullptr;
      return {{"freq", p->freq}, {"magnitude", p->magnitude}};
    };
    json conv = t.convergence_s ? json(*t.convergence_s) : json("no-convergence");
    targets.push_back({{"target", t.target},
                       {"channel", t.channel},
                       {"score", t.score},
                       {"resp_freq", t.resp_freq},
                       {"heart_freq", t.heart_freq},
                       {"primary_peak", peak(t.primary)},
                       {"secondary_peak", peak(t.secondary)},
                       {"primary_error_hz", detail::finite_or(t.primary_error(), "inf")},
                       {"secondary_error_hz", detail::finite_or(t.secondary_error(), "inf")},
                       {"interference_db", detail::finite_or(t.interference_db, "inf")},
                       {"convergence_s", conv}});
  }
  json noise = json::array();
  for (const auto& n : report.noise) noise.push_back({{"channel", n.channel}, {"leakage", n.leakage}});
  const auto conv = report.convergence_time();
  return {{"tx_count", report.tx_count},
          {"rx_count", report.rx_count},
          {"windows", report.windows},
          {"bin_spacing_hz", report.bin_spacing},
          {"targets", targets},
          {"noise_channels", noise},
          {"convergence_s", conv ? json(*conv) : json("no-convergence")}};
}

inline SeparationReport report_from_json(const nlohmann::json& j) {
  SeparationReport r;
  try {
    r.tx_count = j.at("tx_count").get<std::size_t>();
    r.rx_count = j.at("rx_count").get<std::size_t>();
    r.windows = j.at("windows").get<std::size_t>();
    r.bin_spacing = j.at("bin_spacing_hz").get<double>();
    for (const auto& t : j.at("targets")) {
      TargetResult tr;
      tr.target = t.at("target").get<std::size_t>();
      tr.channel = t.at("channel").get<std::size_t>();
      tr.score = t.at("score").get<double>();
      tr.resp_freq = t.at("resp_freq").get<double>();
      tr.heart_freq = t.at("heart_freq").get<double>();
      auto peak = [](const nlohmann::json& p) -> std::optional<Peak> {
        if (p.is_null()) return std::nullopt;
        return Peak{p.at("freq").get<double>(), p.at("magnitude").get<double>(), 0};
      };
      tr.primary = peak(t.at("primary_peak"));
      tr.secondary = peak(t.at("secondary_peak"));
      tr.interference_db = detail::number_or_inf(t.at("interference_db"));
      const auto& c = t.at("convergence_s");
      if (c.is_number()) tr.convergence_s = c.get<double>();
      r.targets.push_back(tr);
    }
    for (const auto& n : j.at("noise_channels")) {
      r.noise.push_back({n.at("channel").get<std::size_t>(), n.at("leakage").get<double>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::input, std::string("malformed report: ") + e.what());
  }
  return r;
}

inline void print_table(std::ostream& out, const SeparationReport& report) {
  out << "target  channel  primary(Hz)  err(Hz)  secondary(Hz)  err(Hz)  interf(dB)  conv(s)\n";
  out << std::fixed;
  for (const auto& t : report.targets) {
    out << std::setw(6) << "H" + std::to_string(t.target + 1) << std::setw(9) << t.channel + 1
        << std::setprecision(3) << std::setw(13) << (t.primary ? t.primary->freq : NAN) << std::setw(9)
        << t.primary_error() << std::setw(15) << (t.secondary ? t.secondary->freq : NAN) << std::setw(9)
        << t.secondary_error() << std::setprecision(1) << std::setw(12) << t.interference_db;
    if (t.convergence_s) {
      out << std::setprecision(2) << std::setw(9) << *t.convergence_s << '\n';
    } else {
      out << "  no-convergence\n";
    }
  }
  for (const auto& n : report.noise) {
    out << "noise channel " << n.channel + 1 << ": leakage " << std::setprecision(3) << n.leakage << '\n';
  }
  out << std::defaultfloat;
}

}  // namespace hotica
