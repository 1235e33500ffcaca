// hotica: simulate MIMO Doppler radar scenes and separate them with online
// CF-ICA or HOT-ICA.
//
// Exit codes: 0 success, 2 config error, 3 divergence, 4 comparison failure.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hotica/config.hpp"
#include "hotica/pipeline.hpp"
#include "hotica/series_io.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitDivergence = 3;
constexpr int kExitComparison = 4;

struct ExperimentFlags {
  std::string target;  // preset name or config path (positional)
  std::string config;
  std::string preset;
  std::optional<std::uint64_t> seed;
  std::string separator;
  std::vector<double> eta_tx;
  std::vector<double> eta_rx;
  std::string out_dir = "out";
  bool dump_b = false;
};

void add_experiment_flags(CLI::App* cmd, ExperimentFlags& f, bool learning) {
  cmd->add_option("target", f.target, "Preset name or config file");
  cmd->add_option("--config", f.config, "JSON experiment config");
  cmd->add_option("--preset", f.preset, "Bundled preset name");
  cmd->add_option("--seed", f.seed, "Override scene.rng_seed");
  cmd->add_option("--out-dir", f.out_dir, "Output directory")->capture_default_str();
  if (!learning) return;
  cmd->add_option("--separator", f.separator, "cf or hot")->check(CLI::IsMember({"cf", "hot"}));
  cmd->add_option("--eta-tx", f.eta_tx, "Per-Tx sensitivity, comma separated")->delimiter(',');
  cmd->add_option("--eta-rx", f.eta_rx, "Per-Rx sensitivity, comma separated")->delimiter(',');
  cmd->add_flag("--dump-b-trajectory", f.dump_b, "Write per-window B snapshots");
}

hotica::ExperimentConfig resolve(const ExperimentFlags& f) {
  using hotica::Error;
  using hotica::ErrorKind;
  std::string preset = f.preset, config = f.config;
  if (!f.target.empty()) {
    const auto& names = hotica::preset_names();
    if (std::find(names.begin(), names.end(), f.target) != names.end()) {
      preset = f.target;
    } else {
      config = f.target;
    }
  }
  if (preset.empty() == config.empty()) throw Error(ErrorKind::config, "give exactly one of a preset or a config file");
  auto cfg = preset.empty() ? hotica::load_experiment(config) : hotica::make_preset(preset);
  if (f.seed) cfg.scene.rng_seed = *f.seed;
  if (!f.separator.empty()) cfg.separator = hotica::separator_from_string(f.separator);
  if (!f.eta_tx.empty() || !f.eta_rx.empty()) {
    auto profile = cfg.effective_profile();
    if (!f.eta_tx.empty()) profile.eta_tx = f.eta_tx;
    if (!f.eta_rx.empty()) profile.eta_rx = f.eta_rx;
    cfg.sensitivity = profile;
  }
  hotica::validate(cfg);
  return cfg;
}

int finish_run(const hotica::RunResult& r, const std::filesystem::path& out_dir) {
  if (r.diverged) {
    std::cerr << "separation diverged; partial artifacts in " << out_dir << '\n';
    return kExitDivergence;
  }
  hotica::print_table(std::cout, r.separation->report);
  std::cout << "manifest: " << (out_dir / "manifest.json").string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"HOT-ICA MIMO Doppler radar separation"};
  app.require_subcommand(1);

  ExperimentFlags sim_flags, sep_flags, run_flags;
  std::string input;
  auto* simulate = app.add_subcommand("simulate", "Synthesize the mixed series of a scene");
  add_experiment_flags(simulate, sim_flags, false);

  auto* separate = app.add_subcommand("separate", "Separate a previously simulated HOTICA01 series");
  add_experiment_flags(separate, sep_flags, true);
  separate->add_option("--input", input, "mixed.bin written by simulate or run")->required();

  auto* run = app.add_subcommand("run", "Simulate, separate and evaluate");
  add_experiment_flags(run, run_flags, true);

  std::string manifest_a, manifest_b;
  auto* compare = app.add_subcommand("compare", "Compare two runs; exit 4 unless the second dominates");
  compare->add_option("baseline", manifest_a, "Manifest (or run directory) of the baseline")->required();
  compare->add_option("candidate", manifest_b, "Manifest (or run directory) of the candidate")->required();

  std::string preset_name;
  auto* preset = app.add_subcommand("preset", "Print a bundled preset as a JSON config");
  preset->add_option("name", preset_name, "Preset name")->required()->check(CLI::IsMember(hotica::preset_names()));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*simulate) {
      const auto cfg = resolve(sim_flags);
      const std::filesystem::path dir = sim_flags.out_dir;
      std::filesystem::create_directories(dir);
      const auto series = hotica::synthesize_series(cfg.scene);
      std::ofstream csv(dir / "mixed.csv");
      csv.imbue(std::locale::classic());
      hotica::write_series_csv(csv, series, cfg.scene.sample_rate);
      hotica::save_binary((dir / "mixed.bin").string(), hotica::series_block(series, cfg.scene.sample_rate));
      std::ofstream(dir / "config.json") << hotica::to_json(cfg).dump(2) << '\n';
      std::cout << series.size() << " frames of " << cfg.scene.tx.size() << "x" << cfg.scene.rx.size()
                << " channels written to " << dir.string() << '\n';
      return 0;
    }
    if (*separate) {
      const auto cfg = resolve(sep_flags);
      hotica::RunOptions options;
      options.dump_b_trajectory = sep_flags.dump_b;
      options.series = hotica::series_from_block(hotica::load_binary(input));
      const auto r = hotica::run_experiment(cfg, sep_flags.out_dir, std::move(options));
      return finish_run(r, sep_flags.out_dir);
    }
    if (*run) {
      const auto cfg = resolve(run_flags);
      hotica::RunOptions options;
      options.dump_b_trajectory = run_flags.dump_b;
      const auto r = hotica::run_experiment(cfg, run_flags.out_dir, std::move(options));
      return finish_run(r, run_flags.out_dir);
    }
    if (*compare) {
      const auto c = hotica::compare_manifests(manifest_a, manifest_b);
      std::cout << c.deltas.dump(2) << '\n';
      return c.second_dominates ? 0 : kExitComparison;
    }
    if (*preset) {
      std::cout << hotica::to_json(hotica::make_preset(preset_name)).dump(2) << '\n';
      return 0;
    }
  } catch (const hotica::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    switch (e.kind()) {
      case hotica::ErrorKind::divergence:
        return kExitDivergence;
      default:
        return kExitConfig;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
