#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "panelsmc/model.hpp"

namespace panelsmc::cli {

// Flat key = value configuration with documented defaults for every key, so
// `simulate` runs with no config at all. run_level selects preset particle
// counts, iteration counts and replication factors; any explicit key
// overrides its preset.
class RunConfig {
 public:
  RunConfig() = default;
  static RunConfig from_file(const std::filesystem::path& path);  // ConfigError on bad syntax

  // command-line override; unknown keys -> ConfigError
  void set(const std::string& key, const std::string& value);

  long get_int(const std::string& key) const;
  double get_double(const std::string& key) const;
  std::string get_string(const std::string& key) const;

  int run_level() const;
  std::uint64_t seed() const;
  unsigned threads() const;

  // preset-resolved settings (explicit keys win)
  long pf_np() const;
  long mif_nseq() const;
  long mif_nmif() const;
  long mif_np() const;
  long eval_reps() const;
  long eval_np() const;
  long refine_reps() const;
  long profile_points() const;

  // every key with its effective value, presets resolved
  std::map<std::string, std::string> echo() const;

 private:
  std::map<std::string, std::string> entries_;
};

struct RunManifest {
  std::string command;
  std::map<std::string, std::string> config;
  double duration_seconds = 0.0;
  std::vector<std::pair<std::string, std::string>> artifacts;  // (file name, checksum)
  std::vector<std::string> warnings;
};

// FNV-1a 64 of a file's bytes, as fixed-width hex.
std::string file_checksum(const std::filesystem::path& path);

// Builds the Gompertz panel directly from the configured model parameters.
PanelModel model_from_config(const RunConfig& config);

// Rebuilds the panel from data.csv / params.csv written by cmd_simulate.
PanelModel load_model(const RunConfig& config, const std::filesystem::path& out_dir);

// Subcommands of the workflow: simulate -> pfilter / kalman -> mif ->
// profile -> mcap. Each writes its CSV artifacts plus a manifest_<cmd>.json
// into out_dir and returns the manifest.
RunManifest cmd_simulate(const RunConfig& config, const std::filesystem::path& out_dir);
RunManifest cmd_pfilter(const RunConfig& config, const std::filesystem::path& out_dir);
RunManifest cmd_kalman(const RunConfig& config, const std::filesystem::path& out_dir);
RunManifest cmd_mif(const RunConfig& config, const std::filesystem::path& out_dir);
RunManifest cmd_profile(const RunConfig& config, const std::filesystem::path& out_dir);
RunManifest cmd_mcap(const RunConfig& config, const std::filesystem::path& out_dir);

}  // namespace panelsmc::cli
