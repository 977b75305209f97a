#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "uwct/adam.hpp"
#include "uwct/losses.hpp"
#include "uwct/nets.hpp"

namespace uwct {

// Raised for malformed configuration or usage errors; the CLI maps it to
// exit code 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class AlternationMode { Joint, Strict };

AlternationMode alternation_from_string(const std::string& name);
std::string to_string(AlternationMode mode);

// Full experiment configuration. Sections and keys are fixed; unknown keys
// are rejected by name. Serialization is canonical, so
// parse -> serialize -> parse is idempotent.
struct TrainConfig {
  // [data]
  std::string domain_x;
  std::string domain_y;
  int64_t image_size = 256;
  bool augment = false;  // reserved hook; only 'false' is implemented

  // [arch]
  std::string arch_preset = "default";
  std::optional<int> base_width;
  std::optional<int> disc_base_width;
  std::optional<int> n_res_blocks;

  // [loss]
  LossWeights weights;
  SsimParams ssim;
  bool use_nll_adversarial = false;

  // [optim]
  AdamConfig adam;

  // [train]
  int64_t batch = 1;
  int64_t steps = 500;
  std::optional<uint64_t> seed;
  int64_t checkpoint_every = 100;
  int64_t buffer_capacity = 50;
  AlternationMode alternation = AlternationMode::Joint;
  bool checked_mode = true;
  bool determinism = true;

  void validate() const;
  // Arch config with preset defaults resolved and overrides applied.
  ArchConfig resolve_arch() const;
};

TrainConfig parse_config(const std::string& text);
TrainConfig load_config_file(const std::filesystem::path& path);
std::string serialize_config(const TrainConfig& config);
// Canonical serialization of built-in defaults (the generated reference file).
std::string default_config_text();

// Seed precedence: explicit flag > config file > UWCT_SEED environment
// variable > 0.
uint64_t resolve_seed(const std::optional<uint64_t>& flag_seed, const TrainConfig& config);

}  // namespace uwct
