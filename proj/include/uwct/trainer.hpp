#pragma once

#include <filesystem>
#include <functional>
#include <vector>

#include "uwct/adam.hpp"
#include "uwct/config.hpp"
#include "uwct/data.hpp"
#include "uwct/losses.hpp"
#include "uwct/nets.hpp"
#include "uwct/replay.hpp"

namespace uwct {

// Everything one run carries: the four networks, their optimizers, the two
// replay pools and the step counter. Built from a config + seed; restored
// bit-exactly from a checkpoint.
struct TrainState {
  TrainConfig config;
  uint64_t seed = 0;
  uint64_t step = 0;

  GeneratorNet<float> gen_fwd;   // X -> Y
  GeneratorNet<float> gen_bwd;   // Y -> X
  DiscriminatorNet<float> disc_x;
  DiscriminatorNet<float> disc_y;

  AdamOptimizer<float> opt_gen_fwd;
  AdamOptimizer<float> opt_gen_bwd;
  AdamOptimizer<float> opt_disc_x;
  AdamOptimizer<float> opt_disc_y;

  ReplayBuffer<float> replay_x;  // pool of F(y) samples for D_X
  ReplayBuffer<float> replay_y;  // pool of G(x) samples for D_Y

  Rng trainer_rng;

  static TrainState create(const TrainConfig& config, uint64_t seed);
};

// One alternating optimization step:
//   1. joint generator update: G(x), F(y), both cycles, both totals with the
//      shared cycle term, ADAM on G and F (or two sequential single-generator
//      phases in strict alternation mode);
//   2. D_Y least-squares update on y vs replay-queried G(x);
//   3. D_X least-squares update on x vs replay-queried F(y).
// Gradients are zeroed between sub-steps. In checked mode a NaN loss aborts,
// naming the step and the loss.
LossReport training_step(TrainState& state, const ImageBatch& batch);

struct TrainResult {
  std::filesystem::path final_checkpoint;
  std::vector<LossReport> reports;
};

// Header comment plus the fixed field order of loss_log.txt.
std::string loss_log_header();
std::string format_loss_log_line(const LossReport& report);

// Runs the configured number of steps, appending one loss-log line per step
// to <out_dir>/loss_log.txt, writing periodic checkpoints and a final
// checkpoint plus config_snapshot.cfg. `on_step`, when set, observes every
// report. Resuming appends to the existing log.
TrainResult train(TrainState& state, const UnpairedDataset& dataset,
                  const std::filesystem::path& out_dir,
                  const std::function<void(const LossReport&)>& on_step = {});

}  // namespace uwct
