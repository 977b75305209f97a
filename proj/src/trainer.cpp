#include "uwct/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "uwct/checkpoint.hpp"

namespace uwct {

namespace {

constexpr uint64_t kStreamGenFwd = 1;
constexpr uint64_t kStreamGenBwd = 2;
constexpr uint64_t kStreamDiscX = 3;
constexpr uint64_t kStreamDiscY = 4;
constexpr uint64_t kStreamReplayX = 5;
constexpr uint64_t kStreamReplayY = 6;
constexpr uint64_t kStreamTrainer = 7;

using FloatTensor = Tensor<float>;

std::string format_g17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Generator-side adversarial term. Least squares by default; the nll mode
// uses the literal log form on sigmoid probabilities.
FloatTensor generator_adv_term(const FloatTensor& fake_logits, bool use_nll) {
  if (!use_nll) return adversarial_ls_g(fake_logits);
  const FloatTensor probs = clamp(sigmoid(fake_logits), 1e-7f, 1.0f - 1e-7f);
  return mean_all(log_op(add_scalar(neg(probs), 1.0f)));
}

FloatTensor discriminator_loss(const FloatTensor& real_logits,
                               const FloatTensor& fake_logits, bool use_nll) {
  if (!use_nll) return adversarial_ls_d(real_logits, fake_logits);
  return neg(adversarial_nll(sigmoid(real_logits), sigmoid(fake_logits)));
}

void zero_all_grads(TrainState& state) {
  state.opt_gen_fwd.zero_grad();
  state.opt_gen_bwd.zero_grad();
  state.opt_disc_x.zero_grad();
  state.opt_disc_y.zero_grad();
}

void check_report_finite(const LossReport& report, uint64_t step) {
  const std::pair<const char*, double> fields[] = {
      {"adv_g_fwd", report.adv_g_fwd}, {"adv_g_bwd", report.adv_g_bwd},
      {"adv_d_x", report.adv_d_x},     {"adv_d_y", report.adv_d_y},
      {"cyc", report.cyc},             {"ssim_fwd", report.ssim_fwd},
      {"ssim_bwd", report.ssim_bwd},   {"total_g_fwd", report.total_g_fwd},
      {"total_g_bwd", report.total_g_bwd}};
  for (const auto& [name, value] : fields) {
    if (std::isnan(value)) {
      throw std::runtime_error("step " + std::to_string(step) + ": loss " + name +
                               " is NaN");
    }
  }
}

}  // namespace

TrainState TrainState::create(const TrainConfig& config, uint64_t seed) {
  config.validate();
  const ArchConfig arch = config.resolve_arch();
  TrainState state;
  state.config = config;
  state.config.seed = seed;
  state.seed = seed;

  Rng rng_gf = Rng::stream(seed, kStreamGenFwd);
  Rng rng_gb = Rng::stream(seed, kStreamGenBwd);
  Rng rng_dx = Rng::stream(seed, kStreamDiscX);
  Rng rng_dy = Rng::stream(seed, kStreamDiscY);
  state.gen_fwd = GeneratorNet<float>::build(arch, rng_gf);
  state.gen_bwd = GeneratorNet<float>::build(arch, rng_gb);
  state.disc_x = DiscriminatorNet<float>::build(arch, rng_dx);
  state.disc_y = DiscriminatorNet<float>::build(arch, rng_dy);

  state.opt_gen_fwd = AdamOptimizer<float>(state.gen_fwd.param_tensors(), config.adam);
  state.opt_gen_bwd = AdamOptimizer<float>(state.gen_bwd.param_tensors(), config.adam);
  state.opt_disc_x = AdamOptimizer<float>(state.disc_x.param_tensors(), config.adam);
  state.opt_disc_y = AdamOptimizer<float>(state.disc_y.param_tensors(), config.adam);

  state.replay_x = ReplayBuffer<float>(config.buffer_capacity,
                                       Rng::stream(seed, kStreamReplayX));
  state.replay_y = ReplayBuffer<float>(config.buffer_capacity,
                                       Rng::stream(seed, kStreamReplayY));
  state.trainer_rng = Rng::stream(seed, kStreamTrainer);
  return state;
}

LossReport training_step(TrainState& state, const ImageBatch& batch) {
  set_check_finite(state.config.checked_mode);
  const LossWeights& weights = state.config.weights;
  const SsimParams& ssim = state.config.ssim;
  const bool use_nll = state.config.use_nll_adversarial;
  LossReport report;

  // --- sub-step 1: generators (joint by default, G then F in strict mode) ---
  zero_all_grads(state);
  const FloatTensor gx = state.gen_fwd.forward(batch.x);
  const FloatTensor fy = state.gen_bwd.forward(batch.y);
  const FloatTensor fgx = state.gen_bwd.forward(gx);
  const FloatTensor gfy = state.gen_fwd.forward(fy);
  const FloatTensor adv_fwd = generator_adv_term(state.disc_y.forward(gx), use_nll);
  const FloatTensor adv_bwd = generator_adv_term(state.disc_x.forward(fy), use_nll);
  const FloatTensor cyc = cycle_loss(batch.x, fgx, batch.y, gfy);
  const FloatTensor ssim_fwd = ssim_loss(batch.x, gx, ssim);
  const FloatTensor ssim_bwd = ssim_loss(batch.y, fy, ssim);
  const FloatTensor total_fwd = total_generator_loss(adv_fwd, cyc, ssim_fwd, weights);
  const FloatTensor total_bwd = total_generator_loss(adv_bwd, cyc, ssim_bwd, weights);

  report.adv_g_fwd = adv_fwd.item();
  report.adv_g_bwd = adv_bwd.item();
  report.cyc = cyc.item();
  report.ssim_fwd = ssim_fwd.item();
  report.ssim_bwd = ssim_bwd.item();
  report.total_g_fwd = total_fwd.item();
  report.total_g_bwd = total_bwd.item();

  if (state.config.alternation == AlternationMode::Joint) {
    // Both totals share one cycle term; count it once in the joint objective.
    FloatTensor joint = add(
        add(mul_scalar(add(adv_fwd, adv_bwd), static_cast<float>(weights.lambda_adv)),
            mul_scalar(cyc, static_cast<float>(weights.lambda_cyc))),
        mul_scalar(add(ssim_fwd, ssim_bwd), static_cast<float>(weights.lambda_ssim)));
    joint.backward();
    state.opt_gen_fwd.step();
    state.opt_gen_bwd.step();
  } else {
    total_fwd.backward();
    state.opt_gen_fwd.step();
    zero_all_grads(state);
    // F's phase re-runs the forwards against the just-updated G. The report
    // keeps the phase-one values so both totals share one cycle term.
    const FloatTensor gx2 = state.gen_fwd.forward(batch.x);
    const FloatTensor fy2 = state.gen_bwd.forward(batch.y);
    const FloatTensor fgx2 = state.gen_bwd.forward(gx2);
    const FloatTensor gfy2 = state.gen_fwd.forward(fy2);
    const FloatTensor adv_bwd2 = generator_adv_term(state.disc_x.forward(fy2), use_nll);
    const FloatTensor cyc2 = cycle_loss(batch.x, fgx2, batch.y, gfy2);
    const FloatTensor ssim_bwd2 = ssim_loss(batch.y, fy2, ssim);
    total_generator_loss(adv_bwd2, cyc2, ssim_bwd2, weights).backward();
    state.opt_gen_bwd.step();
  }

  // --- sub-step 2: D_Y on real y vs replayed G(x) ---
  zero_all_grads(state);
  const FloatTensor fake_y = state.replay_y.query(gx);
  const FloatTensor loss_dy =
      discriminator_loss(state.disc_y.forward(batch.y), state.disc_y.forward(fake_y),
                         use_nll);
  report.adv_d_y = loss_dy.item();
  loss_dy.backward();
  state.opt_disc_y.step();

  // --- sub-step 3: D_X on real x vs replayed F(y) ---
  zero_all_grads(state);
  const FloatTensor fake_x = state.replay_x.query(fy);
  const FloatTensor loss_dx =
      discriminator_loss(state.disc_x.forward(batch.x), state.disc_x.forward(fake_x),
                         use_nll);
  report.adv_d_x = loss_dx.item();
  loss_dx.backward();
  state.opt_disc_x.step();

  ++state.step;
  report.step = state.step;
  if (state.config.checked_mode) check_report_finite(report, state.step);
  return report;
}

std::string loss_log_header() {
  return "# step adv_g_fwd adv_g_bwd adv_d_x adv_d_y cyc ssim_fwd ssim_bwd "
         "total_g_fwd total_g_bwd\n";
}

std::string format_loss_log_line(const LossReport& r) {
  std::ostringstream out;
  out << r.step << ' ' << format_g17(r.adv_g_fwd) << ' ' << format_g17(r.adv_g_bwd) << ' '
      << format_g17(r.adv_d_x) << ' ' << format_g17(r.adv_d_y) << ' ' << format_g17(r.cyc)
      << ' ' << format_g17(r.ssim_fwd) << ' ' << format_g17(r.ssim_bwd) << ' '
      << format_g17(r.total_g_fwd) << ' ' << format_g17(r.total_g_bwd) << '\n';
  return out.str();
}

TrainResult train(TrainState& state, const UnpairedDataset& dataset,
                  const std::filesystem::path& out_dir,
                  const std::function<void(const LossReport&)>& on_step) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  set_check_finite(state.config.checked_mode);

  {
    std::ofstream snapshot(out_dir / "config_snapshot.cfg");
    snapshot << serialize_config(state.config);
  }

  const fs::path log_path = out_dir / "loss_log.txt";
  const bool append = state.step > 0 && fs::exists(log_path);
  std::ofstream log(log_path, append ? std::ios::app : std::ios::trunc);
  if (!log) throw std::runtime_error("cannot open loss log " + log_path.string());
  if (!append) log << loss_log_header();

  const int64_t epoch_len = dataset.epoch_length();
  TrainResult result;
  while (state.step < static_cast<uint64_t>(state.config.steps)) {
    const uint64_t epoch =
        state.step * static_cast<uint64_t>(state.config.batch) / epoch_len;
    const ImageBatch batch = next_batch(dataset, epoch, state.step, state.config.batch);
    const LossReport report = training_step(state, batch);
    log << format_loss_log_line(report);
    log.flush();
    result.reports.push_back(report);
    if (on_step) on_step(report);
    if (state.step % static_cast<uint64_t>(state.config.checkpoint_every) == 0 &&
        state.step < static_cast<uint64_t>(state.config.steps)) {
      char name[48];
      std::snprintf(name, sizeof(name), "checkpoint_%06llu.uwct",
                    static_cast<unsigned long long>(state.step));
      save_checkpoint(state, out_dir / name);
    }
  }
  result.final_checkpoint = out_dir / "checkpoint_final.uwct";
  save_checkpoint(state, result.final_checkpoint);
  return result;
}

}  // namespace uwct
