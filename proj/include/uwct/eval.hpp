#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "uwct/image.hpp"
#include "uwct/trainer.hpp"

namespace uwct {

// Per-image evaluation metrics, all computed on [0, 1] images at the
// training resolution. gray_world_deviation is this artifact's scalar proxy
// for color cast (how far channel means stray from their common average);
// cycle_l1 is present when the backward generator reconstructs the input.
struct EvalRecord {
  std::string name;
  double ssim_luminance = 0;   // SSIM(input, output)
  double channel_mean_before[3] = {0, 0, 0};
  double channel_mean_after[3] = {0, 0, 0};
  double gray_world_before = 0;
  double gray_world_after = 0;
  std::optional<double> cycle_l1;
};

struct EvalSummary {
  size_t count = 0;
  double mean_ssim = 0;
  double mean_gray_world_before = 0;
  double mean_gray_world_after = 0;
  std::optional<double> mean_cycle_l1;
};

// mean over channels of |mu_c - mean(mu)| on a [0, 1] image tensor
// (13HW, 3HW or N3HW with N == 1).
double gray_world_deviation(const Tensor<float>& image_unit);

// denormalize(G(normalize(image))) at the checkpoint's training resolution.
Tensor<float> correct_tensor(const TrainState& state, const Tensor<float>& input);
ImageU8 correct_image(const TrainState& state, const ImageU8& image);

// Evaluates every decodable image of a directory, ordered by file name.
// `strips_dir`, when set, receives raw|corrected side-by-side PNGs.
std::vector<EvalRecord> evaluate_directory(
    const TrainState& state, const std::filesystem::path& dir,
    const std::optional<std::filesystem::path>& strips_dir = std::nullopt);

EvalSummary summarize(const std::vector<EvalRecord>& records);

// Tab-separated table with one documented header row.
std::string format_eval_report(const std::vector<EvalRecord>& records);

}  // namespace uwct
