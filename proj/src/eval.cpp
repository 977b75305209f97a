#include "uwct/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "uwct/losses.hpp"

namespace uwct {

namespace fs = std::filesystem;

namespace {

// [-1, 1] network range to [0, 1] image range.
Tensor<float> to_unit(const Tensor<float>& t) {
  return add_scalar(mul_scalar(t, 0.5f), 0.5f);
}

void channel_means(const Tensor<float>& unit, double out[3]) {
  const Shape& s = unit.shape();
  const int64_t plane = s[s.size() - 1] * s[s.size() - 2];
  const auto values = unit.values();
  for (int c = 0; c < 3; ++c) {
    double acc = 0;
    const float* p = values.data() + c * plane;
    for (int64_t i = 0; i < plane; ++i) acc += p[i];
    out[c] = acc / static_cast<double>(plane);
  }
}

}  // namespace

double gray_world_deviation(const Tensor<float>& image_unit) {
  Shape shape = image_unit.shape();
  if (shape.size() == 4 && shape[0] == 1) shape.erase(shape.begin());
  if (shape.size() != 3 || shape[0] != 3) {
    throw std::invalid_argument("gray_world_deviation: expected 3HW image, got " +
                                shape_str(image_unit.shape()));
  }
  double mu[3];
  channel_means(image_unit, mu);
  const double mean = (mu[0] + mu[1] + mu[2]) / 3.0;
  return (std::abs(mu[0] - mean) + std::abs(mu[1] - mean) + std::abs(mu[2] - mean)) / 3.0;
}

Tensor<float> correct_tensor(const TrainState& state, const Tensor<float>& input) {
  return state.gen_fwd.forward(input).detach();
}

ImageU8 correct_image(const TrainState& state, const ImageU8& image) {
  const ImageU8 resized =
      resize_bilinear(image, state.config.image_size, state.config.image_size);
  return denormalize_to_image(correct_tensor(state, normalize_to_tensor(resized)));
}

std::vector<EvalRecord> evaluate_directory(
    const TrainState& state, const fs::path& dir,
    const std::optional<fs::path>& strips_dir) {
  if (!fs::is_directory(dir)) {
    throw std::runtime_error("evaluation directory does not exist: " + dir.string());
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file()) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end(),
            [](const fs::path& a, const fs::path& b) { return a.filename() < b.filename(); });
  if (strips_dir) fs::create_directories(*strips_dir);

  SsimParams ssim = state.config.ssim;
  std::vector<EvalRecord> records;
  for (const auto& file : files) {
    std::optional<ImageU8> decoded = decode_image(file);
    if (!decoded) {
      std::fprintf(stderr, "warning: skipping undecodable file %s\n", file.c_str());
      continue;
    }
    const ImageU8 resized =
        resize_bilinear(*decoded, state.config.image_size, state.config.image_size);
    const Tensor<float> input = normalize_to_tensor(resized);
    const Tensor<float> output = correct_tensor(state, input);

    EvalRecord record;
    record.name = file.filename().string();
    const Tensor<float> input_unit = to_unit(input).detach();
    const Tensor<float> output_unit = to_unit(output).detach();
    channel_means(input_unit, record.channel_mean_before);
    channel_means(output_unit, record.channel_mean_after);
    record.gray_world_before = gray_world_deviation(input_unit);
    record.gray_world_after = gray_world_deviation(output_unit);
    record.ssim_luminance =
        mean_all(ssim_map(input_unit, output_unit, ssim)).item();
    {
      const Tensor<float> reconstructed = state.gen_bwd.forward(output).detach();
      record.cycle_l1 =
          mean_all(abs_op(sub(to_unit(reconstructed), input_unit))).item();
    }
    records.push_back(record);

    if (strips_dir) {
      const ImageU8 corrected = denormalize_to_image(output);
      ImageU8 strip;
      strip.height = resized.height;
      strip.width = resized.width * 2;
      strip.pixels.resize(static_cast<size_t>(strip.height) * strip.width * 3);
      for (int64_t y = 0; y < strip.height; ++y) {
        for (int64_t x = 0; x < resized.width; ++x) {
          for (int c = 0; c < 3; ++c) {
            strip.at(y, x, c) = resized.at(y, x, c);
            strip.at(y, x + resized.width, c) = corrected.at(y, x, c);
          }
        }
      }
      write_png(*strips_dir / (file.stem().string() + "_strip.png"), strip);
    }
  }
  return records;
}

EvalSummary summarize(const std::vector<EvalRecord>& records) {
  EvalSummary summary;
  summary.count = records.size();
  if (records.empty()) return summary;
  double cycle_acc = 0;
  size_t cycle_count = 0;
  for (const auto& r : records) {
    summary.mean_ssim += r.ssim_luminance;
    summary.mean_gray_world_before += r.gray_world_before;
    summary.mean_gray_world_after += r.gray_world_after;
    if (r.cycle_l1) {
      cycle_acc += *r.cycle_l1;
      ++cycle_count;
    }
  }
  const double n = static_cast<double>(records.size());
  summary.mean_ssim /= n;
  summary.mean_gray_world_before /= n;
  summary.mean_gray_world_after /= n;
  if (cycle_count > 0) summary.mean_cycle_l1 = cycle_acc / static_cast<double>(cycle_count);
  return summary;
}

std::string format_eval_report(const std::vector<EvalRecord>& records) {
  std::ostringstream out;
  out << "name\tssim_luminance\tmean_r_before\tmean_g_before\tmean_b_before"
         "\tmean_r_after\tmean_g_after\tmean_b_after"
         "\tgray_world_before\tgray_world_after\tcycle_l1\n";
  out.precision(6);
  out << std::fixed;
  for (const auto& r : records) {
    out << r.name << '\t' << r.ssim_luminance;
    for (double v : r.channel_mean_before) out << '\t' << v;
    for (double v : r.channel_mean_after) out << '\t' << v;
    out << '\t' << r.gray_world_before << '\t' << r.gray_world_after << '\t';
    if (r.cycle_l1) {
      out << *r.cycle_l1;
    } else {
      out << "n/a";
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace uwct
