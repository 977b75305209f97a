#include "uwct/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "uwct/rng.hpp"

namespace uwct {

namespace fs = std::filesystem;

namespace {

constexpr uint64_t kShuffleStreamX = 0x5du;
constexpr uint64_t kShuffleStreamY = 0x6eu;
constexpr uint64_t kToyStreamX = 0x1000000u;
constexpr uint64_t kToyStreamY = 0x2000000u;
constexpr double kTwoPi = 6.28318530717958647692;

std::vector<fs::path> scan_one_domain(const fs::path& dir, size_t* skipped) {
  if (!fs::is_directory(dir)) {
    throw std::runtime_error("domain directory does not exist: " + dir.string());
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file()) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end(),
            [](const fs::path& a, const fs::path& b) { return a.filename() < b.filename(); });
  std::vector<fs::path> decodable;
  for (const auto& file : files) {
    if (decode_image(file).has_value()) {
      decodable.push_back(file);
    } else {
      std::fprintf(stderr, "warning: skipping undecodable file %s\n", file.c_str());
      ++*skipped;
    }
  }
  if (decodable.empty()) {
    throw std::runtime_error("domain directory has no decodable images: " + dir.string());
  }
  return decodable;
}

std::vector<size_t> permutation(size_t n, Rng rng) {
  std::vector<size_t> perm(n);
  for (size_t i = 0; i < n; ++i) perm[i] = i;
  for (size_t i = n; i > 1; --i) {
    std::swap(perm[i - 1], perm[rng.next_index(i)]);
  }
  return perm;
}

}  // namespace

int64_t UnpairedDataset::epoch_length() const {
  return static_cast<int64_t>(std::max(domain_x_paths.size(), domain_y_paths.size()));
}

UnpairedDataset scan_domains(const fs::path& dir_x, const fs::path& dir_y,
                             int64_t image_size, uint64_t seed) {
  UnpairedDataset dataset;
  dataset.image_size = image_size;
  dataset.seed = seed;
  dataset.domain_x_paths = scan_one_domain(dir_x, &dataset.skipped_x);
  dataset.domain_y_paths = scan_one_domain(dir_y, &dataset.skipped_y);
  return dataset;
}

std::vector<size_t> domain_permutation(const UnpairedDataset& dataset, uint64_t epoch,
                                       bool domain_y) {
  const size_t n = domain_y ? dataset.domain_y_paths.size() : dataset.domain_x_paths.size();
  const uint64_t tag = domain_y ? kShuffleStreamY : kShuffleStreamX;
  return permutation(n, Rng::stream(dataset.seed, tag * 0x100000000ull + epoch));
}

ImageBatch next_batch(const UnpairedDataset& dataset, uint64_t epoch, uint64_t step,
                      int64_t batch_size) {
  if (batch_size < 1) throw std::invalid_argument("next_batch: batch size must be >= 1");
  const int64_t epoch_len = dataset.epoch_length();
  const std::vector<size_t> perm_x = domain_permutation(dataset, epoch, false);
  const std::vector<size_t> perm_y = domain_permutation(dataset, epoch, true);

  const int64_t s = dataset.image_size;
  std::vector<float> xs, ys;
  xs.reserve(static_cast<size_t>(batch_size * 3 * s * s));
  ys.reserve(static_cast<size_t>(batch_size * 3 * s * s));
  ImageBatch batch;
  for (int64_t i = 0; i < batch_size; ++i) {
    const uint64_t pos = (step * batch_size + i) % static_cast<uint64_t>(epoch_len);
    const auto& path_x = dataset.domain_x_paths[perm_x[pos % perm_x.size()]];
    const auto& path_y = dataset.domain_y_paths[perm_y[pos % perm_y.size()]];
    for (const auto* entry : {&path_x, &path_y}) {
      std::optional<Tensor<float>> t = decode_resize_normalize(*entry, s);
      if (!t) {
        throw std::runtime_error("next_batch: failed to decode " + entry->string());
      }
      auto& dst = entry == &path_x ? xs : ys;
      dst.insert(dst.end(), t->values().begin(), t->values().end());
    }
    batch.x_sources.push_back(path_x.string());
    batch.y_sources.push_back(path_y.string());
  }
  batch.x = Tensor<float>::from_vector({batch_size, 3, s, s}, std::move(xs), false);
  batch.y = Tensor<float>::from_vector({batch_size, 3, s, s}, std::move(ys), false);
  return batch;
}

ImageU8 toy_pattern_image(int64_t size, uint64_t seed, const double gains[3]) {
  Rng rng(seed);
  ImageU8 image;
  image.width = size;
  image.height = size;
  image.pixels.resize(static_cast<size_t>(size) * size * 3);

  // Three sinusoids per channel; amplitudes sum to at most 0.45, so the raw
  // pattern stays inside [0.05, 0.95] and only the gains can push values to 0.
  struct Component {
    double amp, fx, fy, phase;
  };
  Component comps[3][3];
  for (int c = 0; c < 3; ++c) {
    for (int k = 0; k < 3; ++k) {
      comps[c][k].amp = 0.05 + 0.10 * rng.next_double();
      comps[c][k].fx = 0.5 + 2.5 * rng.next_double();
      comps[c][k].fy = 0.5 + 2.5 * rng.next_double();
      comps[c][k].phase = kTwoPi * rng.next_double();
    }
  }
  for (int64_t y = 0; y < size; ++y) {
    for (int64_t x = 0; x < size; ++x) {
      const double u = static_cast<double>(x) / static_cast<double>(size);
      const double v = static_cast<double>(y) / static_cast<double>(size);
      for (int c = 0; c < 3; ++c) {
        double value = 0.5;
        for (const Component& comp : comps[c]) {
          value += comp.amp * std::sin(kTwoPi * (comp.fx * u + comp.fy * v) + comp.phase);
        }
        value = std::clamp(value * gains[c], 0.0, 1.0);
        image.at(y, x, c) = static_cast<uint8_t>(std::lround(value * 255.0));
      }
    }
  }
  return image;
}

std::pair<fs::path, fs::path> make_toy_domains(const fs::path& out_dir,
                                               const ToyDomainOptions& options) {
  if (options.n_per_domain < 1 || options.size < 1) {
    throw std::invalid_argument("make_toy_domains: n_per_domain and size must be >= 1");
  }
  const fs::path dir_x = out_dir / "domain_x";
  const fs::path dir_y = out_dir / "domain_y";
  fs::create_directories(dir_x);
  fs::create_directories(dir_y);
  const double unit_gains[3] = {1.0, 1.0, 1.0};
  char name[32];
  for (int64_t i = 0; i < options.n_per_domain; ++i) {
    std::snprintf(name, sizeof(name), "toy_%04lld.png", static_cast<long long>(i));
    const uint64_t seed_x = Rng::stream(options.seed, kToyStreamX + i).next_u64();
    const uint64_t seed_y = Rng::stream(options.seed, kToyStreamY + i).next_u64();
    write_png(dir_x / name, toy_pattern_image(options.size, seed_x, options.gains));
    write_png(dir_y / name, toy_pattern_image(options.size, seed_y, unit_gains));
  }
  return {dir_x, dir_y};
}

}  // namespace uwct
