#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "uwct/image.hpp"
#include "uwct/tensor.hpp"

namespace uwct {

// Two unpaired image collections. Iteration order is a pure function of
// (seed, epoch): each domain is shuffled independently per epoch and the
// shorter domain wraps around, so one epoch covers the larger domain once.
struct UnpairedDataset {
  std::vector<std::filesystem::path> domain_x_paths;
  std::vector<std::filesystem::path> domain_y_paths;
  int64_t image_size = 256;
  uint64_t seed = 0;
  size_t skipped_x = 0;  // undecodable files dropped during the scan
  size_t skipped_y = 0;

  int64_t epoch_length() const;
};

struct ImageBatch {
  Tensor<float> x;  // N3SS in [-1, 1]
  Tensor<float> y;
  std::vector<std::string> x_sources;
  std::vector<std::string> y_sources;
};

// Lists decodable images of both directories in lexicographic order.
// Undecodable files are skipped with a warning on stderr and counted; an
// empty domain is fatal and names the offending directory.
UnpairedDataset scan_domains(const std::filesystem::path& dir_x,
                             const std::filesystem::path& dir_y, int64_t image_size,
                             uint64_t seed);

// Deterministic batch assembly: independent per-domain shuffles seeded by
// (seed, epoch, domain); position within the epoch is step % epoch_length,
// and batch entries take consecutive positions.
ImageBatch next_batch(const UnpairedDataset& dataset, uint64_t epoch, uint64_t step,
                      int64_t batch_size = 1);

// The shuffled index order of one domain for one epoch (exposed for tests).
std::vector<size_t> domain_permutation(const UnpairedDataset& dataset, uint64_t epoch,
                                       bool domain_y);

struct ToyDomainOptions {
  int64_t n_per_domain = 64;
  int64_t size = 64;
  // Channel attenuation applied to domain X samples, e.g. (0.3, 0.9, 1.0).
  double gains[3] = {0.3, 0.9, 1.0};
  uint64_t seed = 0;
};

// Writes PNG directories <out>/domain_x and <out>/domain_y. Domain Y holds
// smooth random color patterns (sums of low-frequency sinusoids clipped to
// [0, 1]); domain X holds fresh samples of the same process with the channel
// gains applied. Returns the two directory paths.
std::pair<std::filesystem::path, std::filesystem::path> make_toy_domains(
    const std::filesystem::path& out_dir, const ToyDomainOptions& options);

// A single toy pattern sample, exposed for held-out evaluation sets.
ImageU8 toy_pattern_image(int64_t size, uint64_t seed, const double gains[3]);

}  // namespace uwct
