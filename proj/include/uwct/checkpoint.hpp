#pragma once

#include <filesystem>

#include "uwct/trainer.hpp"

namespace uwct {

inline constexpr uint32_t kCheckpointVersion = 1;

// Binary checkpoint: magic + format version + arch preset, the config
// snapshot, all parameters of the four networks as length-prefixed named
// blocks of little-endian 32-bit floats, the four optimizer states, both
// replay pools with their rng states, and the step counter. Writes are
// atomic (temp file + rename) and save -> load -> save is byte identical.
void save_checkpoint(const TrainState& state, const std::filesystem::path& path);
TrainState load_checkpoint(const std::filesystem::path& path);

}  // namespace uwct
