#pragma once

#include <filesystem>

#include "pixelgame/data.hpp"
#include "pixelgame/game.hpp"

namespace pixelgame {

/// Checkpoint container, little-endian throughout:
///
///   bytes 0..3   magic "PGCK"
///   u32          format version (kCheckpointVersion)
///   u64          length L of the JSON header
///   L bytes      UTF-8 JSON: {"players": [{"variant", "dilations", "channels",
///                "use_mim", "seed"}, ...], "config": {...}, "epochs_completed", "history",
///                "tensors": [{"player", "name", "shape", "offset"}, ...]}
///   rest         float32 tensor data; offsets count floats from here
inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const TrainedGame& game, const std::filesystem::path& path);

/// Throws Version when the magic, version or tensor table does not match the
/// architecture described in the header.
TrainedGame load_checkpoint(const std::filesystem::path& path);

/// Writes one NumPy .npy (float32, C order) array.
void write_npy(const std::filesystem::path& path, const std::vector<int>& shape,
               const std::vector<float>& values);

/// For one image, exports per skip connection k of each player the MIM input
/// x, channel gate m2, spatial gate m3 and output z as
/// `<dir>/p<player>_skip<k>_{x,m2,m3,z}.npy`. Requires MIM-enabled players.
void dump_features(TrainedGame& game, const GrayImage& image, const std::filesystem::path& dir);

}  // namespace pixelgame
