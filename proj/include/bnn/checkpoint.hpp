#pragma once

#include "bnn/network.hpp"

#include <filesystem>
#include <string>

namespace bnn {

inline constexpr int kCheckpointVersion = 1;

/// Versioned JSON document holding the full network state. Doubles round-trip exactly.
[[nodiscard]] std::string checkpoint_to_string(const NetworkState& state);
/// Throws CheckpointError on malformed content or a version mismatch.
[[nodiscard]] NetworkState checkpoint_from_string(const std::string& text);

void save_checkpoint(const NetworkState& state, const std::filesystem::path& path);
[[nodiscard]] NetworkState load_checkpoint(const std::filesystem::path& path);

}  // namespace bnn
