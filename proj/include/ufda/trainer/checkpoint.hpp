#pragma once

#include <filesystem>
#include <memory>
#include <optional>

#include "ufda/trainer/model_state.hpp"

namespace ufda::trainer {

inline constexpr uint32_t kCheckpointVersion = 1;

// Binary container: magic, format version, JSON manifest (config, epoch, seed,
// bank order, optimizer steps, history rows), named float64 tensors, and a
// trailing FNV-1a checksum over everything before it.
void save_checkpoint(const ModelState& state, const std::filesystem::path& path);

// FormatError on bad magic, version or checksum; DimensionError when
// expected_dims is given and differs from the stored dims.
std::unique_ptr<ModelState> load_checkpoint(const std::filesystem::path& path,
                                            const std::optional<nets::NetDims>& expected_dims = std::nullopt);

}  // namespace ufda::trainer
