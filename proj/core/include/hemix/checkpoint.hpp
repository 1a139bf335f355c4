#pragma once

#include <string>

#include "hemix/model.hpp"

namespace hemix {

// Single-file binary checkpoint: magic "HMXC", format-version byte, the full
// model config as JSON, then named parameter blobs with shape headers.
// Values are stored as little-endian float64 regardless of the kernel's
// real_t. See docs/file_formats.md for the exact layout.
void save_checkpoint(const std::string& path, const HemixModel& model);

// Rebuilds the model from the embedded config, then overwrites every
// parameter from the file. Throws ConfigError on version/format problems and
// InputError when parameter names or shapes do not match.
HemixModel load_checkpoint(const std::string& path);

inline constexpr char kCheckpointMagic[4] = {'H', 'M', 'X', 'C'};
inline constexpr uint8_t kCheckpointVersion = 1;

}  // namespace hemix
