#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "scs/zoo/model_zoo.hpp"

namespace scs::train {

// Layout, all integers and floats little-endian:
//   magic "SCSCKPT\0" | u32 version | u64 descriptor hash
//   u32 config_len | config text (key=value lines)
//   u32 blob_count | blobs...
// blob: u32 name_len | name | u8 kind (0 param, 1 buffer) | u32 ndim |
//       u64 dims[ndim] | f64 values[prod(dims)]
// Blobs appear in parameter declaration order, then buffers.
inline constexpr char kCheckpointMagic[8] = {'S', 'C', 'S', 'C', 'K', 'P', 'T', '\0'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointBlob {
    std::string name;
    bool is_buffer = false;
    Shape shape;
    std::vector<double> values;
};

struct Checkpoint {
    zoo::LayerVariantConfig config;
    std::uint64_t descriptor_hash = 0;
    std::vector<CheckpointBlob> blobs;
};

std::vector<std::uint8_t> encode_checkpoint(const zoo::Model& model);
Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes);

/// Writes atomically (temp file + rename).
void save_checkpoint(const zoo::Model& model, const std::filesystem::path& path);
Checkpoint read_checkpoint(const std::filesystem::path& path);

/// Rebuilds the model from the embedded config, verifies the descriptor hash
/// and copies every blob in. Throws CheckpointError on any mismatch.
std::unique_ptr<zoo::Model> load_model(const std::filesystem::path& path);
void restore_into(zoo::Model& model, const Checkpoint& ckpt);

}  // namespace scs::train
