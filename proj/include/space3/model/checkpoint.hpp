#pragma once

#include <cstdint>
#include <filesystem>

#include "json.hpp"
#include "space3/autodiff/parameter.hpp"
#include "space3/corpus/vocabulary.hpp"
#include "space3/model/config.hpp"

namespace space3::model {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Everything needed to resume or evaluate a run. Layout on disk:
///   8-byte magic, uint32 version, uint64 header size, JSON header
///   (config, vocabulary, step, meta, tensor index), raw little-endian doubles
///   in index order (column-major per tensor).
struct Checkpoint {
  ModelConfig config;
  corpus::Vocabulary vocab;
  ad::ParameterStore params;
  ad::ParameterStore optimizer_state;
  std::int64_t step = 0;
  nlohmann::json meta = nlohmann::json::object();
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
/// Throws std::runtime_error on unreadable files, a bad magic, an unsupported
/// version or truncated data.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace space3::model
