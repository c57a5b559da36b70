#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "vageo/config.hpp"
#include "vageo/model.hpp"
#include "vageo/train.hpp"

// Binary checkpoint: "VAGEOCKP", u32 version, u64 header size, JSON header,
// then little-endian float64 tensor data in header order. See docs/checkpoint-format.md.
namespace vageo {

inline constexpr uint32_t kCheckpointVersion = 1;

struct CheckpointEntry {
  std::string name;
  std::string kind;  // param, buffer, adam_m, adam_v
  Shape shape;
  uint64_t offset = 0;  // in float64 elements from the start of the data section
};

struct CheckpointHeader {
  uint32_t version = kCheckpointVersion;
  Json config;
  int64_t epoch = 0;
  int64_t step = 0;
  int64_t adam_steps = 0;
  std::vector<CheckpointEntry> entries;
};

void save_checkpoint(const std::filesystem::path& path, const RunConfig& config, GeoLocalizer& model,
                     const Adam* optimizer, int64_t epoch, int64_t step);

CheckpointHeader read_checkpoint_header(const std::filesystem::path& path);

// Restores parameters, buffers and (when given) optimizer moments. Names and
// shapes must match the model exactly.
CheckpointHeader load_checkpoint(const std::filesystem::path& path, GeoLocalizer& model, Adam* optimizer);

}  // namespace vageo
