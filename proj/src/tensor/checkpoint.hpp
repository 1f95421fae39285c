#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tensor/parameters.hpp"

namespace cajscc::nn {

// On-disk layout (all integers little-endian):
//   "CAJS" | u32 version | u32 count | count x record      parameter section
//   u32 count | count x record                             Adam section
//   record = u16 name_len | name (UTF-8) | u8 rank | rank x u32 dim | f32 values
// The parameter section starts with a zero-sized "@arch:<hex>" record holding
// the architecture hash, followed by parameters, then buffers. The Adam
// section holds "@step" and "<name>#m" / "<name>#v" records.
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointRecord {
    std::string name;
    std::vector<std::uint32_t> dims;
    std::vector<float> values;
};

struct CheckpointFile {
    std::vector<CheckpointRecord> parameters;
    std::vector<CheckpointRecord> adam;
};

void write_checkpoint_file(const std::string& path, const CheckpointFile& file);
CheckpointFile read_checkpoint_file(const std::string& path);

void save_checkpoint(const std::string& path, const ParameterSet& params, std::uint64_t arch_hash);
// Loads values into an already-constructed parameter set. Throws ConfigError
// when the stored architecture hash differs, FormatError on malformed files.
void load_checkpoint(const std::string& path, ParameterSet& params, std::uint64_t arch_hash);

}  // namespace cajscc::nn
