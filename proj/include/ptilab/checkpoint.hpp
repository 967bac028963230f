#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "ptilab/denoiser.hpp"
#include "ptilab/inversion.hpp"
#include "ptilab/schedule.hpp"

namespace ptilab {

inline constexpr int kCheckpointSchemaVersion = 1;

struct CheckpointMeta {
    std::uint64_t seed = 0;
    int training_steps = 0;
};

struct Checkpoint {
    DenoiserModel model;
    NoiseSchedule schedule;
    CheckpointMeta meta;
};

/// Checkpoint file: one JSON document
///   {"manifest": {schema_version, dims, schedule, seed, training_steps},
///    "tensors": {name: {"shape": [...], "data": base64}}}
/// with tensor data as little-endian IEEE-754 doubles.
std::string checkpoint_to_string(const DenoiserModel& model, const NoiseSchedule& sched,
                                 const CheckpointMeta& meta);
Checkpoint checkpoint_from_string(std::string_view text);

void save_checkpoint(const DenoiserModel& model, const NoiseSchedule& sched,
                     const CheckpointMeta& meta, const std::filesystem::path& path);
/// Throws IoError, SchemaError, CorruptionError or DimensionError.
Checkpoint load_checkpoint(const std::filesystem::path& path);

std::string base64_encode_doubles(std::span<const double> values);
/// Throws CorruptionError on malformed base64 and DimensionError (naming
/// `tensor`) when the decoded length differs from `expected_count`.
Vec base64_decode_doubles(std::string_view text, std::size_t expected_count,
                          std::string_view tensor);

/// Inversion results (trajectory plus tuned embeddings) in the same encoding.
std::string inversion_result_to_string(const InversionResult& result);
InversionResult inversion_result_from_string(std::string_view text);

}  // namespace ptilab
