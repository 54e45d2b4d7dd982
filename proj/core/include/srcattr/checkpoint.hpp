#pragma once

#include <filesystem>
#include <string>

#include "srcattr/projection.hpp"

namespace srcattr::contrastive {

constexpr int kCheckpointVersion = 1;

/// On-disk layout: a text header, one `key=value` per line,
///
///   srcattr-checkpoint
///   version=1
///   activation=relu
///   base_dim=<input dim>
///   d=<output dim>
///   layers=<count>
///   layer=<in>x<out>          (one per layer, in order)
///   meta=<single-line JSON>   (resolved pipeline config; may be empty)
///   end
///
/// followed by little-endian IEEE-754 float32 arrays, per layer in order:
/// the out x in row-major weight matrix, then the bias vector.
struct Checkpoint {
  ProjectionParams params;
  std::string meta;
};

void checkpoint_save(const ProjectionParams& params, const std::filesystem::path& path,
                     const std::string& meta = {});

/// Throws CorruptCheckpoint on a bad header, version mismatch, truncated or
/// oversized payload, or non-finite values.
Checkpoint checkpoint_load(const std::filesystem::path& path);

}  // namespace srcattr::contrastive
