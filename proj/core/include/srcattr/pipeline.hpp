#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>

#include "srcattr/corpus.hpp"
#include "srcattr/encoder.hpp"
#include "srcattr/index.hpp"
#include "srcattr/principal.hpp"
#include "srcattr/projection.hpp"
#include "srcattr/synthetic.hpp"
#include "srcattr/trainer.hpp"

namespace srcattr {

/// Everything needed to reproduce a run end to end. Serialized into the
/// header of every artifact the pipeline writes.
struct PipelineConfig {
  corpus::SyntheticSpec synthetic;
  std::filesystem::path corpus_path;   // empty: use the generator
  std::filesystem::path evalset_path;  // empty: sample from held-out documents
  corpus::CorpusConfig corpus;
  double fraction = principal::kDefaultFraction;
  encoder::EncoderSpec encoder;
  contrastive::TrainConfig train;
  index::Method method = index::Method::SoftKnn;
  std::size_t k = 3;
  std::size_t queries_per_source = 10;
  std::uint64_t eval_seed = 11;
  std::size_t repeats = 1;
  std::size_t threads = 1;

  void validate() const;
};

/// Settings for desk-scale synthetic runs: 50 epochs, and a learning rate
/// suited to plain gradient descent on the summed loss.
PipelineConfig desk_preset();

/// Compact single-line JSON, keys in a fixed order.
std::string to_json(const PipelineConfig& cfg);
PipelineConfig pipeline_config_from_json(const std::string& json);

}  // namespace srcattr
