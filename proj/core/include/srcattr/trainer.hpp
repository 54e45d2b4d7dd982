#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "srcattr/encoder.hpp"
#include "srcattr/principal.hpp"
#include "srcattr/projection.hpp"

namespace srcattr::contrastive {

struct TrainConfig {
  double temperature = 0.1;
  double learning_rate = 1e-5;
  std::size_t batch_size = 64;
  std::size_t epochs = 150;
  std::uint64_t seed = 0;
  std::vector<std::size_t> hidden_dims = {kDefaultHiddenDim};
  std::size_t output_dim = kDefaultOutputDim;

  void validate() const;
};

/// Mean per-anchor loss of every epoch, in order.
struct LossTrace {
  std::vector<double> epoch_mean_loss;
};

struct TrainResult {
  ProjectionParams params;
  LossTrace trace;
};

/// Label-aware mini-batches: within each label, items are shuffled and cut
/// into groups of two (three when the count is odd, one for singleton
/// labels); groups are shuffled and packed into batches of at most
/// `batch_size` items without splitting a group. Every label present in a
/// batch therefore has at least two items unless it only has one overall.
std::vector<std::vector<std::size_t>> make_batches(std::span<const std::size_t> labels,
                                                   std::size_t batch_size,
                                                   std::uint64_t epoch_seed);

/// Plain mini-batch gradient descent on the summed NT-Xent loss. The base
/// encoder is frozen, so inputs are encoded once up front. Parameters are
/// kept float-representable after every step. Deterministic for a seed.
/// Throws InsufficientPositives unless two labels have two items each.
TrainResult train(std::span<const std::vector<double>> inputs,
                  std::span<const std::size_t> labels, const TrainConfig& cfg);

TrainResult train(const principal::PrincipalSet& principal, const encoder::Encoder& encoder,
                  const TrainConfig& cfg);

/// Encodes every selected window; labels index `principal.sources`.
void encode_principal(const principal::PrincipalSet& principal, const encoder::Encoder& encoder,
                      std::vector<std::vector<double>>& inputs, std::vector<std::size_t>& labels);

}  // namespace srcattr::contrastive
