#include "srcattr/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "srcattr/contrastive.hpp"
#include "srcattr/error.hpp"

namespace srcattr::contrastive {

void TrainConfig::validate() const {
  if (!(temperature > 0.0)) throw Error(ErrorCode::InvalidConfig, "temperature must be positive");
  if (!(learning_rate > 0.0)) throw Error(ErrorCode::InvalidConfig, "learning_rate must be positive");
  if (batch_size < 2) throw Error(ErrorCode::InvalidConfig, "batch_size must be at least 2");
  if (output_dim == 0) throw Error(ErrorCode::InvalidConfig, "output_dim must be positive");
  for (auto h : hidden_dims) {
    if (h == 0) throw Error(ErrorCode::InvalidConfig, "hidden layer width must be positive");
  }
}

std::vector<std::vector<std::size_t>> make_batches(std::span<const std::size_t> labels,
                                                   std::size_t batch_size,
                                                   std::uint64_t epoch_seed) {
  std::mt19937_64 rng(epoch_seed);
  std::map<std::size_t, std::vector<std::size_t>> by_label;
  for (std::size_t i = 0; i < labels.size(); ++i) by_label[labels[i]].push_back(i);

  std::vector<std::vector<std::size_t>> groups;
  for (auto& [label, items] : by_label) {
    std::shuffle(items.begin(), items.end(), rng);
    std::size_t pos = 0;
    while (pos < items.size()) {
      std::size_t take = items.size() - pos == 3 ? 3 : std::min<std::size_t>(2, items.size() - pos);
      groups.emplace_back(items.begin() + static_cast<std::ptrdiff_t>(pos),
                          items.begin() + static_cast<std::ptrdiff_t>(pos + take));
      pos += take;
    }
  }
  std::shuffle(groups.begin(), groups.end(), rng);

  std::vector<std::vector<std::size_t>> batches;
  std::vector<std::size_t> current;
  for (const auto& g : groups) {
    if (!current.empty() && current.size() + g.size() > batch_size) {
      batches.push_back(std::move(current));
      current.clear();
    }
    current.insert(current.end(), g.begin(), g.end());
  }
  if (!current.empty()) batches.push_back(std::move(current));
  return batches;
}

TrainResult train(std::span<const std::vector<double>> inputs, std::span<const std::size_t> labels,
                  const TrainConfig& cfg) {
  cfg.validate();
  if (inputs.size() != labels.size() || inputs.empty()) {
    throw Error(ErrorCode::ShapeMismatch, "need one label per input and at least one input");
  }
  std::map<std::size_t, std::size_t> counts;
  for (auto l : labels) ++counts[l];
  std::size_t paired_labels = 0;
  for (const auto& [_, c] : counts) paired_labels += c >= 2 ? 1 : 0;
  if (paired_labels < 2) {
    throw Error(ErrorCode::InsufficientPositives,
                "training needs at least two sources with two principal windows each");
  }

  TrainResult result;
  result.params = ProjectionParams::xavier(inputs.front().size(), cfg.hidden_dims, cfg.output_dim,
                                           cfg.seed);
  std::mt19937_64 epoch_seeds(cfg.seed ^ 0x5eedba7c4e5ULL);
  std::vector<std::vector<double>> batch_inputs;
  std::vector<std::size_t> batch_labels;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    double loss_sum = 0.0;
    std::size_t anchor_sum = 0;
    for (const auto& batch : make_batches(labels, cfg.batch_size, epoch_seeds())) {
      if (batch.size() < 2) continue;
      batch_inputs.clear();
      batch_labels.clear();
      for (auto idx : batch) {
        batch_inputs.push_back(inputs[idx]);
        batch_labels.push_back(labels[idx]);
      }
      LossAndGradient lg;
      try {
        lg = nt_xent_grad(batch_inputs, batch_labels, cfg.temperature, result.params);
      } catch (const Error& e) {
        if (e.code() == ErrorCode::NoPositivePairs) continue;
        throw;
      }
      loss_sum += lg.loss;
      anchor_sum += lg.anchors;
      for (std::size_t li = 0; li < result.params.layers.size(); ++li) {
        auto& layer = result.params.layers[li];
        const auto& g = lg.grad.layers[li];
        for (std::size_t k = 0; k < layer.weight.size(); ++k) {
          layer.weight[k] -= cfg.learning_rate * g.weight[k];
        }
        for (std::size_t k = 0; k < layer.bias.size(); ++k) {
          layer.bias[k] -= cfg.learning_rate * g.bias[k];
        }
      }
      result.params.round_to_float();
    }
    result.trace.epoch_mean_loss.push_back(
        anchor_sum ? loss_sum / static_cast<double>(anchor_sum) : 0.0);
  }
  result.params.validate();
  return result;
}

void encode_principal(const principal::PrincipalSet& principal, const encoder::Encoder& encoder,
                      std::vector<std::vector<double>>& inputs, std::vector<std::size_t>& labels) {
  inputs.clear();
  labels.clear();
  for (std::size_t s = 0; s < principal.sources.size(); ++s) {
    for (const auto& sw : principal.sources[s].selected) {
      inputs.push_back(encoder.encode(sw.window));
      labels.push_back(s);
    }
  }
}

TrainResult train(const principal::PrincipalSet& principal, const encoder::Encoder& encoder,
                  const TrainConfig& cfg) {
  std::vector<std::vector<double>> inputs;
  std::vector<std::size_t> labels;
  encode_principal(principal, encoder, inputs, labels);
  if (inputs.empty()) {
    throw Error(ErrorCode::InsufficientPositives, "principal set is empty");
  }
  return train(inputs, labels, cfg);
}

}  // namespace srcattr::contrastive
