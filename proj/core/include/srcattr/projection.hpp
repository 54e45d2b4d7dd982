#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace srcattr::contrastive {

/// Fully connected layer, `weight` is row-major `out x in`.
struct DenseLayer {
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<double> weight;
  std::vector<double> bias;

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

/// Weights of the projection MLP. ReLU sits between consecutive layers; the
/// last layer is linear and its output is L2-normalized by `project`.
struct ProjectionParams {
  std::vector<DenseLayer> layers;

  std::size_t input_dim() const noexcept;
  std::size_t output_dim() const noexcept;
  std::size_t parameter_count() const noexcept;

  /// Throws ShapeMismatch if layer shapes do not chain or buffers are sized
  /// wrong, InvalidConfig if any entry is non-finite.
  void validate() const;

  /// Same shapes, all entries zero.
  ProjectionParams zeros_like() const;

  /// Rounds every entry to the nearest float so the checkpoint format
  /// (32-bit floats) stores the parameters exactly.
  void round_to_float();

  /// Uniform Xavier/Glorot init in [-a, a], a = sqrt(6 / (fan_in + fan_out)),
  /// zero biases, rounded to float.
  static ProjectionParams xavier(std::size_t input_dim,
                                 std::span<const std::size_t> hidden_dims,
                                 std::size_t output_dim, std::uint64_t seed);

  friend bool operator==(const ProjectionParams&, const ProjectionParams&) = default;
};

constexpr double kNormEpsilon = 1e-12;
constexpr std::size_t kDefaultOutputDim = 64;
constexpr std::size_t kDefaultHiddenDim = 128;

/// Intermediate values kept for backpropagation.
struct ForwardCache {
  std::vector<std::vector<double>> inputs;  // input to each layer
  std::vector<std::vector<double>> pre;     // pre-activation of each layer
  std::vector<double> output;               // last layer output, pre-normalization
  double norm = 0.0;                        // ||output||
};

/// Forward pass plus normalization z = y / (||y|| + eps).
std::vector<double> project(std::span<const double> v, const ProjectionParams& params);

std::vector<double> project(std::span<const double> v, const ProjectionParams& params,
                            ForwardCache& cache);

/// Accumulates dL/dparams into `grad` given dL/dz for one item.
void backward(const ProjectionParams& params, const ForwardCache& cache,
              std::span<const double> grad_z, ProjectionParams& grad);

}  // namespace srcattr::contrastive
